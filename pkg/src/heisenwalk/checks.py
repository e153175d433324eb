"""Cross-module property groups, run by ``heisenwalk verify``.

Each group draws its cases from the stream SeedSequence([seed, index]) so a
failure can be replayed on its own.  A failing group reports the first
counterexample it met.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import ball_size, counting_bound_check
from .group import (
    HeisenbergGroup,
    d3_product_formula,
    step2_decomposition,
    word_product,
    word_stats,
)
from .walk import (
    evolve,
    l2_collision,
    project,
    right_multiplication_table,
    sample_generators,
    step_distribution,
    support_growth_check,
    abelian_step_distribution,
    uniform,
)

FAULTS = ("transpose-c",)


@dataclass(frozen=True)
class CheckResult:
    group: str
    passed: bool
    cases: int
    seed: tuple[int, int]
    counterexample: str = ""


def _rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, index])))


def _dump(**kw) -> str:
    return json.dumps(kw, sort_keys=True, default=lambda x: np.asarray(x).tolist())


def _group_axioms(rng, trials, faults):
    cases = 0
    for p, d in [(3, 3), (2, 4), (5, 3)]:
        G = HeisenbergGroup(p, d)
        e = G.identity()
        for _ in range(trials // 3):
            x, y, z = (G.random_element(rng) for _ in range(3))
            cases += 1
            if (x * y) * z != x * (y * z):
                return cases, _dump(p=p, d=d, law="associativity", x=x.entries, y=y.entries, z=z.entries)
            if x * e != x or e * x != x or not (x * x.inverse()).is_identity():
                return cases, _dump(p=p, d=d, law="identity/inverse", x=x.entries)
            if G.unrank(G.rank(x)) != x:
                return cases, _dump(p=p, d=d, law="rank/unrank", x=x.entries)
    return cases, ""


def _d3_product(rng, trials, faults):
    G = HeisenbergGroup(7, 3)
    for case in range(trials):
        k = int(rng.integers(1, 6))
        Z = sample_generators(G, k, rng)
        word = rng.integers(0, k, size=int(rng.integers(0, 51)))
        if word_product(Z, word) != d3_product_formula(Z, word):
            return case + 1, _dump(p=7, generators=Z.entries, word=word)
    return trials, ""


def _step2(rng, trials, faults):
    transpose = "transpose-c" in faults
    cases = 0
    for p in (5, 13):
        G = HeisenbergGroup(p, 3)
        for _ in range(trials // 2):
            cases += 1
            k = int(rng.integers(2, 6))
            Z = sample_generators(G, k, rng)
            word = rng.integers(0, k, size=int(rng.integers(0, 31)))
            if step2_decomposition(Z, word, transpose=transpose) != word_product(Z, word):
                return cases, _dump(p=p, generators=Z.entries, word=word, fault=sorted(faults))
    return cases, ""


def _coupling(rng, trials, faults):
    """Equal occupancy and pair counts force equal products (d = 3)."""
    G = HeisenbergGroup(5, 3)
    cases = 0
    for _ in range(max(1, trials // 20)):
        k = int(rng.integers(2, 4))
        Z = sample_generators(G, k, rng)
        w = rng.integers(0, 3, size=k)
        letters = np.repeat(np.arange(k), w).tolist()
        seen = {}
        for order in set(itertools.permutations(letters)):
            cases += 1
            st = word_stats(order, k)
            key = (st.c.tobytes(), st.w.tobytes())
            S = word_product(Z, order)
            if S.entries[:2] != word_product(Z, letters).entries[:2]:
                return cases, _dump(generators=Z.entries, word=order, law="abelian part")
            if key in seen and seen[key][0] != S:
                return cases, _dump(generators=Z.entries, word=order, other=seen[key][1])
            seen.setdefault(key, (S, order))
    return cases, ""


def _walk(rng, trials, faults):
    cases = 0
    for p, k in [(3, 3), (3, 6), (5, 3)]:
        G = HeisenbergGroup(p, 3)
        Z = sample_generators(G, k, rng)
        inv = right_multiplication_table(Z, inverse=True)
        u = uniform(G.n)
        if np.max(np.abs(step_distribution(u, Z, inverse_table=inv) - u)) > 1e-10:
            return cases, _dump(p=p, generators=Z.entries, law="uniform fixed")
        laws = evolve(Z, 12)
        ab = np.zeros(G.abelian_order)
        ab[0] = 1.0
        prev = 1.0
        for t, mu in enumerate(laws):
            cases += 1
            tv = 0.5 * float(np.abs(mu - 1.0 / G.n).sum())
            tva = 0.5 * float(np.abs(project(mu, G) - 1.0 / G.abelian_order).sum())
            bad = None
            if abs(mu.sum() - 1) > 1e-10:
                bad = "normalization"
            elif tv > prev + 1e-12:
                bad = "tv non-increasing"
            elif tva > tv + 1e-12:
                bad = "projection contraction"
            elif 2 * tv**2 > l2_collision(mu) + 1e-12:
                bad = "2 tv^2 <= l2"
            elif not np.allclose(project(mu, G), ab, atol=1e-12):
                bad = "pushforward commutes"
            if bad:
                return cases, _dump(p=p, generators=Z.entries, t=t, law=bad)
            prev = tv
            ab = abelian_step_distribution(ab, Z)
    return cases, ""


def _counting(rng, trials, faults):
    cases = 0
    for p, k in [(3, 3), (3, 5), (5, 4)]:
        Z = sample_generators(HeisenbergGroup(p, 3), k, rng)
        for row in counting_bound_check(Z):
            cases += 1
            if not row.ok:
                return cases, _dump(p=p, generators=Z.entries, R=row.R)
    return cases, ""


def _ball(rng, trials, faults):
    cases = 0
    for k in range(1, 5):
        for R in range(13):
            cases += 1
            brute = sum(1 for x in itertools.product(range(R + 1), repeat=k) if sum(x) <= R)
            if ball_size(k, R) != brute:
                return cases, _dump(k=k, R=R, brute=brute)
    return cases, ""


def _support(rng, trials, faults):
    cases = 0
    for p, k in [(2, 2), (3, 3), (5, 4)]:
        cases += 1
        Z = sample_generators(HeisenbergGroup(p, 3), k, rng)
        if not support_growth_check(Z, 4):
            return cases, _dump(p=p, generators=Z.entries)
    return cases, ""


GROUPS: dict[str, Callable] = {
    "group-axioms": _group_axioms,
    "d3-product": _d3_product,
    "step2-decomposition": _step2,
    "word-stats-coupling": _coupling,
    "walk-invariants": _walk,
    "counting-bound": _counting,
    "ball-size": _ball,
    "support-growth": _support,
}


def run_checks(
    seed: int = 0,
    trials: int = 200,
    faults=(),
    groups=None,
) -> list[CheckResult]:
    """Run the named property groups (all by default)."""
    faults = set(faults)
    unknown = faults - set(FAULTS)
    if unknown:
        raise ValueError(f"unknown faults {sorted(unknown)}; known: {list(FAULTS)}")
    names = list(GROUPS) if groups is None else list(groups)
    out = []
    for name in names:
        if name not in GROUPS:
            raise ValueError(f"unknown check group {name!r}")
        index = list(GROUPS).index(name)
        cases, cex = GROUPS[name](_rng(seed, index), trials, faults)
        out.append(CheckResult(name, not cex, cases, (seed, index), cex))
    return out
