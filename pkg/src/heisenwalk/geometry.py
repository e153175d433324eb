"""Lattice balls, typical distance and the random-order word sampler.

B_k(R) is the directed lattice ball {x in Z_+^k : sum x <= R}; the Cayley
ball of radius R around the identity is compared against it through the
Abelianisation.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._rng import make_rng, randbelow
from .walk import (
    DEFAULT_DENSE_CAP,
    GeneratorSet,
    _abelian_shift_table,
    _check_cap,
    right_multiplication_table,
)

__all__ = [
    "ball_size",
    "lattice_ball_points",
    "m_star",
    "default_omega",
    "m_k",
    "DistanceHistogram",
    "bfs_distances",
    "abelian_bfs_distances",
    "typical_distance",
    "CountingBoundRow",
    "counting_bound_check",
    "unrank_ball_point",
    "sample_uniform_ball",
    "random_order_word",
    "ball_word_distribution",
]


def ball_size(k: int, R: float) -> int:
    """|B_k(R)| = C(floor(R) + k, k), exactly."""
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if R < 0:
        raise ValueError(f"radius must be nonnegative, got {R}")
    return math.comb(math.floor(R) + k, k)


def lattice_ball_points(k: int, R: int) -> list[tuple[int, ...]]:
    """All points of B_k(R), in the order used by :func:`unrank_ball_point`."""
    return [unrank_ball_point(k, R, u) for u in range(ball_size(k, R))]


def m_star(k: int, p: int, d: int) -> float:
    """M*_k = k p^{(d-1)/k} / e."""
    return k * math.exp((d - 1) * math.log(p) / k) / math.e


def default_omega(k: int, p: int, d: int) -> float:
    """max{log^2 k, k / p^{(d-1)/(2k)}}, floored at 1."""
    w = max(math.log(k) ** 2, k / math.exp((d - 1) * math.log(p) / (2 * k)))
    return max(w, 1.0)


def m_k(k: int, p: int, d: int, omega: float | None = None) -> int:
    """Minimal integer R with |B_k(R)| >= e^omega p^{d-1}."""
    if omega is None:
        omega = default_omega(k, p, d)
    if omega < 0:
        raise ValueError("omega must be nonnegative")
    log_target = omega + (d - 1) * math.log(p)

    def big_enough(R: int) -> bool:
        size = ball_size(k, R)
        # exact comparison when the target is an integer
        if omega == 0:
            return size >= p ** (d - 1)
        return math.log(size) >= log_target

    hi = 1
    while not big_enough(hi):
        hi *= 2
    lo = 0 if big_enough(0) else hi // 2
    if big_enough(lo):
        return lo
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if big_enough(mid):
            hi = mid
        else:
            lo = mid
    return hi


# -- BFS -------------------------------------------------------------------------


@dataclass
class DistanceHistogram:
    """Number of group elements at each directed distance from the identity."""

    counts: dict[int, int]
    unreachable: int
    n: int
    distances: np.ndarray | None = field(default=None, repr=False)

    @property
    def radius(self) -> int:
        return max(self.counts)

    def cumulative(self) -> list[tuple[int, int]]:
        total, out = 0, []
        for r in sorted(self.counts):
            total += self.counts[r]
            out.append((r, total))
        return out

    def ball_sizes(self) -> np.ndarray:
        """|B(R)| for R = 0..radius."""
        sizes = np.zeros(self.radius + 1, dtype=np.int64)
        for r, c in self.counts.items():
            sizes[r] = c
        return np.cumsum(sizes)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["distance", "count"])
        for r in sorted(self.counts):
            w.writerow([r, self.counts[r]])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, n: int) -> DistanceHistogram:
        rows = list(csv.DictReader(io.StringIO(text)))
        counts = {int(r["distance"]): int(r["count"]) for r in rows}
        return cls(counts=counts, unreachable=n - sum(counts.values()), n=n)


def _bfs(table: np.ndarray, n: int) -> np.ndarray:
    dist = np.full(n, -1, dtype=np.int32)
    dist[0] = 0
    frontier = np.array([0], dtype=np.int64)
    level = 0
    while frontier.size:
        level += 1
        nxt = table[:, frontier].ravel()
        nxt = np.unique(nxt[dist[nxt] < 0])
        dist[nxt] = level
        frontier = nxt
    return dist


def _histogram(dist: np.ndarray, keep: bool) -> DistanceHistogram:
    reached = dist[dist >= 0]
    values, counts = np.unique(reached, return_counts=True)
    return DistanceHistogram(
        counts={int(v): int(c) for v, c in zip(values, counts)},
        unreachable=int(dist.size - reached.size),
        n=int(dist.size),
        distances=dist if keep else None,
    )


def bfs_distances(
    Z: GeneratorSet, *, cap: int | None = None, keep_distances: bool = True
) -> DistanceHistogram:
    """Directed graph distance from the identity along edges g -> g Z_i."""
    table = right_multiplication_table(Z, cap=cap)
    return _histogram(_bfs(table, Z.group.n), keep_distances)


def abelian_bfs_distances(Z: GeneratorSet, *, keep_distances: bool = True) -> DistanceHistogram:
    """BFS on the projected Cayley graph of Z_p^{d-1}."""
    table = _abelian_shift_table(Z, inverse=False)
    return _histogram(_bfs(table, Z.group.abelian_order), keep_distances)


def typical_distance(hist: DistanceHistogram, beta: float) -> int:
    """D(beta): minimal R whose Cayley ball holds at least beta * n elements."""
    if not 0 < beta < 1:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    need = beta * hist.n
    for r, total in hist.cumulative():
        if total >= need:
            return r
    raise ValueError(
        f"only {hist.n - hist.unreachable} of {hist.n} elements are reachable "
        f"({hist.unreachable} unreachable); beta={beta} is not attained"
    )


@dataclass(frozen=True)
class CountingBoundRow:
    R: int
    ball: int  # |B(R)| in the Cayley graph
    abelian_image: int  # L: cosets of [G,G] met by B(R)
    abelian_ball: int  # |B_A(R)| from BFS on Z_p^{d-1}
    lattice_ball: int  # |B_k(R)|
    commutator_order: int
    sharp_ok: bool  # ball <= L |[G,G]| and L = |B_A(R)|
    coarse_ok: bool  # ball <= |[G,G]| |B_k(R)|

    @property
    def ok(self) -> bool:
        return self.sharp_ok and self.coarse_ok


def counting_bound_check(
    Z: GeneratorSet,
    R: int | Sequence[int] | None = None,
    *,
    hist: DistanceHistogram | None = None,
    cap: int | None = None,
) -> list[CountingBoundRow]:
    """Check |B(R)| <= L |[G,G]| <= p^{(d-1)(d-2)/2} |B_k(R)| at each radius.

    Radii default to 0..radius of the BFS.  Use ``all(r.ok for r in rows)``.
    """
    G = Z.group
    if hist is None or hist.distances is None:
        hist = bfs_distances(Z, cap=cap)
    dist = hist.distances
    ab_dist = abelian_bfs_distances(Z).distances
    if R is None:
        radii = range(hist.radius + 1)
    elif isinstance(R, (int, np.integer)):
        radii = [int(R)]
    else:
        radii = [int(r) for r in R]
    N = G.abelian_order
    ab_rank = np.arange(G.n, dtype=np.int64) % N
    # each coset is first met at the minimum distance over its elements
    reached = dist >= 0
    first = np.full(N, np.iinfo(np.int32).max, dtype=np.int64)
    np.minimum.at(first, ab_rank[reached], dist[reached])
    rows = []
    cG = G.commutator_order
    for r in radii:
        ball = int(np.count_nonzero(reached & (dist <= r)))
        L = int(np.count_nonzero(first <= r))
        LA = int(np.count_nonzero((ab_dist >= 0) & (ab_dist <= r)))
        lat = ball_size(Z.k, r)
        rows.append(
            CountingBoundRow(
                R=r,
                ball=ball,
                abelian_image=L,
                abelian_ball=LA,
                lattice_ball=lat,
                commutator_order=cG,
                sharp_ok=ball <= L * cG and L == LA and LA <= lat,
                coarse_ok=ball <= cG * lat,
            )
        )
    return rows


# -- uniform ball sampler -----------------------------------------------------------


def unrank_ball_point(k: int, R: int, u: int) -> tuple[int, ...]:
    """The u-th point of B_k(R) in colexicographic order.

    Points are ordered by last coordinate first; the slice with x_k = j holds
    |B_{k-1}(R - j)| = C(R - j + k - 1, k - 1) points.
    """
    if not 0 <= u < ball_size(k, R):
        raise ValueError(f"index {u} out of range for B_{k}({R})")
    x = [0] * k
    for i in range(k - 1, 0, -1):
        j = 0
        while True:
            size = math.comb(R - j + i, i)
            if u < size:
                break
            u -= size
            j += 1
        x[i] = j
        R -= j
    x[0] = u
    return tuple(x)


def sample_uniform_ball(k: int, R: int, seed=None, size: int | None = None):
    """Exactly uniform point(s) of B_k(R), by unranking a uniform index."""
    rng = make_rng(seed)
    total = ball_size(k, R)
    R = math.floor(R)
    if size is None:
        return np.array(unrank_ball_point(k, R, randbelow(rng, total)), dtype=np.int64)
    return np.array(
        [unrank_ball_point(k, R, randbelow(rng, total)) for _ in range(size)], dtype=np.int64
    ).reshape(size, k)


def random_order_word(A: Sequence[int], seed=None) -> np.ndarray:
    """Letter i repeated A[i] times, in a uniformly random order."""
    A = np.asarray(A, dtype=np.int64)
    if np.any(A < 0):
        raise ValueError("occupancy must be nonnegative")
    rng = make_rng(seed)
    return rng.permutation(np.repeat(np.arange(A.size), A))


def ball_word_distribution(Z: GeneratorSet, R: int, *, cap: int | None = None) -> np.ndarray:
    """Exact law of S = product of a random-order word with A ~ Unif(B_k(R)).

    Enumerates every occupancy and every distinct ordering, so only for
    small k and R.
    """
    G = Z.group
    _check_cap(G, cap if cap is not None else DEFAULT_DENSE_CAP)
    gens = Z.entries
    mu = np.zeros(G.n)
    points = lattice_ball_points(Z.k, R)
    for A in points:
        letters = np.repeat(np.arange(Z.k), A)
        orders = set(itertools.permutations(letters.tolist()))
        hits = Counter()
        for word in orders:
            x = np.zeros(G.m, dtype=np.int64)
            for i in word:
                x = G.mul_rows(x, gens[i])
            hits[int(G.rank_rows(x))] += 1
        for r, c in hits.items():
            mu[r] += c / len(orders)
    return mu / len(points)
