"""Random walks on random Cayley graphs of H_{p,d}.

Distributions over the group are plain float arrays of length n indexed by
element rank.  The walk is directed: from g it moves to g * Z_i with i
uniform, so one step maps mu to nu(x) = (1/k) sum_i mu(x Z_i^{-1}).

In continuous time the total jump rate is 1 and each generator fires at rate
1/k, so the occupancy W(t) has k iid Poisson(t/k) coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import special, stats

from ._rng import make_rng
from .entropic import poisson_entropy, q_statistic, var_q1
from .group import GroupElement, HeisenbergGroup

__all__ = [
    "DEFAULT_DENSE_CAP",
    "CapExceeded",
    "GeneratorSet",
    "sample_generators",
    "right_multiplication_table",
    "point_mass",
    "uniform",
    "step_distribution",
    "step_counts",
    "evolve",
    "project",
    "abelian_step_distribution",
    "tv_distance",
    "l2_collision",
    "TVRecord",
    "tv_curve",
    "poisson_window",
    "aux_process_sample",
    "TypicalitySpec",
    "typicality_check",
    "CollisionResult",
    "collision_experiment",
    "exact_collision_probability",
    "collision_probability_closed_form",
    "longest_gap",
    "GapTailResult",
    "longest_gap_tail_experiment",
    "support_sizes",
    "support_growth_check",
]

DEFAULT_DENSE_CAP = 2**24


class CapExceeded(RuntimeError):
    """The group is too large for dense (exact) computation."""


@dataclass(frozen=True)
class GeneratorSet:
    """A multiset Z = [Z_1, ..., Z_k] of elements of one group."""

    group: HeisenbergGroup
    elements: tuple[GroupElement, ...]
    seed: int | None = None

    def __post_init__(self):
        if not self.elements:
            raise ValueError("a generator set needs at least one element")
        for z in self.elements:
            if z.group != self.group:
                raise ValueError("generator from a different group")

    @classmethod
    def from_entries(cls, group: HeisenbergGroup, rows, seed=None) -> GeneratorSet:
        return cls(group, tuple(group.element(r) for r in rows), seed)

    @property
    def k(self) -> int:
        return len(self.elements)

    @property
    def entries(self) -> np.ndarray:
        return np.array([z.entries for z in self.elements], dtype=np.int64).reshape(
            self.k, self.group.m
        )

    def abelianized(self) -> np.ndarray:
        """Projected generators in Z_p^{d-1}, shape (k, d-1)."""
        return self.entries[:, : self.group.d - 1]

    def __len__(self) -> int:
        return self.k

    def __iter__(self):
        return iter(self.elements)

    def __getitem__(self, i: int) -> GroupElement:
        return self.elements[i]


def sample_generators(group: HeisenbergGroup, k: int, seed=None) -> GeneratorSet:
    """k iid uniform elements (uniform strictly-upper entries)."""
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    rng = make_rng(seed)
    rows = rng.integers(0, group.p, size=(k, group.m))
    return GeneratorSet.from_entries(group, rows, seed=seed if isinstance(seed, int) else None)


def _check_cap(group: HeisenbergGroup, cap: int | None) -> None:
    cap = DEFAULT_DENSE_CAP if cap is None else cap
    if group.n > cap:
        raise CapExceeded(
            f"group order {group.n} exceeds the dense cap {cap}; "
            "use Monte-Carlo trajectory mode instead"
        )


def right_multiplication_table(
    Z: GeneratorSet, *, inverse: bool = False, cap: int | None = None
) -> np.ndarray:
    """(k, n) array with entry [i, r] = rank(unrank(r) * Z_i) (or * Z_i^{-1})."""
    G = Z.group
    _check_cap(G, cap)
    X = G.all_entries()
    gens = [z.inverse() if inverse else z for z in Z]
    table = np.empty((Z.k, G.n), dtype=np.int64)
    for i, z in enumerate(gens):
        table[i] = G.rank_rows(G.mul_rows(X, np.array(z.entries, dtype=np.int64)))
    return table


def point_mass(n: int, r: int = 0) -> np.ndarray:
    mu = np.zeros(n)
    mu[r] = 1.0
    return mu


def uniform(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def _check_dist(mu: np.ndarray, n: int | None = None) -> np.ndarray:
    mu = np.asarray(mu, dtype=np.float64)
    if mu.ndim != 1 or (n is not None and mu.size != n):
        raise ValueError("distribution has the wrong shape")
    if np.any(mu < 0) or abs(mu.sum() - 1.0) > 1e-10:
        raise ValueError("distribution must be nonnegative and sum to 1")
    return mu


def step_distribution(mu, Z: GeneratorSet, *, inverse_table: np.ndarray | None = None) -> np.ndarray:
    """One step of the directed walk: nu(x) = (1/k) sum_i mu(x Z_i^{-1})."""
    mu = _check_dist(mu, Z.group.n)
    if inverse_table is None:
        inverse_table = right_multiplication_table(Z, inverse=True)
    return mu[inverse_table].mean(axis=0)


def step_counts(counts: np.ndarray, inverse_table: np.ndarray) -> np.ndarray:
    """Integer version of a step: number of length-(m+1) words reaching x."""
    return counts[inverse_table].sum(axis=0)


def evolve(Z: GeneratorSet, steps: int, mu0=None, *, cap: int | None = None) -> list[np.ndarray]:
    """Exact laws P_0, ..., P_steps of the discrete-time walk (from id by default)."""
    inv = right_multiplication_table(Z, inverse=True, cap=cap)
    mu = point_mass(Z.group.n) if mu0 is None else _check_dist(mu0, Z.group.n)
    out = [mu]
    for _ in range(steps):
        mu = mu[inv].mean(axis=0)
        out.append(mu)
    return out


def project(mu, group: HeisenbergGroup) -> np.ndarray:
    """Push a law on H_{p,d} forward to the Abelianisation Z_p^{d-1}.

    Abelian ranks are base-p digits of the super-diagonal, which are the low
    digits of the group rank.
    """
    mu = np.asarray(mu)
    # rank = N * (commutator digits) + abelian rank
    return mu.reshape(-1, group.abelian_order).sum(axis=0)


def _abelian_shift_table(Z: GeneratorSet, inverse: bool) -> np.ndarray:
    G = Z.group
    p, r = G.p, G.d - 1
    N = p**r
    digits = np.arange(N, dtype=np.int64)[:, None] // p ** np.arange(r) % p
    radix = p ** np.arange(r, dtype=np.int64)
    sign = -1 if inverse else 1
    A = Z.abelianized()
    return np.stack([((digits + sign * a) % p) @ radix for a in A])


def abelian_step_distribution(mu_a, Z: GeneratorSet) -> np.ndarray:
    """One step of the projected walk on Z_p^{d-1} with generators pi_A(Z_i)."""
    mu_a = np.asarray(mu_a)
    inv = _abelian_shift_table(Z, inverse=True)
    if mu_a.dtype.kind in "iu":
        return mu_a[inv].sum(axis=0)
    return mu_a[inv].mean(axis=0)


def tv_distance(mu, nu) -> float:
    mu = np.asarray(mu, dtype=np.float64)
    nu = np.asarray(nu, dtype=np.float64)
    if mu.shape != nu.shape:
        raise ValueError("distributions live on different spaces")
    return 0.5 * float(np.abs(mu - nu).sum())


def l2_collision(mu) -> float:
    """n * sum_x mu(x)^2 - 1: the unconditional collision diagnostic."""
    mu = np.asarray(mu, dtype=np.float64)
    return max(mu.size * float(np.dot(mu, mu)) - 1.0, 0.0)


def _tv_to_uniform(mu: np.ndarray) -> float:
    return 0.5 * float(np.abs(mu - 1.0 / mu.size).sum())


@dataclass(frozen=True)
class TVRecord:
    t: float
    tv: float
    tv_abelianized: float
    l2: float
    support: int


def poisson_window(t: float, threshold: float = 1e-14) -> tuple[np.ndarray, np.ndarray]:
    """Step counts m and Poisson(t) weights for m with weight above threshold."""
    if t < 0:
        raise ValueError("time must be nonnegative")
    if t == 0:
        return np.array([0]), np.array([1.0])
    lo = int(max(0, math.floor(t - 10 * math.sqrt(t) - 40)))
    hi = int(math.ceil(t + 10 * math.sqrt(t) + 40))
    m = np.arange(lo, hi + 1)
    w = stats.poisson.pmf(m, t)
    keep = w > threshold
    return m[keep], w[keep]


def tv_curve(
    Z: GeneratorSet,
    times: Iterable[float],
    time_model: str = "discrete",
    *,
    cap: int | None = None,
    threshold: float = 1e-14,
) -> list[TVRecord]:
    """TV distance to uniform of the walk from the identity at each time.

    ``time_model="discrete"`` takes integer step counts;
    ``"poissonized"`` mixes step-count laws with Poisson(t) weights.
    """
    if time_model not in ("discrete", "poissonized"):
        raise ValueError(f"unknown time model {time_model!r}")
    G = Z.group
    times = list(times)
    windows = []
    if time_model == "discrete":
        for t in times:
            if t < 0 or int(t) != t:
                raise ValueError("discrete times must be nonnegative integers")
        max_steps = int(max(times, default=0))
    else:
        windows = [poisson_window(t, threshold) for t in times]
        max_steps = int(max((w[0].max() for w in windows), default=0))
    laws = evolve(Z, max_steps, cap=cap)
    out = []
    for idx, t in enumerate(times):
        if time_model == "discrete":
            mu = laws[int(t)]
        else:
            m, w = windows[idx]
            mu = np.zeros(G.n)
            for mi, wi in zip(m, w):
                mu += wi * laws[mi]
            mu /= w.sum()
        out.append(
            TVRecord(
                t=float(t),
                tv=_tv_to_uniform(mu),
                tv_abelianized=_tv_to_uniform(project(mu, G)),
                l2=l2_collision(mu),
                support=int(np.count_nonzero(mu)),
            )
        )
    return out


# -- occupancy process and typicality ------------------------------------------


def aux_process_sample(k: int, t: float, seed=None, size: int | None = None) -> np.ndarray:
    """Occupancy W(t): k iid Poisson(t/k) counts (shape (size, k) if size given)."""
    if t < 0:
        raise ValueError("time must be nonnegative")
    rng = make_rng(seed)
    shape = (k,) if size is None else (size, k)
    return rng.poisson(t / k, size=shape)


VARIANTS = ("entropy-only", "once-count", "pair-window")


@dataclass(frozen=True)
class TypicalitySpec:
    """Parameters of a typicality set W of occupancy vectors.

    Every variant requires mu_t(w) <= e^{-h} and max_i w_i < cap.  The
    ``once-count`` variant also asks that J(w) = #{i : w_i = 1} be within
    eps/2 of t e^{-t/k} (relatively); ``pair-window`` asks that at least
    ``fraction * k`` coordinates lie in [eta s, s / eta].
    """

    variant: str = "entropy-only"
    h: float = 0.0
    eta: float = 0.2
    epsilon: float = 0.1
    cap: float = math.inf
    fraction: float = 0.8

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if not 0 < self.eta < 1:
            raise ValueError("eta must lie in (0, 1)")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")

    @classmethod
    def recommended(
        cls, k: int, t: float, cap: float = math.inf, variant: str = "entropy-only", *, sds: float = 3.0, **kw
    ) -> TypicalitySpec:
        """Entropy threshold ``sds`` standard deviations below E[Q(t)]."""
        h = k * poisson_entropy(t / k) - sds * math.sqrt(k * var_q1(t, k))
        return cls(variant=variant, h=h, cap=cap, **kw)


def typicality_check(w, spec: TypicalitySpec, t: float, k: int, s: float | None = None):
    """Membership of occupancy vector(s) ``w`` in the typicality set.

    ``s`` is the window centre for ``pair-window`` (default t/k).  Batched
    input of shape (B, k) gives a boolean array.
    """
    w = np.asarray(w)
    if w.shape[-1] != k:
        raise ValueError(f"occupancy vectors must have {k} coordinates")
    s = t / k if s is None else s
    ok = (q_statistic(w, t, k) >= spec.h) & (w.max(axis=-1) < spec.cap)
    if spec.variant == "once-count":
        target = t * math.exp(-t / k)
        J = np.count_nonzero(w == 1, axis=-1)
        ok &= np.abs(J - target) <= 0.5 * spec.epsilon * target
    elif spec.variant == "pair-window":
        inside = (w >= spec.eta * s) & (w <= s / spec.eta)
        ok &= np.count_nonzero(inside, axis=-1) >= spec.fraction * k
    return bool(ok) if np.ndim(ok) == 0 else ok


@dataclass(frozen=True)
class CollisionResult:
    estimate: float  # P(W = W' | typ)
    sigma: float
    p_typ: float  # estimated P(typ) = P(W, W' both typical)
    bound: float  # e^{-h} / P(typ)
    holds: bool  # estimate <= bound + 3 sigma
    trials: int
    seed: int | None
    h: float


def collision_experiment(
    group_or_p,
    k: int,
    t: float,
    trials: int,
    spec: TypicalitySpec | None = None,
    seed=0,
    *,
    batch: int = 10_000,
) -> CollisionResult:
    """Paired Monte-Carlo estimate of P(W = W' | typ) against e^{-h}/P(typ).

    ``group_or_p`` supplies the coordinate cap p (a HeisenbergGroup or an int).
    Without ``spec``, the entropy-only set with h three standard deviations
    below E[Q(t)] is used.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    p = group_or_p.p if isinstance(group_or_p, HeisenbergGroup) else int(group_or_p)
    if spec is None:
        spec = TypicalitySpec.recommended(k, t, cap=p)
    rng = make_rng(seed)
    n_typ = n_both = 0
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        W = rng.poisson(t / k, size=(b, k))
        W2 = rng.poisson(t / k, size=(b, k))
        typ = typicality_check(W, spec, t, k) & typicality_check(W2, spec, t, k)
        typ = np.atleast_1d(typ)
        same = np.all(W == W2, axis=1)
        n_typ += int(typ.sum())
        n_both += int((typ & same).sum())
        done += b
    p_typ = n_typ / trials
    est = n_both / n_typ if n_typ else 0.0
    sigma = math.sqrt(est * (1 - est) / n_typ) if n_typ else math.inf
    bound = math.exp(-spec.h) / p_typ if p_typ else math.inf
    return CollisionResult(
        estimate=est,
        sigma=sigma,
        p_typ=p_typ,
        bound=bound,
        holds=est <= bound + 3 * sigma,
        trials=trials,
        seed=seed if isinstance(seed, int) else None,
        h=spec.h,
    )


def exact_collision_probability(
    k: int, t: float, spec: TypicalitySpec | None = None, *, tol: float = 1e-16
) -> float:
    """sum_w P(W = w)^2 by enumeration of a truncated box of occupancies.

    With ``spec``, only w in the typicality set are summed, giving
    P(W = W', W in W).  Practical for small k only.
    """
    s = t / k
    if s == 0:
        vals = np.array([0])
    else:
        hi = int(stats.poisson.isf(tol, s)) + 2
        vals = np.arange(hi + 1)
    logp = stats.poisson.logpmf(vals, s) if s > 0 else np.zeros(1)
    grids = np.meshgrid(*([vals] * k), indexing="ij")
    W = np.stack([g.ravel() for g in grids], axis=1)
    lp = np.zeros(W.shape[0])
    for i in range(k):
        lp += logp[W[:, i]]
    prob = np.exp(2 * lp)
    if spec is not None:
        prob = prob[typicality_check(W, spec, t, k)]
    return math.fsum(prob)


def collision_probability_closed_form(k: int, t: float) -> float:
    """(sum_l nu(l)^2)^k = (e^{-2s} I_0(2s))^k with s = t/k."""
    return float(special.i0e(2.0 * t / k)) ** k


# -- longest gaps ----------------------------------------------------------------


def longest_gap(colour_sequence: Sequence[int], colour: int) -> int:
    """Length of the longest run containing no ball of ``colour``.

    If the colour is absent the whole sequence is one run.
    """
    seq = np.asarray(colour_sequence)
    if seq.size == 0:
        raise ValueError("sequence must be nonempty")
    pos = np.flatnonzero(seq == colour)
    edges = np.concatenate(([-1], pos, [seq.size]))
    return int(np.diff(edges).max() - 1)


@dataclass(frozen=True)
class GapTailResult:
    m: int
    r: int
    kappa: float
    eta: float
    threshold: float  # (kappa + 1) eta^{-2} m log r
    empirical: float
    bound: float  # r^{-kappa}
    sigma: float
    holds: bool
    trials: int
    seed: int | None


def longest_gap_tail_experiment(
    counts: Sequence[int],
    kappa: float,
    trials: int,
    seed=0,
    *,
    colour: int = 0,
    eta: float | None = None,
    batch: int = 2_000,
) -> GapTailResult:
    """Estimate P(L > (kappa+1) eta^{-2} m log r) for uniform ball orderings.

    ``counts[c]`` balls of colour c are shuffled uniformly; L is the longest
    run without colour ``colour``.  ``eta`` defaults to the tightest value
    with all count ratios in [eta^2, eta^-2].
    """
    counts = [int(c) for c in counts]
    m, r = len(counts), sum(counts)
    if eta is None:
        eta = math.sqrt(min(counts) / max(counts))
    threshold = (kappa + 1) * eta**-2 * m * math.log(r)
    base = np.repeat(np.arange(m), counts)
    rng = make_rng(seed)
    exceed = 0
    done = 0
    wc = counts[colour]
    while done < trials:
        b = min(batch, trials - done)
        perm = rng.permuted(np.broadcast_to(base, (b, r)), axis=1)
        pos = np.nonzero(perm == colour)[1].reshape(b, wc)
        edges = np.concatenate(
            (np.full((b, 1), -1), pos, np.full((b, 1), r)), axis=1
        )
        L = np.diff(edges, axis=1).max(axis=1) - 1
        exceed += int(np.count_nonzero(L > threshold))
        done += b
    bound = r**-kappa
    empirical = exceed / trials
    sigma = math.sqrt(bound * (1 - bound) / trials)
    return GapTailResult(
        m=m,
        r=r,
        kappa=kappa,
        eta=eta,
        threshold=threshold,
        empirical=empirical,
        bound=bound,
        sigma=sigma,
        holds=empirical <= bound + 3 * sigma,
        trials=trials,
        seed=seed if isinstance(seed, int) else None,
    )


# -- support growth --------------------------------------------------------------


def support_sizes(Z: GeneratorSet, m: int, *, cap: int | None = None) -> list[int]:
    """|supp(P_j)| for j = 0..m, by exact evolution of word counts."""
    inv = right_multiplication_table(Z, inverse=True, cap=cap)
    counts = np.zeros(Z.group.n, dtype=np.int64)
    counts[0] = 1
    sizes = [1]
    for _ in range(m):
        counts = np.minimum(step_counts(counts, inv), 1)
        sizes.append(int(counts.sum()))
    return sizes


def support_growth_check(Z: GeneratorSet, m: int, *, cap: int | None = None) -> bool:
    """Whether |supp(P_j)| <= k^j for every j <= m."""
    return all(size <= Z.k**j for j, size in enumerate(support_sizes(Z, m, cap=cap)))
