"""Poisson entropy and entropic times.

The occupancy process W(t) has k iid Poisson(t/k) coordinates (total jump
rate 1, rate 1/k per generator).  Its entropy is k * H(t/k) where H is the
entropy of a Poisson law; the entropic time t0(k, N) is where that entropy
reaches log N.  All logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize, special

from ._rng import make_rng

__all__ = [
    "poisson_entropy",
    "inverse_entropy",
    "entropic_time",
    "entropic_time_from_log",
    "f_lambda",
    "t_diam",
    "phase_threshold",
    "EntropicParams",
    "EntropicReport",
    "t_star",
    "q_statistic",
    "var_q1",
    "t_alpha",
    "psi",
    "concentration_experiment",
    "ConcentrationResult",
]


def _support(s: float) -> np.ndarray:
    # terms more than 12 sqrt(s+1) + 40 from the mean carry mass below e^-70
    width = 12.0 * math.sqrt(s + 1.0) + 40.0
    lo = max(0, math.floor(s - width))
    hi = math.ceil(s + width)
    return np.arange(lo, hi + 1, dtype=np.float64)


_HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)
# above this mean the literal series loses digits to the s log s cancellation
_SERIES_MAX_MEAN = 30.0
# both H and Var(Q_1) switch to their 1/s expansions here
_ASYMPTOTIC_MIN_MEAN = 1e8


def _stirlerr(x: np.ndarray) -> np.ndarray:
    """log(x!) - (x + 1/2) log x + x - log(2 pi)/2, for x >= 1."""
    out = np.empty_like(x)
    small = x <= 15
    xs = x[small]
    out[small] = special.gammaln(xs + 1.0) - (xs + 0.5) * np.log(xs) + xs - _HALF_LOG_2PI
    xl = x[~small]
    x2 = xl * xl
    out[~small] = (
        1 / 12 - (1 / 360 - (1 / 1260 - (1 / 1680 - 1 / (1188 * x2)) / x2) / x2) / x2
    ) / xl
    return out


def _bd0(x: np.ndarray, mu: float) -> np.ndarray:
    """Deviance term x log(x/mu) + mu - x without cancellation near x = mu."""
    out = np.empty_like(x)
    near = np.abs(x - mu) < 0.1 * (x + mu)
    xn = x[near]
    v = (xn - mu) / (xn + mu)
    acc = (xn - mu) * v
    term = 2 * xn * v
    v2 = v * v
    for j in range(1, 20):
        term = term * v2
        acc = acc + term / (2 * j + 1)
    out[near] = acc
    xf = x[~near]
    out[~near] = special.xlogy(xf, xf / mu) + mu - xf
    return out


def _log_pmf(ell, s: float) -> np.ndarray:
    """log Poisson(s) pmf at integer points, accurate to ~1e-15 absolute."""
    ell = np.asarray(ell, dtype=np.float64)
    s = float(s)
    if s == 0:
        return np.where(ell == 0, 0.0, -np.inf)
    out = np.full(ell.shape, -s)
    pos = ell > 0
    x = ell[pos]
    out[pos] = -_stirlerr(x) - _bd0(x, s) - _HALF_LOG_2PI - 0.5 * np.log(x)
    return out


def poisson_entropy(s: float) -> float:
    """Entropy (nats) of Poisson(s).

    Evaluates H(s) = s log(1/s) + s + e^{-s} sum_l s^l log(l!)/l!, summing l
    over the window where the pmf exceeds 1e-300.  For s > 30 the leading
    terms are folded into the sum (sum_l p_l = 1, sum_l l p_l = s) so that it
    reads sum_l -p_l log p_l, which avoids the s log s cancellation.
    Beyond s = 1e8 the asymptotic series is exact to double precision.
    """
    s = float(s)
    if s < 0 or math.isnan(s):
        raise ValueError(f"Poisson mean must be nonnegative, got {s}")
    if s == 0.0:
        return 0.0
    if s > _ASYMPTOTIC_MIN_MEAN:
        u = 1.0 / s
        return 0.5 * (math.log(2 * math.pi * math.e) + math.log(s)) - u / 12 - u * u / 24 - 19 * u**3 / 360
    ell = _support(s)
    logp = _log_pmf(ell, s)
    pmf = np.exp(logp)
    if s <= _SERIES_MAX_MEAN:
        series = math.fsum(pmf * special.gammaln(ell + 1.0))
        return s * math.log(1.0 / s) + s + series
    return math.fsum(-pmf * logp)


def inverse_entropy(h: float, *, rtol: float = 1e-13) -> float:
    """The unique s >= 0 with H(s) = h (H is strictly increasing).

    The root is bracketed by doubling, then polished with Brent's method.
    """
    if not h >= 0 or math.isinf(h):
        raise ValueError(f"entropy must be finite and nonnegative, got {h}")
    if h == 0:
        return 0.0
    lo, hi = 1e-12, 1.0
    while poisson_entropy(lo) > h:
        lo *= 1e-3
        if lo < 1e-300:
            raise ValueError(f"target entropy {h} too small to bracket")
    while poisson_entropy(hi) <= h:
        hi *= 2.0
        if math.isinf(hi):
            raise ValueError(f"target entropy {h} needs a Poisson mean beyond float range")
    return optimize.brentq(
        lambda s: poisson_entropy(s) - h, lo, hi, xtol=1e-300, rtol=rtol, maxiter=500
    )


def entropic_time_from_log(k: int, log_N: float) -> float:
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if log_N < math.log(2):
        raise ValueError("N must be at least 2")
    return k * inverse_entropy(log_N / k)


def entropic_time(k: int, N) -> float:
    """t0(k, N): the time at which k * H(t/k) = log N."""
    return entropic_time_from_log(k, math.log(N))


def f_lambda(lam: float) -> float:
    """H^{-1}(1/lambda), the per-generator time when k ~ lambda log N."""
    return inverse_entropy(1.0 / lam)


def t_diam(k: int, n) -> float:
    """log_k n."""
    if k < 2:
        raise ValueError(f"t_diam needs k >= 2, got {k}")
    if n < 2:
        raise ValueError(f"t_diam needs n >= 2, got {n}")
    return math.log(n) / math.log(k)


def phase_threshold(p: int, d: int) -> float:
    """k* = (log p^{d-1})^{1 + 2/(d-2)}, where the max in t_* switches branch."""
    return ((d - 1) * math.log(p)) ** (1.0 + 2.0 / (d - 2))


# -- Q statistic ---------------------------------------------------------------


def q_statistic(w, t: float, k: int) -> np.ndarray | float:
    """-log mu_t(w), the sum over coordinates of -log Poisson(t/k) pmf.

    ``w`` may carry leading batch dimensions; the last axis has length k.
    """
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    w = np.asarray(w, dtype=np.float64)
    if w.shape[-1] != k:
        raise ValueError(f"occupancy vectors must have {k} coordinates")
    lam = t / k
    q = -_log_pmf(w, lam).sum(axis=-1)
    return float(q) if q.ndim == 0 else q


def var_q1(t: float, k: int) -> float:
    """Var(-log nu(X)) for X ~ Poisson(t/k)."""
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    s = t / k
    if s == 0:
        return 0.0
    if s > _ASYMPTOTIC_MIN_MEAN:
        u = 1.0 / s
        return 0.5 - u / 12 - u * u / 8
    ell = _support(s)
    logp = _log_pmf(ell, s)
    pmf = np.exp(logp)
    mean = math.fsum(-pmf * logp)
    return math.fsum(pmf * (-logp - mean) ** 2)


def t_alpha(k: int, N, n=None, alpha: float = 0.0, *, target: str = "N") -> float:
    """Window time t_alpha solving E[Q_1(t_alpha)] = (log T + alpha sqrt(v k)) / k.

    T is N by default (so alpha = 0 gives t0(k, N)); ``target="n"`` uses the
    group order instead.  v = Var(Q_1(t0(k, T))).
    """
    if target == "N":
        log_T = math.log(N)
    elif target == "n":
        if n is None:
            raise ValueError("target='n' needs the group order n")
        log_T = math.log(n)
    else:
        raise ValueError(f"target must be 'N' or 'n', got {target!r}")
    t0 = entropic_time_from_log(k, log_T)
    if alpha == 0:
        return t0
    v = var_q1(t0, k)
    rhs = (log_T + alpha * math.sqrt(v * k)) / k
    if rhs <= 0:
        raise ValueError(f"alpha={alpha} is infeasible: target entropy {rhs * k} <= 0")
    return k * inverse_entropy(rhs)


def psi(alpha) -> float:
    """Presumed window profile: the standard Gaussian upper tail at alpha."""
    return special.ndtr(-np.asarray(alpha, dtype=float))[()]


# -- t_* report ------------------------------------------------------------------


@dataclass(frozen=True)
class EntropicParams:
    k: int
    p: int
    d: int

    def __post_init__(self):
        from .group import is_prime

        if self.k < 2:
            raise ValueError(f"k must be at least 2, got {self.k}")
        if self.d < 3:
            raise ValueError(f"d must be at least 3, got {self.d}")
        if not is_prime(self.p):
            raise ValueError(f"p must be prime, got {self.p}")

    @property
    def log_N(self) -> float:
        return (self.d - 1) * math.log(self.p)

    @property
    def log_n(self) -> float:
        return self.d * (self.d - 1) / 2 * math.log(self.p)

    @property
    def N(self) -> int:
        return self.p ** (self.d - 1)

    @property
    def n(self) -> int:
        return self.p ** (self.d * (self.d - 1) // 2)

    @property
    def kappa(self) -> float:
        return self.k / self.log_N

    @property
    def rho(self) -> float:
        return math.log(self.k) / math.log(self.log_n)

    @property
    def nu(self) -> float:
        return math.log(self.d / 2) / math.log(self.log_n)


@dataclass(frozen=True)
class EntropicReport:
    k: int
    p: int
    d: int
    s0: float
    t0: float
    t_diam: float
    t_star: float
    branch: str  # "entropic" or "diameter": which term attains the max
    threshold: float
    above_threshold: bool
    regime: str  # "sub", "crit" or "super" (k relative to log N)
    kappa: float
    rho: float
    nu: float
    h0: float
    omega: float
    h: float
    v: float
    alpha: float
    t_alpha: float
    asymptotic: float
    cross_checks: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


def t_star(
    k: int,
    p: int,
    d: int,
    *,
    alpha: float = 0.0,
    omega: float | None = None,
    omega_min: float = 1.0,
    regime_bounds: tuple[float, float] = (0.5, 2.0),
) -> EntropicReport:
    """Entropic and diameter times for the walk on H_{p,d} with k generators.

    ``regime_bounds`` are the kappa = k / log N cut points separating the
    sub, critical and super regimes.  The default slack omega is
    (v k)^{1/4}, floored at ``omega_min``.
    """
    prm = EntropicParams(k, p, d)
    log_N, log_n = prm.log_N, prm.log_n
    t0 = entropic_time_from_log(k, log_N)
    td = t_diam(k, prm.n)
    ts = max(t0, td)
    threshold = phase_threshold(p, d)
    above = k >= threshold
    v = var_q1(t0, k)
    if omega is None:
        omega = (v * k) ** 0.25
    omega = max(omega, omega_min)
    h0 = log_N if not above else (1.0 - 1.0 / prm.rho) * log_n
    lo, hi = regime_bounds
    kappa = prm.kappa
    regime = "sub" if kappa < lo else "super" if kappa > hi else "crit"
    loglog_n = math.log(log_n)

    checks = {
        "sub": k * math.exp(2 * log_N / k) / (2 * math.pi * math.e),
        "crit": k * f_lambda(kappa),
        "super": (1.0 / (prm.rho + prm.nu - 1.0)) * (2.0 / d) * log_n / loglog_n
        if prm.rho + prm.nu > 1.0
        else math.nan,
        "super_above_threshold": (1.0 / prm.rho) * log_n / loglog_n,
    }
    if regime == "super":
        key = "super_above_threshold" if above else "super"
    else:
        key = regime
    return EntropicReport(
        k=k,
        p=p,
        d=d,
        s0=t0 / k,
        t0=t0,
        t_diam=td,
        t_star=ts,
        branch="entropic" if t0 >= td else "diameter",
        threshold=threshold,
        above_threshold=above,
        regime=regime,
        kappa=kappa,
        rho=prm.rho,
        nu=prm.nu,
        h0=h0,
        omega=omega,
        h=h0 + omega,
        v=v,
        alpha=alpha,
        t_alpha=t_alpha(k, math.exp(log_N), alpha=alpha) if alpha else t0,
        asymptotic=checks[key],
        cross_checks=checks,
    )


# -- concentration -------------------------------------------------------------------


@dataclass(frozen=True)
class ConcentrationResult:
    estimate: float
    sigma: float
    t0: float
    t: float
    omega: float
    threshold: float
    trials: int
    seed: int | None


def concentration_experiment(
    k: int,
    N=None,
    xi: float = 0.0,
    trials: int = 10_000,
    seed: int | None = 0,
    *,
    log_N: float | None = None,
    omega: float | None = None,
    batch: int = 2_000,
) -> ConcentrationResult:
    """Monte-Carlo estimate of P(Q((1 + xi) t0) >= log N + omega).

    Pass ``log_N`` instead of ``N`` when N overflows a float.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    if log_N is None:
        log_N = math.log(N)
    t0 = entropic_time_from_log(k, log_N)
    if omega is None:
        omega = (var_q1(t0, k) * k) ** 0.25
    t = (1.0 + xi) * t0
    threshold = log_N + omega
    rng = make_rng(seed)
    hits = 0
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        W = rng.poisson(t / k, size=(b, k))
        hits += int(np.count_nonzero(q_statistic(W, t, k) >= threshold))
        done += b
    est = hits / trials
    return ConcentrationResult(
        estimate=est,
        sigma=math.sqrt(max(est * (1 - est), 1e-300) / trials),
        t0=t0,
        t=t,
        omega=omega,
        threshold=threshold,
        trials=trials,
        seed=seed,
    )
