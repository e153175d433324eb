import math

import mpmath as mp
import numpy as np
import pytest

from heisenwalk import (
    EntropicParams,
    concentration_experiment,
    entropic_time,
    entropic_time_from_log,
    f_lambda,
    inverse_entropy,
    phase_threshold,
    poisson_entropy,
    psi,
    q_statistic,
    t_alpha,
    t_diam,
    t_star,
    var_q1,
)

mp.mp.dps = 30


def mp_entropy(s):
    """Oracle: -sum p log p by high-precision direct summation."""
    s = mp.mpf(s)
    if s == 0:
        return mp.mpf(0)
    hi = int(float(s) + 40 * math.sqrt(float(s)) + 60)
    lo = max(0, int(float(s) - 40 * math.sqrt(float(s)) - 60))
    total = mp.mpf(0)
    for ell in range(lo, hi + 1):
        logp = -s + ell * mp.log(s) - mp.loggamma(ell + 1)
        total -= mp.exp(logp) * logp
    return total


def mp_var_q1(s):
    hi = int(s + 40 * math.sqrt(s) + 60)
    s = mp.mpf(s)
    terms = [(mp.exp(-s + l * mp.log(s) - mp.loggamma(l + 1)), -(-s + l * mp.log(s) - mp.loggamma(l + 1))) for l in range(hi + 1)]
    m = sum(p * q for p, q in terms)
    return sum(p * (q - m) ** 2 for p, q in terms)


def test_entropy_examples():
    assert poisson_entropy(0) == 0.0
    assert poisson_entropy(1) == pytest.approx(1.3048, abs=1e-4)
    approx = 0.5 * math.log(2 * math.pi * math.e * 100) - 1 / 1200
    assert abs(poisson_entropy(100) - approx) < 1e-3


@pytest.mark.parametrize("s", [1e-6, 0.01, 0.3, 1, 2.5, 7, 29.9, 30.1, 55, 300, 1e4, 1e6])
def test_entropy_against_mpmath(s):
    assert poisson_entropy(s) == pytest.approx(float(mp_entropy(s)), rel=1e-12, abs=1e-15)


def test_entropy_monotone_fine_grid():
    # spacing 1e-3 over [0, 20], then windows further out
    grids = [np.arange(0, 20, 1e-3)] + [c + np.arange(0, 2, 1e-3) for c in (100, 1000, 9998)]
    for g in grids:
        h = np.array([poisson_entropy(s) for s in g])
        assert np.all(np.diff(h) > 0)


def test_inverse_entropy_round_trip():
    for h in [1e-6, 0.1, 1.0, 3.0, 6.0, 10.0]:
        s = inverse_entropy(h)
        assert poisson_entropy(s) == pytest.approx(h, rel=1e-12)
    assert inverse_entropy(0) == 0
    for bad in (-1, math.inf, math.nan):
        with pytest.raises(ValueError):
            inverse_entropy(bad)


def test_entropic_time_example():
    # frozen from bisection on the mpmath entropy oracle
    s0 = float(mp.findroot(lambda s: mp_entropy(s) - 1, 0.58))
    assert s0 == pytest.approx(0.5756776780311322, rel=1e-12)
    t0 = entropic_time(2, math.e**2)
    assert t0 == pytest.approx(1.1513553560621934, rel=1e-10)
    assert entropic_time_from_log(2, 2.0) == pytest.approx(t0, rel=1e-12)


def test_t_diam_and_threshold():
    assert t_diam(25, 125) == pytest.approx(1.5)
    assert t_diam(17, 17) == pytest.approx(1.0)
    assert phase_threshold(5, 3) == pytest.approx((2 * math.log(5)) ** 3)
    assert phase_threshold(7, 4) == pytest.approx((3 * math.log(7)) ** 2)
    with pytest.raises(ValueError):
        t_diam(1, 10)


def test_f_lambda_is_inverse_entropy():
    assert poisson_entropy(f_lambda(2.0)) == pytest.approx(0.5, rel=1e-12)


def test_q_statistic():
    assert q_statistic(np.zeros(4, int), 2.0, 4) == pytest.approx(2.0)
    assert q_statistic([1], 1.0, 1) == pytest.approx(1.0)
    W = np.array([[0, 1, 2], [3, 0, 0]])
    direct = [-sum(math.log(math.exp(-0.5) * 0.5**x / math.factorial(x)) for x in w) for w in W]
    assert np.allclose(q_statistic(W, 1.5, 3), direct)


def test_var_q1():
    assert var_q1(0.0, 3) == 0.0
    assert var_q1(5.0, 5) == pytest.approx(float(mp_var_q1(1.0)), rel=1e-10)
    assert var_q1(40.0, 2) == pytest.approx(float(mp_var_q1(20.0)), rel=1e-9)


def test_t_alpha():
    assert t_alpha(10, 1e6, alpha=0.0) == entropic_time(10, 1e6)
    vals = [t_alpha(10, 1e6, alpha=a) for a in (-1, -0.5, 0, 0.5, 1)]
    assert all(np.diff(vals) > 0)
    with pytest.raises(ValueError):
        t_alpha(10, 1e6, alpha=-1e6)
    assert t_alpha(5, 100, n=10**6, target="n") == pytest.approx(entropic_time(5, 10**6))


def test_t_alpha_window_scaling_trend():
    # (t_a - t0) / (sqrt 2 t0 / sqrt k) -> alpha along a sub-regime schedule
    errs = []
    for k, logN in [(5, 60), (10, 200), (20, 700)]:
        N = math.exp(logN)
        t0 = entropic_time_from_log(k, logN)
        ta = t_alpha(k, N, alpha=1.0)
        errs.append(abs((ta - t0) / (math.sqrt(2) * t0 / math.sqrt(k)) - 1.0))
    assert errs[0] > errs[1] > errs[2]
    assert errs[-1] < 0.2


def test_params_validation():
    with pytest.raises(ValueError):
        EntropicParams(4, 6, 3)
    with pytest.raises(ValueError):
        EntropicParams(1, 5, 3)
    prm = EntropicParams(8, 5, 3)
    assert prm.N == 25 and prm.n == 125
    assert prm.kappa == pytest.approx(8 / math.log(25))


def test_t_star_report():
    rep = t_star(8, 5, 3)
    assert rep.t_star == max(rep.t0, rep.t_diam)
    assert rep.threshold == pytest.approx((math.log(25)) ** 3)
    assert rep.k * poisson_entropy(rep.s0) == pytest.approx(math.log(25), rel=1e-12)
    assert rep.omega >= 1.0
    assert rep.h == pytest.approx(rep.h0 + rep.omega)
    big = t_star(200, 5, 3)
    assert big.regime == "super" and big.above_threshold
    log_n = math.log(125)
    assert big.asymptotic == pytest.approx((1 / big.rho) * log_n / math.log(log_n))


def test_branch_switch_in_k_sweep():
    reps = [t_star(k, 5, 3) for k in range(2, 200)]
    diam = [r.t_diam for r in reps]
    assert all(np.diff(diam) < 0)
    assert {r.above_threshold for r in reps} == {True, False}


def test_concentration_deterministic_and_directional():
    a = concentration_experiment(100, log_N=30, xi=0.5, trials=2000, seed=3)
    b = concentration_experiment(100, log_N=30, xi=0.5, trials=2000, seed=3)
    assert a == b
    lo = concentration_experiment(100, log_N=30, xi=-0.5, trials=2000, seed=3)
    assert a.estimate > lo.estimate
    with pytest.raises(ValueError):
        concentration_experiment(10, 100, trials=0)


def test_large_mean_series_branch_is_continuous():
    below, above = poisson_entropy(1e8), poisson_entropy(1e8 * (1 + 1e-15))
    assert abs(above - below) < 1e-13
    assert abs(var_q1(1e8, 1) - var_q1(1e8 * (1 + 1e-15), 1)) < 1e-13
    assert poisson_entropy(1e30) == pytest.approx(0.5 * math.log(2 * math.pi * math.e * 1e30), rel=1e-15)


def test_solver_reports_unrepresentable_means():
    with pytest.raises(ValueError, match="float range"):
        inverse_entropy(500.0)
    assert entropic_time_from_log(1, 300.0) > 1e250


def test_psi_is_gaussian_tail():
    assert psi(0.0) == 0.5
    assert psi(1.0) == pytest.approx(float(mp.ncdf(-1)), rel=1e-14)
    assert np.allclose(psi([-2.0, 2.0]), [float(mp.ncdf(2)), float(mp.ncdf(-2))], rtol=1e-14)
