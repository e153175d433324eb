"""Monte-Carlo probes of the occupancy process W(t) ~ Poisson(t/k)^k.

Three experiments: concentration of Q = -log P(W) around log N on either
side of t0, the collision bound P(W = W' | typ) <= e^{-h} / P(typ), and the
longest-gap tail for a random ordering of two colours.
"""

from heisenwalk.entropic import concentration_experiment
from heisenwalk.walk import (
    collision_experiment,
    collision_probability_closed_form,
    exact_collision_probability,
    longest_gap_tail_experiment,
)

print("P(Q((1+xi) t0) >= log N + omega), k=400, log N=100")
for xi in (-0.5, -0.1, 0.0, 0.1, 0.5):
    r = concentration_experiment(400, log_N=100, xi=xi, trials=5000, seed=1)
    print(f"  xi={xi:+.1f}  estimate={r.estimate:.4f}  (omega={r.omega:.2f})")

print("\ncollision probability of two independent copies")
for k, t in [(2, 1.0), (3, 2.0)]:
    print(f"  k={k} t={t}: enumeration {exact_collision_probability(k, t):.12f}"
          f"  Bessel {collision_probability_closed_form(k, t):.12f}")
for k in (5, 10, 20):
    r = collision_experiment(101, k, float(k), 50_000, seed=k)
    print(f"  k={k:2d}: P(W=W'|typ)={r.estimate:.2e} +- {r.sigma:.1e}  bound={r.bound:.2e}  holds={r.holds}")

print("\nlongest run without colour 0, equal counts, eta=1")
for r in (100, 1000):
    for kappa in (0.25, 1):
        res = longest_gap_tail_experiment([r // 2, r // 2], kappa, 20_000, seed=r, eta=1.0)
        print(f"  r={r:4d} kappa={kappa}: threshold {res.threshold:5.1f}  "
              f"empirical {res.empirical:.2e}  bound r^-kappa {res.bound:.2e}")
