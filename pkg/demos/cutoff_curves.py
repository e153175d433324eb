"""Exact total-variation curves on small Heisenberg groups.

For a few random generator sets on H_{p,3}, evolve the law of the walk
exactly and print d(t) for the full group next to the same quantity after
projecting to the Abelianisation Z_p^2.  The projected curve always sits
below; the gap is the non-Abelian part that mixes last.
"""

import numpy as np

from heisenwalk import HeisenbergGroup, psi, t_alpha, t_star
from heisenwalk.walk import sample_generators, tv_curve

for p, k in [(5, 4), (7, 6)]:
    G = HeisenbergGroup(p, 3)
    rep = t_star(k, p, 3)
    print(f"\nH_{{{p},3}}  n={G.n}  k={k}  t0={rep.t0:.2f}  t_diam={rep.t_diam:.2f}")
    curves = []
    for seed in range(3):
        Z = sample_generators(G, k, seed)
        curves.append(tv_curve(Z, range(0, 31, 2)))
    print("   t  " + "  ".join(f"tv[{s}]  ab[{s}]" for s in range(3)))
    for i, t in enumerate(range(0, 31, 2)):
        cells = "  ".join(f"{c[i].tv:.3f}  {c[i].tv_abelianized:.3f}" for c in curves)
        print(f"{t:4d}  {cells}")

# Poissonized time: a Poisson(t) mixture of the discrete laws
G = HeisenbergGroup(5, 3)
Z = sample_generators(G, 4, 0)
pois = tv_curve(Z, np.linspace(0, 30, 7), "poissonized")
print("\npoissonized, H_{5,3}, k=4:", ", ".join(f"t={r.t:.0f}: {r.tv:.3f}" for r in pois))

# Window profile: d(t_alpha) next to the presumed Gaussian tail psi(alpha).
# The group is far too small for the limit profile; only the ordering
# in alpha is expected to agree.
G = HeisenbergGroup(7, 3)
Z = sample_generators(G, 6, 1)
print("\nwindow, H_{7,3}, k=6 (target n):")
for a in (-1.0, 0.0, 1.0, 2.0):
    ta = t_alpha(6, G.abelian_order, n=G.n, alpha=a, target="n")
    (rec,) = tv_curve(Z, [ta], "poissonized")
    print(f"  alpha={a:+.0f}  t={ta:6.2f}  d={rec.tv:.3f}  psi={psi(a):.3f}")
