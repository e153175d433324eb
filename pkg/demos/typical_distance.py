"""Typical distance in random Cayley graphs versus M*_k = k p^{(d-1)/k} / e.

Runs an exact BFS from the identity for d = 3, k = 6 along a schedule of
primes, reports D(1/2), the closed-form radius M*, the lattice radius M_k,
and checks the counting bound |B(R)| <= |[G,G]| |B_k(R)| at every radius.
"""

from heisenwalk import HeisenbergGroup
from heisenwalk.geometry import (
    bfs_distances,
    counting_bound_check,
    m_k,
    m_star,
    typical_distance,
)
from heisenwalk.walk import sample_generators

k = 6
print(f"{'p':>5} {'n':>9} {'D(.5)':>6} {'M*':>8} {'M_k':>5} {'|D-M*|/M*':>10}  bound")
for p in (11, 31, 101):
    G = HeisenbergGroup(p, 3)
    for seed in range(3):
        Z = sample_generators(G, k, seed)
        hist = bfs_distances(Z)
        D = typical_distance(hist, 0.5)
        ms = m_star(k, p, 3)
        ok = all(r.ok for r in counting_bound_check(Z, hist=hist))
        print(f"{p:5d} {G.n:9d} {D:6d} {ms:8.3f} {m_k(k, p, 3):5d} {abs(D - ms) / ms:10.4f}  {ok}")

# shell sizes: at this size the profile still spreads over many radii
hist = bfs_distances(sample_generators(HeisenbergGroup(101, 3), k, 0))
print("\nshell sizes for p=101:", {r: c for r, c in sorted(hist.counts.items())})
