"""Where does the walk on H_{p,d} mix: entropy or diameter?

Sweeps the number of generators k for a fixed group and prints the entropic
time t0, the diameter time log_k n and which of the two sets t_*.  The
phase threshold k* = (log p^{d-1})^{1 + 2/(d-2)} is marked.
"""

import math

from heisenwalk import entropic_time_from_log, t_star

p, d = 5, 3
print(f"H_{{{p},{d}}}: n = {p ** 3}, N = p^(d-1) = {p ** 2}")
print(f"k* = (2 log 5)^3 = {(2 * math.log(5)) ** 3:.1f}\n")
print(f"{'k':>5} {'t0':>9} {'t_diam':>9} {'t_*':>9}  branch    regime")
for k in (2, 3, 4, 6, 8, 12, 16, 24, 33, 34, 48, 64, 128):
    r = t_star(k, p, d)
    mark = "  <- above k*" if r.above_threshold else ""
    print(f"{k:5d} {r.t0:9.4f} {r.t_diam:9.4f} {r.t_star:9.4f}  {r.branch:9s} {r.regime}{mark}")

# the small-k formula k N^{2/k} / (2 pi e) only becomes accurate once t0/k is large
print("\nt0 against k N^(2/k)/(2 pi e) at k = 10:")
for e in (6, 12, 24, 48):
    log_N = e * math.log(10)
    approx = 10 * math.exp(2 * log_N / 10) / (2 * math.pi * math.e)
    print(f"  N = 1e{e:<3d} ratio = {entropic_time_from_log(10, log_N) / approx:.5f}")
