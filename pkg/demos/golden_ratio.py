"""Sudler products of the golden ratio at Fibonacci indices.

P_{F_n}(phi) settles near 2.407 while the global minimum over N stays
bounded away from zero.
"""

from sudlercert import parse_cf, sudler_product
from sudlercert.contfrac import denominators
from sudlercert.verify import empirical_liminf

phi = parse_cf("[0;(1)]")
qs = denominators(phi, 30)
for n in range(10, 31, 4):
    print(f"q_{n:<3d}= {qs[n]:>8d}   P = {sudler_product(phi, qs[n]):.6f}")

v, N = empirical_liminf(phi, 10**5)
print(f"min over N <= 1e5: {v:.6f} at N = {N}")
