"""Compare the perturbed product P_{q_k}(alpha, eps) with H_k and with F_c.

For alpha = [0;(1,2,3)] the limit function H_k approaches the perturbed
product as k grows, and the pattern function F_c stays below both.
"""

import numpy as np

from sudlercert import parse_cf
from sudlercert.ffamily import FULL_PARAMS, build_ffunction
from sudlercert.pattern import Pattern
from sudlercert.sudler import H_limit_grid, perturbed_product_grid

alpha = parse_cf("[0;(1,2,3)]")
k = 16
c = Pattern(tuple(alpha.digit(i) for i in range(k - 3, k + 6)))
ff = build_ffunction(c, FULL_PARAMS)
lo, hi = ff.domain
xs = np.round(np.linspace(lo, hi, 9), 3)

P = perturbed_product_grid(alpha, k, xs)
H = H_limit_grid(alpha, k, xs)
F = ff(xs)
print(f"pattern {c}, W = {ff.W:.5f}, domain [{lo:.4f}, {hi:.4f}]")
print(f"{'eps':>8} {'P':>10} {'H':>10} {'F':>10}")
for x, p, h, f in zip(xs, P, H, F):
    print(f"{x:8.3f} {p:10.5f} {h:10.5f} {f:10.5f}")
