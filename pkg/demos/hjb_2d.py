"""
Isotropic vs anisotropic HJB on the unit square
===============================================

min(L_1 u, L_2 u) = 1 with eta_1 = C(2, s) and eta_2 = C(2, s)(1 + cos(2 phi)/2).
Neither operator dominates, so the alternating obstacle iteration has work
to do.  Iterates rise monotonically and stay under a discrete supersolution.
"""

import numpy as np

from twoscale.studies import hjb_study

res = hjb_study(0.5, 2.0, 2.0**-3)
d = res.details
rep = d["report"]
print(f"N = {d['N']}, outer iterations = {d['outer_iterations']}")
for k, op, r in res.rows[:8]:
    print(f"  k = {k:2d}  operator {op}  residual {r:.3e}")
print("  ...")
print(f"final residual {d['final_residual']:.2e}")
print(f"largest decrease between iterates {d['max_decrease']:.1e}")
print(f"max(u - U) = {d['max_above_supersolution']:.3f} (U is the quadratic supersolution)")
print(f"max u = {np.max(rep.solution):.5f}")
