"""
Fractional torsion problem on (-1, 1)
=====================================

u = lambda (1 - x^2)_+^s solves the fractional Laplace problem with f = 1.
The constant is computed by the brute-force oracle and certified at five
points.  Nodal errors of the two-scale scheme on graded meshes decay like
h^(mu s) until the second exponent beta_bar - s takes over.
"""

from twoscale.oracle import classical_ball_constant, exact_ball_solution
from twoscale.studies import linear_convergence

for s in (0.25, 0.5, 0.75):
    ex = exact_ball_solution(1, s)
    print(f"s = {s}: lambda = {ex.lam:.12f} (closed form {classical_ball_constant(1, s):.12f})")

hs = [2.0**-k for k in range(3, 9)]
for s in (0.5, 0.75):
    res = linear_convergence(s, 2.0, hs)
    print(f"\ns = {s}, mu = 2")
    for h, n, e in res.rows:
        print(f"  h = {h:9.6f}  N = {n:4d}  error = {e:.4e}")
    print(f"  fitted slope {res.slope:.3f}")
