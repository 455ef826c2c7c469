"""Example 2 on the unit square: mesh size and time step refined together.

With h = sqrt(2) s and tau = s the L2 error should fall like s^2 and the H1
error like s.
"""
import math

from fracvolve import coupled_sweep, example2_problem, run_convergence_study

sweep = coupled_sweep([1/5, 1/10, 1/20, 1/40], lambda s: math.sqrt(2) * s, lambda s: s)
table = run_convergence_study(example2_problem, sweep, [0.5])

print(table.to_csv("l2"))
print(table.to_csv("h1"))
for rep in table.reports[0.5]:
    print(f"cells={rep.cells:3d} tau={rep.tau:.4f} solve+error time {rep.wall_time:.2f}s")
