"""Temporal convergence of the L1 scheme on the 1D manufactured problem.

Runs tau = 1/10 .. 1/80 on a fine mesh and prints the max-in-time errors and
observed orders next to the expected 2 - alpha.
"""
from fracvolve import example1_problem, run_convergence_study, temporal_sweep

CELLS = 4000
ALPHAS = [0.1, 0.5, 0.9]

table = run_convergence_study(example1_problem, temporal_sweep(CELLS, [1/10, 1/20, 1/40, 1/80]), ALPHAS)

for alpha in ALPHAS:
    print(f"alpha = {alpha}  (expected order {2 - alpha:.2f})")
    for norm in ("l2", "h1_interp"):
        errs = table.errors(norm, alpha)
        rates = table.orders(norm, alpha)
        print(f"  {norm:10s}", " ".join(f"{e:.3e}" for e in errs), "| rates", " ".join(f"{r:.3f}" for r in rates))

# the exact-solution H1 error is dominated by the O(h) interpolation error here
print("\nh1 (exact reference) at alpha=0.5:", [f"{e:.3e}" for e in table.errors("h1", 0.5)])
