"""Step-by-step use of the building blocks for one solve.

Builds the mesh and its barycentric dual, marches in time with both linear
solvers and evaluates the discrete solution at a point.
"""
import numpy as np

from fracvolve import (SolverConfig, build_dual_partition, build_structured_triangulation,
                       evaluate_solution, example2_problem, l2_error, time_march)

alpha = 0.7
problem = example2_problem(alpha)
mesh = build_structured_triangulation(16, 16)
dual = build_dual_partition(mesh)
print(f"{mesh.n_vertices} vertices, {mesh.n_interior} unknowns, h = {mesh.h:.4f}")
print("control volumes cover the square:", np.isclose(dual.cv_area.sum(), 1.0))

direct = time_march(problem, mesh, dual, SolverConfig(alpha, 1/20, 20))
iterative = time_march(problem, mesh, dual, SolverConfig(alpha, 1/20, 20, linear_solver="iterative"))
print("GMRES iterations per step:", iterative.iterations)
print("max difference direct vs iterative:", np.abs(direct.U - iterative.U).max())

p = (0.25, 0.25)
print(f"u_h(T, {p}) = {evaluate_solution(direct, 20, p):.5f}  (exact 1.0)")
print(f"L2 error at T: {l2_error(direct, problem, 20):.3e}")
