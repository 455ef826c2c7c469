"""Finite volume element / L1 solver for time-fractional reaction-diffusion problems."""
from .analysis import (ErrorReport, RateTable, SweepPoint, coupled_sweep, example1_problem,
                       example2_problem, h1_error, l2_error, max_errors, observed_order,
                       register_problem, run_convergence_study, spatial_sweep, temporal_sweep)
from .assembly import (ProblemSpec, assemble_load, assemble_mass_fve, assemble_reaction_fve,
                       assemble_stiffness_fve, assemble_system)
from .mesh import (DualMesh, Mesh, build_dual_partition, build_interval_mesh,
                   build_structured_triangulation, element_geometry)
from .solver import (SolutionHistory, SolverConfig, SolverError, evaluate_solution,
                     initialize, time_march)
from .timefrac import L1Weights, TimeGrid, caputo_apply, history_rhs_weights, l1_weights

__version__ = "0.1.0"
