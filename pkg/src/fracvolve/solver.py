"""Time marching of the fully discrete L1 / finite volume element scheme.

Each step solves

    G U^n = tau^alpha F^n + sum_{k<n} w_k^n B1 U^k,
    G = B1 / Gamma(2-alpha) + tau^alpha (B2 + B3),

with ``w_k^n = -bt_k^n / Gamma(2-alpha) > 0``.  ``G`` does not change
between steps, so it is factorised once per run.
"""
from dataclasses import dataclass, field
import logging

import numpy as np
import scipy.sparse.linalg as spla

from .assembly import (LoadAssembler, assemble_flux_load, assemble_mass_fve,
                       assemble_reaction_fve, assemble_stiffness_fve, assemble_system)
from .mesh import build_dual_partition
from .timefrac import TimeGrid, history_rhs_weights, l1_weights

log = logging.getLogger(__name__)

INIT_MODES = ("interpolate", "elliptic_projection")
LINEAR_SOLVERS = ("direct", "iterative")


class SolverError(RuntimeError):
    """Raised when a linear solve fails (singular matrix, no convergence)."""


@dataclass(frozen=True)
class SolverConfig:
    alpha: float
    tau: float
    N: int
    init_mode: str = "interpolate"
    linear_solver: str = "direct"
    tol: float = 1e-12
    maxiter: int = 1000

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        TimeGrid(self.tau, self.N)
        if self.init_mode not in INIT_MODES:
            raise ValueError(f"init_mode must be one of {INIT_MODES}")
        if self.linear_solver not in LINEAR_SOLVERS:
            raise ValueError(f"linear_solver must be one of {LINEAR_SOLVERS}")
        if not self.tol > 0 or self.maxiter < 1:
            raise ValueError("iterative tolerance and maxiter must be positive")

    @classmethod
    def for_final_time(cls, alpha, T, N, **kw):
        return cls(alpha, T / N, int(N), **kw)

    @property
    def grid(self):
        return TimeGrid(self.tau, self.N)


@dataclass(frozen=True, eq=False)
class SolutionHistory:
    """All levels ``U^0 .. U^N`` over the interior unknowns."""

    U: np.ndarray  # (N + 1, M)
    grid: TimeGrid
    mesh: object
    n_factorizations: int = 0
    iterations: tuple = field(default=())

    def __post_init__(self):
        self.U.setflags(write=False)

    def __len__(self):
        return len(self.U)

    def full(self, n):
        """Vertex values at level ``n`` including the zero boundary values."""
        return self.mesh.expand(self.U[n])


def initialize(problem, mesh, dual, config):
    """Initial vector ``U^0`` by nodal interpolation or elliptic projection."""
    if config.init_mode == "interpolate":
        return np.asarray(problem.initial(mesh.vertices), dtype=float).reshape(-1)[mesh.interior_vertices]
    grad = problem.grad_u0()
    if grad is None:
        raise ValueError("elliptic_projection needs the gradient of u0 (initial_grad or exact_grad)")
    # Nodal boundary values of u0 act as a lift; they vanish for H^1_0 data.
    full_u0 = np.asarray(problem.initial(mesh.vertices), dtype=float).reshape(-1)
    lift = np.where(mesh.boundary, full_u0, 0.0)
    B2 = assemble_stiffness_fve(mesh, dual, problem.diffusion, restrict=False)
    inner = mesh.interior_vertices
    g = assemble_flux_load(mesh, dual, problem.diffusion, grad, restrict=False)
    rhs = (g - B2 @ lift)[inner]
    B2ii = B2[inner][:, inner].tocsc()
    return spla.spsolve(B2ii, rhs)


class _DirectSolver:
    def __init__(self, G):
        try:
            self.lu = spla.splu(G.tocsc())
        except RuntimeError as exc:
            raise SolverError(f"system matrix G is singular ({exc}); "
                              f"shape {G.shape}, nnz {G.nnz}") from exc
        self.iterations = []

    def solve(self, rhs, guess):
        x = self.lu.solve(rhs)
        if not np.all(np.isfinite(x)):
            raise SolverError("direct solve produced non-finite values")
        return x


class _IterativeSolver:
    # GMRES handles the nonsymmetric G; an incomplete LU built once preconditions it.
    def __init__(self, G, tol, maxiter):
        self.G = G.tocsr()
        try:
            ilu = spla.spilu(G.tocsc(), drop_tol=1e-5, fill_factor=10)
        except RuntimeError as exc:
            raise SolverError(f"incomplete factorisation of G failed: {exc}") from exc
        self.M = spla.LinearOperator(G.shape, ilu.solve)
        self.tol, self.maxiter = tol, maxiter
        self.iterations = []

    def solve(self, rhs, guess):
        count = [0]

        def cb(_):
            count[0] += 1

        x, info = spla.gmres(self.G, rhs, x0=guess, rtol=self.tol, atol=0.0, restart=50,
                             maxiter=self.maxiter, M=self.M, callback=cb,
                             callback_type="pr_norm")
        if info != 0:
            res = np.linalg.norm(rhs - self.G @ x) / max(np.linalg.norm(rhs), 1e-300)
            raise SolverError(f"GMRES did not converge (info={info}, relative residual {res:.3e})")
        self.iterations.append(count[0])
        return x


def time_march(problem, mesh, dual, config):
    """Run all ``N`` steps and return the full :class:`SolutionHistory`."""
    if config.alpha != problem.alpha:
        raise ValueError(f"config alpha {config.alpha} differs from problem alpha {problem.alpha}")
    M = mesh.n_interior
    if M == 0:
        raise ValueError("mesh has no interior vertices; the discrete system is empty")
    if dual is None:
        dual = build_dual_partition(mesh)
    alpha, tau, N = config.alpha, config.tau, config.N

    B1 = assemble_mass_fve(mesh, dual)
    B2 = assemble_stiffness_fve(mesh, dual, problem.diffusion)
    B3 = assemble_reaction_fve(mesh, dual, problem.reaction)
    G = assemble_system(B1, B2, B3, alpha, tau)
    if config.linear_solver == "direct":
        lin = _DirectSolver(G)
    else:
        lin = _IterativeSolver(G, config.tol, config.maxiter)

    weights = l1_weights(alpha, N)
    tau_a = tau ** alpha
    load = LoadAssembler(mesh)

    U = np.empty((N + 1, M))
    BU = np.empty((N + 1, M))
    U[0] = initialize(problem, mesh, dual, config)
    BU[0] = B1 @ U[0]
    for n in range(1, N + 1):
        rhs = tau_a * load(problem.source, n * tau)
        rhs += history_rhs_weights(weights, n) @ BU[:n]
        U[n] = lin.solve(rhs, U[n - 1])
        BU[n] = B1 @ U[n]
    log.debug("time_march: M=%d N=%d alpha=%g tau=%g", M, N, alpha, tau)
    return SolutionHistory(U, TimeGrid(tau, N), mesh, 1, tuple(lin.iterations))


def evaluate_solution(history, n, point):
    """Value of the P1 function ``u_h^n`` at ``point``."""
    if not 0 <= n < len(history):
        raise IndexError(f"time level {n} outside [0, {len(history) - 1}]")
    mesh = history.mesh
    e, lam = mesh.locate(point)
    return float(lam @ history.full(n)[mesh.elements[e]])


def snapshot_csv(history, n):
    """CSV text with one ``x[,y],value`` row per mesh vertex at level ``n``."""
    mesh = history.mesh
    names = ["x", "y"][:mesh.dim]
    lines = [",".join(names + ["value"])]
    for x, v in zip(mesh.vertices, history.full(n)):
        lines.append(",".join(f"{c:.17g}" for c in x) + f",{v:.17g}")
    return "\n".join(lines) + "\n"


def write_snapshot(history, n, path):
    with open(path, "w") as fh:
        fh.write(snapshot_csv(history, n))
