"""Error norms, observed orders and the two manufactured test problems."""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import io
import math
import time
from typing import Callable, List, Optional

import numpy as np

from .assembly import ProblemSpec
from .mesh import build_dual_partition, build_interval_mesh, build_structured_triangulation
from .quadrature import simplex_rule
from .solver import SolverConfig, snapshot_csv, time_march

ERROR_DEGREE = 5
TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# manufactured problems

def example1_problem(alpha):
    """1D problem on (0, 1) with exact solution ``t^2 sin(2 pi x)``."""
    g3 = math.gamma(3.0 - alpha)

    def diffusion(x):
        return 1.0 + 2.0 * x[:, 0] ** 2

    def reaction(x):
        return 1.0 + x[:, 0] ** 2

    def source(x, t):
        x = x[:, 0]
        s, c = np.sin(TWO_PI * x), np.cos(TWO_PI * x)
        return ((2.0 / g3 * t ** (2.0 - alpha) + t ** 2 * (1.0 + x ** 2)
                 + 4.0 * math.pi ** 2 * t ** 2 * (1.0 + 2.0 * x ** 2)) * s
                - 8.0 * math.pi * t ** 2 * x * c)

    def exact(x, t):
        return t ** 2 * np.sin(TWO_PI * x[:, 0])

    def exact_grad(x, t):
        return (TWO_PI * t ** 2 * np.cos(TWO_PI * x[:, 0]))[:, None]

    return ProblemSpec(1, alpha, diffusion, reaction, source,
                       lambda x: exact(x, 0.0), ((0.0,), (1.0,)), 1.0,
                       exact, exact_grad, name="example1")


def _example2_tensor(x):
    r = x[:, 0] ** 2 + x[:, 1] ** 2
    A = np.empty((len(x), 2, 2))
    A[:, 0, 0] = A[:, 1, 1] = 2.0 + r
    A[:, 0, 1] = A[:, 1, 0] = r
    return A


def example2_problem(alpha):
    """Unit-square problem with exact solution ``t^2 sin(2 pi x1) sin(2 pi x2)``.

    The source is derived by hand.  With ``r = x1^2 + x2^2`` the tensor is
    ``[[2 + r, r], [r, 2 + r]]`` and

        div(A grad u) = 2 (x1 + x2)(u_1 + u_2) + (2 + r)(u_11 + u_22) + 2 r u_12.
    """
    g3 = math.gamma(3.0 - alpha)

    def reaction(x):
        return 1.0 + x[:, 0] ** 2 + x[:, 1] ** 2

    def parts(x):
        a, b = TWO_PI * x[:, 0], TWO_PI * x[:, 1]
        return np.sin(a), np.cos(a), np.sin(b), np.cos(b)

    def source(x, t):
        s1, c1, s2, c2 = parts(x)
        x1, x2 = x[:, 0], x[:, 1]
        r = x1 ** 2 + x2 ** 2
        t2 = t ** 2
        u = t2 * s1 * s2
        u1 = TWO_PI * t2 * c1 * s2
        u2 = TWO_PI * t2 * s1 * c2
        lap = -2.0 * TWO_PI ** 2 * u
        u12 = TWO_PI ** 2 * t2 * c1 * c2
        div = 2.0 * (x1 + x2) * (u1 + u2) + (2.0 + r) * lap + 2.0 * r * u12
        return 2.0 / g3 * t ** (2.0 - alpha) * s1 * s2 - div + (1.0 + r) * u

    def exact(x, t):
        s1, _, s2, _ = parts(x)
        return t ** 2 * s1 * s2

    def exact_grad(x, t):
        s1, c1, s2, c2 = parts(x)
        return TWO_PI * t ** 2 * np.column_stack([c1 * s2, s1 * c2])

    return ProblemSpec(2, alpha, _example2_tensor, reaction, source,
                       lambda x: exact(x, 0.0), ((0.0, 0.0), (1.0, 1.0)), 1.0,
                       exact, exact_grad, name="example2")


PROBLEMS = {"example1": example1_problem, "example2": example2_problem}


def register_problem(name, factory):
    """Make ``factory(alpha) -> ProblemSpec`` available under ``name``."""
    PROBLEMS[name] = factory


def problem_mesh(problem, cells):
    (lo, hi) = problem.domain
    if problem.dim == 1:
        return build_interval_mesh(cells, lo[0], hi[0])
    return build_structured_triangulation(cells, cells, problem.domain)


# ---------------------------------------------------------------------------
# error norms

class ErrorEvaluator:
    """Quadrature data for repeated L2 / H1 error evaluation on one mesh."""

    def __init__(self, mesh, degree=ERROR_DEGREE):
        rule = simplex_rule(mesh.dim, degree)
        self.mesh = mesh
        self.bary = rule.bary
        self.wK = mesh.measures[:, None] * rule.weights[None, :]  # (ne, nq)
        coords = mesh.vertices[mesh.elements]
        self.points = np.einsum("qi,eid->eqd", rule.bary, coords)

    def _flat(self):
        return self.points.reshape(-1, self.mesh.dim)

    def l2(self, full, u, t):
        uh = full[self.mesh.elements] @ self.bary.T  # (ne, nq)
        ue = np.asarray(u(self._flat(), t), dtype=float).reshape(uh.shape)
        return math.sqrt(float(np.sum(self.wK * (ue - uh) ** 2)))

    def grad_l2(self, full, grad, t):
        gh = np.einsum("em,emd->ed", full[self.mesh.elements], self.mesh.grads)
        ne, nq = self.wK.shape
        ge = np.asarray(grad(self._flat(), t), dtype=float).reshape(ne, nq, self.mesh.dim)
        return math.sqrt(float(np.sum(self.wK[..., None] * (ge - gh[:, None, :]) ** 2)))


def _require(problem, grad=False):
    if problem.exact is None:
        raise ValueError("problem has no exact solution")
    if grad and problem.exact_grad is None:
        raise ValueError("problem has no exact gradient")


def l2_error(history, problem, n, degree=ERROR_DEGREE):
    """``|| u(t_n) - u_h^n ||`` in L2."""
    _require(problem)
    ev = ErrorEvaluator(history.mesh, degree)
    return ev.l2(history.full(n), problem.exact, history.grid.t(n))


def h1_error(history, problem, n, reference="exact", degree=ERROR_DEGREE):
    """Full H1 norm of the error at level ``n`` (L2 part included).

    ``reference="exact"`` measures ``u(t_n) - u_h^n`` with the exact
    gradient.  ``reference="interpolant"`` measures ``I_h u(t_n) - u_h^n``
    instead, which removes the O(h) interpolation error and isolates the
    temporal error when the mesh is fine.
    """
    _require(problem, grad=True)
    ev = ErrorEvaluator(history.mesh, degree)
    return _h1(ev, history, problem, n, reference)


def _h1(ev, history, problem, n, reference):
    t = history.grid.t(n)
    full = history.full(n)
    if reference == "exact":
        return math.hypot(ev.l2(full, problem.exact, t), ev.grad_l2(full, problem.exact_grad, t))
    if reference == "interpolant":
        mesh = history.mesh
        diff = np.where(mesh.boundary, 0.0, problem.exact(mesh.vertices, t)) - full
        return math.hypot(ev.l2(diff, _zero_scalar, t), ev.grad_l2(diff, _zero_vector, t))
    raise ValueError(f"unknown reference {reference!r}")


def _zero_scalar(x, t):
    return np.zeros(len(x))


def _zero_vector(x, t):
    return np.zeros_like(x)


NORMS = ("l2", "h1", "h1_interp")


def max_errors(history, problem, degree=ERROR_DEGREE):
    """Maximum over ``n = 1..N`` of each norm in :data:`NORMS`, with arg-max levels.

    Returns ``{norm: (value, n)}``.
    """
    _require(problem, grad=True)
    ev = ErrorEvaluator(history.mesh, degree)
    vals = np.zeros((len(NORMS), len(history)))
    for n in range(1, len(history)):
        t = history.grid.t(n)
        vals[0, n] = ev.l2(history.full(n), problem.exact, t)
        vals[1, n] = _h1(ev, history, problem, n, "exact")
        vals[2, n] = _h1(ev, history, problem, n, "interpolant")
    out = {}
    for name, row in zip(NORMS, vals):
        k = int(np.argmax(row[1:])) + 1
        out[name] = (float(row[k]), k)
    return out


def observed_order(e_coarse, e_fine, ratio=2.0):
    """``log(e_coarse / e_fine) / log(ratio)``."""
    if not (e_coarse > 0 and e_fine > 0):
        raise ValueError("errors must be positive")
    if not ratio > 1:
        raise ValueError("refinement ratio must exceed 1")
    return math.log(e_coarse / e_fine) / math.log(ratio)


# ---------------------------------------------------------------------------
# convergence studies

@dataclass(frozen=True)
class SweepPoint:
    cells: int
    tau: float
    scale: float  # refinement parameter; consecutive ratios define the orders
    label: str = ""

    @property
    def N(self):
        return int(round(1.0 / self.tau))


def temporal_sweep(cells, taus):
    return [SweepPoint(cells, tau, tau, f"tau={_frac(tau)}") for tau in taus]


def spatial_sweep(cells_list, tau, dim=1):
    c = math.sqrt(2.0) if dim == 2 else 1.0
    return [SweepPoint(n, tau, c / n, f"h={'sqrt2*' if dim == 2 else ''}1/{n}") for n in cells_list]


def coupled_sweep(s_list, h_of_s, tau_of_s, dim=2, label="s"):
    """Sweep where mesh size and time step are both tied to a parameter ``s``."""
    c = math.sqrt(2.0) if dim == 2 else 1.0
    pts = []
    for s in s_list:
        cells = c / h_of_s(s)
        if abs(cells - round(cells)) > 1e-8 * cells:
            raise ValueError(f"s={s} gives a non-integer number of cells ({cells})")
        pts.append(SweepPoint(int(round(cells)), tau_of_s(s), s, f"{label}={_frac(s)}"))
    return pts


def _frac(v):
    inv = 1.0 / v
    return f"1/{int(round(inv))}" if abs(inv - round(inv)) < 1e-9 * inv else f"{v:g}"


@dataclass
class ErrorReport:
    alpha: float
    cells: int
    h: float
    tau: float
    l2: float
    h1: float
    h1_interp: float
    n_max: dict
    wall_time: float
    snapshots: dict = field(default_factory=dict)


@dataclass
class RateTable:
    """Errors per alpha (rows) and sweep point (columns) with pairwise orders."""

    problem: str
    points: List[SweepPoint]
    reports: dict = field(default_factory=dict)  # alpha -> [ErrorReport]

    @property
    def alphas(self):
        return list(self.reports)

    def errors(self, norm, alpha):
        return [getattr(r, norm) for r in self.reports[alpha]]

    def ratios(self):
        return [a.scale / b.scale for a, b in zip(self.points, self.points[1:])]

    def orders(self, norm, alpha, rounded=False):
        errs = self.errors(norm, alpha)
        if rounded:
            errs = [float(f"{e:.8E}") for e in errs]
        return [observed_order(a, b, r) for a, b, r in zip(errs, errs[1:], self.ratios())]

    def to_csv(self, norm):
        """Published-table layout: one error row and one Rate row per alpha."""
        out = io.StringIO()
        out.write(",".join(["alpha"] + [p.label for p in self.points]) + "\n")
        for a in self.alphas:
            errs = self.errors(norm, a)
            out.write(",".join([f"{a:g}"] + [f"{e:.8E}" for e in errs]) + "\n")
            rates = self.orders(norm, a, rounded=True)
            out.write(",".join(["Rate", ""] + [f"{r:.8f}" for r in rates]) + "\n")
        return out.getvalue()

    def summary(self):
        return {
            "problem": self.problem,
            "points": [p.label for p in self.points],
            "orders": {norm: {f"{a:g}": self.orders(norm, a) for a in self.alphas}
                       for norm in NORMS},
        }


def solve_point(factory, alpha, point, init_mode="interpolate", linear_solver="direct",
                snapshots=()):
    """Solve one sweep configuration and measure its errors.

    ``snapshots`` lists time levels whose vertex values are returned as CSV
    text in ``report.snapshots``.
    """
    start = time.perf_counter()
    problem = factory(alpha)
    mesh = problem_mesh(problem, point.cells)
    dual = build_dual_partition(mesh)
    N = int(round(problem.T / point.tau))
    config = SolverConfig(alpha, problem.T / N, N, init_mode, linear_solver)
    hist = time_march(problem, mesh, dual, config)
    errs = max_errors(hist, problem)
    snaps = {}
    for n in snapshots:
        if not 0 <= n <= N:
            raise ValueError(f"snapshot level {n} outside [0, {N}]")
        snaps[n] = snapshot_csv(hist, n)
    return ErrorReport(alpha, point.cells, mesh.h, config.tau,
                       errs["l2"][0], errs["h1"][0], errs["h1_interp"][0],
                       {k: v[1] for k, v in errs.items()},
                       time.perf_counter() - start, snaps)


def run_convergence_study(factory, sweep, alphas, init_mode="interpolate",
                          linear_solver="direct", jobs=1, name=None, snapshots=()):
    """Run every (alpha, sweep point) pair and collect a :class:`RateTable`."""
    if not sweep:
        raise ValueError("empty sweep")
    if not alphas:
        raise ValueError("no alpha values given")
    tasks = [(a, p) for a in alphas for p in sweep]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futs = [pool.submit(solve_point, factory, a, p, init_mode, linear_solver, snapshots) for a, p in tasks]
            results = [f.result() for f in futs]
    else:
        results = [solve_point(factory, a, p, init_mode, linear_solver, snapshots) for a, p in tasks]
    table = RateTable(name or getattr(factory, "__name__", "custom"), list(sweep))
    for (a, _), rep in zip(tasks, results):
        table.reports.setdefault(a, []).append(rep)
    return table
