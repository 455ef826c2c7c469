import csv
import io
import math

import numpy as np
import pytest

from fracvolve.analysis import (ErrorEvaluator, RateTable, SweepPoint, coupled_sweep,
                                example1_problem, example2_problem, h1_error, l2_error,
                                max_errors, observed_order, problem_mesh, register_problem,
                                run_convergence_study, spatial_sweep, temporal_sweep, PROBLEMS)
from fracvolve.mesh import build_interval_mesh, build_structured_triangulation
from fracvolve.solver import SolutionHistory
from fracvolve.timefrac import TimeGrid


def zero_history(mesh, N=2, tau=0.5):
    return SolutionHistory(np.zeros((N + 1, mesh.n_interior)), TimeGrid(tau, N), mesh)


def test_observed_order_frozen():
    assert observed_order(1.37013229e-05, 3.93247726e-06) == pytest.approx(1.80080487, abs=5e-9)
    assert observed_order(8.0, 1.0, ratio=2.0) == pytest.approx(3.0)
    with pytest.raises(ValueError):
        observed_order(0.0, 1.0)
    with pytest.raises(ValueError):
        observed_order(1.0, 0.5, ratio=1.0)


def test_l2_of_zero_solution_1d():
    mesh = build_interval_mesh(64)
    hist = zero_history(mesh)
    # ||t^2 sin(2 pi x)|| at t = 1 is 1/sqrt(2)
    assert l2_error(hist, example1_problem(0.5), 2) == pytest.approx(1 / math.sqrt(2), rel=1e-10)
    assert l2_error(hist, example1_problem(0.5), 1) == pytest.approx(0.25 / math.sqrt(2), rel=1e-10)


def test_h1_of_zero_solution_2d():
    mesh = build_structured_triangulation(32, 32)
    hist = zero_history(mesh)
    exact = math.sqrt(0.25 + 2 * math.pi ** 2)
    assert h1_error(hist, example2_problem(0.5), 2) == pytest.approx(exact, rel=1e-6)
    # the exact solution vanishes at t = 0
    assert h1_error(hist, example2_problem(0.5), 0) == 0.0


def test_interpolant_reference_vanishes_for_interpolant():
    problem = example2_problem(0.5)
    mesh = build_structured_triangulation(8, 8)
    U = np.stack([problem.exact(mesh.vertices, t)[mesh.interior_vertices] for t in (0.0, 0.5, 1.0)])
    hist = SolutionHistory(U, TimeGrid(0.5, 2), mesh)
    assert h1_error(hist, problem, 2, reference="interpolant") < 1e-14
    assert h1_error(hist, problem, 2) > 0.5
    with pytest.raises(ValueError):
        h1_error(hist, problem, 2, reference="nodal")


def test_max_errors_skip_initial_level():
    problem = example1_problem(0.5)
    mesh = build_interval_mesh(16)
    out = max_errors(zero_history(mesh, N=4, tau=0.25), problem)
    assert set(out) == {"l2", "h1", "h1_interp"}
    assert out["l2"][1] == 4
    assert out["l2"][0] == pytest.approx(1 / math.sqrt(2), rel=1e-6)


@pytest.mark.parametrize("degree", [5, 8])
def test_error_quadrature_sufficient(degree):
    mesh = build_structured_triangulation(16, 16)
    ev = ErrorEvaluator(mesh, degree)
    val = ev.l2(np.zeros(mesh.n_vertices), lambda x, t: x[:, 0] * x[:, 1], 0.0)
    # squared integrand has degree 4
    assert val == pytest.approx(1 / 3, rel=1e-13)


def test_example2_tensor_eigenvalues():
    problem = example2_problem(0.5)
    x = np.random.default_rng(5).uniform(size=(20, 2))
    A = problem.diffusion(x)
    r = (x ** 2).sum(axis=1)
    ev = np.linalg.eigvalsh(A)
    np.testing.assert_allclose(ev[:, 0], 2.0, rtol=1e-14)
    np.testing.assert_allclose(ev[:, 1], 2.0 + 2.0 * r, rtol=1e-14)


def test_sweep_constructors():
    t = temporal_sweep(512, [0.1, 0.05])
    assert [p.N for p in t] == [10, 20] and t[0].label == "tau=1/10"
    s = spatial_sweep([10, 20], 1e-3, dim=2)
    assert s[0].scale == pytest.approx(math.sqrt(2) / 10)
    c = coupled_sweep([1 / 5, 1 / 10], lambda s: math.sqrt(2) * s, lambda s: s / 2)
    assert [(p.cells, p.N) for p in c] == [(5, 10), (10, 20)]
    with pytest.raises(ValueError):
        coupled_sweep([1 / 3], lambda s: 0.4 * s, lambda s: s)


def test_problem_mesh_and_registry():
    assert problem_mesh(example1_problem(0.5), 10).n_vertices == 11
    assert problem_mesh(example2_problem(0.5), 3).n_vertices == 16
    register_problem("tmp_ex1", example1_problem)
    assert PROBLEMS.pop("tmp_ex1") is example1_problem


def test_single_point_study_has_no_rates():
    table = run_convergence_study(example1_problem, temporal_sweep(16, [0.25]), [0.5])
    assert table.orders("l2", 0.5) == []
    lines = table.to_csv("l2").splitlines()
    assert lines[0] == "alpha,tau=1/4"
    assert lines[2] == "Rate,"


def test_csv_round_trip():
    table = run_convergence_study(example1_problem, spatial_sweep([8, 16, 32], 0.1), [0.3, 0.7])
    for norm in ("l2", "h1", "h1_interp"):
        rows = list(csv.reader(io.StringIO(table.to_csv(norm))))
        assert rows[0] == ["alpha", "h=1/8", "h=1/16", "h=1/32"]
        for i, a in enumerate((0.3, 0.7)):
            err_row, rate_row = rows[1 + 2 * i], rows[2 + 2 * i]
            assert float(err_row[0]) == a
            np.testing.assert_allclose([float(v) for v in err_row[1:]], table.errors(norm, a), rtol=1e-8)
            assert rate_row[:2] == ["Rate", ""]
            np.testing.assert_allclose([float(v) for v in rate_row[2:]], table.orders(norm, a), atol=1e-7)
    summary = table.summary()
    assert summary["points"] == ["h=1/8", "h=1/16", "h=1/32"]
    assert len(summary["orders"]["l2"]["0.3"]) == 2


def test_parallel_matches_serial():
    sweep = spatial_sweep([8, 16], 0.25)
    a = run_convergence_study(example1_problem, sweep, [0.5], jobs=1)
    b = run_convergence_study(example1_problem, sweep, [0.5], jobs=2)
    assert a.to_csv("l2") == b.to_csv("l2")


def test_study_argument_errors():
    with pytest.raises(ValueError):
        run_convergence_study(example1_problem, [], [0.5])
    with pytest.raises(ValueError):
        run_convergence_study(example1_problem, temporal_sweep(8, [0.5]), [])
    with pytest.raises(ValueError):
        run_convergence_study(example1_problem, temporal_sweep(8, [0.5]), [0.5], snapshots=(3,))


def test_snapshots_in_report():
    table = run_convergence_study(example1_problem, temporal_sweep(4, [0.5]), [0.5], snapshots=(0, 2))
    rep = table.reports[0.5][0]
    assert sorted(rep.snapshots) == [0, 2]
    assert rep.snapshots[2].startswith("x,value\n")
