import numpy as np
import pytest

from fracvolve.mesh import build_dual_partition, build_structured_triangulation


def example2_tensor(x):
    r = x[:, 0] ** 2 + x[:, 1] ** 2
    A = np.empty((len(x), 2, 2))
    A[:, 0, 0] = A[:, 1, 1] = 2.0 + r
    A[:, 0, 1] = A[:, 1, 0] = r
    return A


def identity_tensor(x):
    return np.broadcast_to(np.eye(x.shape[1]), (len(x), x.shape[1], x.shape[1]))


@pytest.fixture
def square4():
    mesh = build_structured_triangulation(4, 4)
    return mesh, build_dual_partition(mesh)


@pytest.fixture
def square2():
    mesh = build_structured_triangulation(2, 2)
    return mesh, build_dual_partition(mesh)


def galerkin_stiffness(mesh, A_const):
    """Classical P1 Galerkin stiffness, assembled element by element with loops."""
    n = mesh.n_vertices
    K = np.zeros((n, n))
    for el in mesh.elements:
        p = mesh.vertices[el]
        T = np.array([[1.0, *p[0]], [1.0, *p[1]], [1.0, *p[2]]])
        area = 0.5 * abs(np.linalg.det(T))
        coef = np.linalg.inv(T)  # column j holds (c, gx, gy) of the j-th hat function
        grads = coef[1:, :].T
        for a in range(3):
            for b in range(3):
                K[el[a], el[b]] += area * grads[a] @ A_const @ grads[b]
    return K


ACCEPTANCE_LINES = []


@pytest.fixture
def report_line():
    """Record one acceptance verdict line; all lines are printed after the run."""
    def record(label, ok, detail):
        ACCEPTANCE_LINES.append(f"{label}: {'PASS' if ok else 'FAIL'} | {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
