"""Quadrature rules on the reference interval and triangle.

Rules are stored in barycentric coordinates, one column per simplex vertex,
with weights normalised to sum to one.  Multiply by the simplex measure to
integrate over a physical cell.
"""
from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from numpy.polynomial.legendre import leggauss


@dataclass(frozen=True)
class SimplexRule:
    bary: np.ndarray  # (npts, dim + 1)
    weights: np.ndarray  # (npts,), sums to 1
    degree: int

    @property
    def npts(self):
        return len(self.weights)


def _gauss_01(n):
    x, w = leggauss(n)
    return (x + 1.0) / 2.0, w / 2.0


@lru_cache(maxsize=None)
def interval_rule(degree):
    """Gauss-Legendre rule on [0, 1], exact for polynomials of ``degree``."""
    if degree < 0:
        raise ValueError("degree must be non-negative")
    n = max(1, math.ceil((degree + 1) / 2))
    s, w = _gauss_01(n)
    bary = np.column_stack([1.0 - s, s])
    return SimplexRule(bary, w, 2 * n - 1)


def _dunavant5():
    r = math.sqrt(15.0)
    a, b = (6 - r) / 21, (6 + r) / 21
    pts = [(1 / 3, 1 / 3, 1 / 3),
           (1 - 2 * a, a, a), (a, 1 - 2 * a, a), (a, a, 1 - 2 * a),
           (1 - 2 * b, b, b), (b, 1 - 2 * b, b), (b, b, 1 - 2 * b)]
    w = [9 / 40] + [(155 - r) / 1200] * 3 + [(155 + r) / 1200] * 3
    return np.array(pts), np.array(w)


def _collapsed_gauss(degree):
    # Duffy map of a tensor Gauss rule; the (1 - xi) Jacobian adds one degree.
    n = max(1, math.ceil((degree + 2) / 2))
    s, w = _gauss_01(n)
    xi, eta = np.meshgrid(s, s, indexing="ij")
    wx, wy = np.meshgrid(w, w, indexing="ij")
    x = xi.ravel()
    y = (eta * (1.0 - xi)).ravel()
    weights = 2.0 * (wx * wy * (1.0 - xi)).ravel()
    bary = np.column_stack([1.0 - x - y, x, y])
    return bary, weights


@lru_cache(maxsize=None)
def triangle_rule(degree):
    """Symmetric rule on the reference triangle exact up to ``degree``.

    Degrees 1, 2 and 5 use the classical 1-, 3- and 7-point rules; anything
    else falls back to a collapsed tensor Gauss rule.
    """
    if degree < 0:
        raise ValueError("degree must be non-negative")
    if degree <= 1:
        return SimplexRule(np.full((1, 3), 1 / 3), np.ones(1), 1)
    if degree == 2:
        bary = np.array([[2 / 3, 1 / 6, 1 / 6],
                         [1 / 6, 2 / 3, 1 / 6],
                         [1 / 6, 1 / 6, 2 / 3]])
        return SimplexRule(bary, np.full(3, 1 / 3), 2)
    if degree <= 5:
        bary, w = _dunavant5()
        return SimplexRule(bary, w, 5)
    bary, w = _collapsed_gauss(degree)
    return SimplexRule(bary, w, degree)


def simplex_rule(dim, degree):
    if dim == 1:
        return interval_rule(degree)
    if dim == 2:
        return triangle_rule(degree)
    raise ValueError(f"unsupported dimension {dim}")
