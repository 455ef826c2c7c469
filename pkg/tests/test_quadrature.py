import math

import numpy as np
import pytest

from fracvolve.quadrature import interval_rule, triangle_rule


def _monomial_exact(i, j):
    # int over reference triangle of x^i y^j = i! j! / (i + j + 2)!
    return math.factorial(i) * math.factorial(j) / math.factorial(i + j + 2)


@pytest.mark.parametrize("degree", [1, 2, 3, 5, 6, 8, 10])
def test_triangle_rule_exactness(degree):
    rule = triangle_rule(degree)
    x, y = rule.bary[:, 1], rule.bary[:, 2]
    assert rule.degree >= degree
    for i in range(degree + 1):
        for j in range(degree + 1 - i):
            approx = 0.5 * np.sum(rule.weights * x ** i * y ** j)
            assert approx == pytest.approx(_monomial_exact(i, j), rel=1e-13, abs=1e-15)


@pytest.mark.parametrize("degree", [0, 1, 3, 5, 9])
def test_interval_rule_exactness(degree):
    rule = interval_rule(degree)
    s = rule.bary[:, 1]
    for k in range(degree + 1):
        assert np.sum(rule.weights * s ** k) == pytest.approx(1.0 / (k + 1), rel=1e-14)


def test_bary_rows_sum_to_one():
    for rule in (triangle_rule(5), interval_rule(5), triangle_rule(9)):
        np.testing.assert_allclose(rule.bary.sum(axis=1), 1.0, atol=1e-15)
        assert rule.weights.sum() == pytest.approx(1.0, abs=1e-14)
