"""L1 discretisation of the Caputo derivative on a uniform time grid.

With ``b_k = (k+1)^(1-alpha) - k^(1-alpha)`` the discrete operator is

    D^alpha phi^n = tau^-alpha / Gamma(2-alpha) * sum_{k=0}^{n} bt_k^n phi^k

where ``bt_n^n = 1``, ``bt_k^n = b_{n-k} - b_{n-k-1}`` for ``0 < k < n`` and
``bt_0^n = (n-1)^(1-alpha) - n^(1-alpha)``.
"""
from dataclasses import dataclass, field
import math

import numpy as np


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


@dataclass(frozen=True)
class TimeGrid:
    tau: float
    N: int

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")

    @classmethod
    def from_final_time(cls, T, N):
        return cls(T / N, int(N))

    @property
    def T(self):
        return self.N * self.tau

    def t(self, n):
        return n * self.tau

    @property
    def times(self):
        return np.arange(self.N + 1) * self.tau


@dataclass(frozen=True, eq=False)
class L1Weights:
    """Precomputed ``b_k`` for ``k = 0..N-1`` plus the Gamma(2-alpha) factor."""

    alpha: float
    b: np.ndarray
    gamma: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "gamma", math.gamma(2.0 - self.alpha))

    @property
    def N(self):
        return len(self.b)

    def tilde(self, n):
        """Coefficients ``bt_k^n`` for ``k = 0..n`` as an array of length ``n + 1``."""
        if not 1 <= n <= self.N:
            raise IndexError(f"step {n} outside [1, {self.N}]")
        bt = np.empty(n + 1)
        bt[n] = 1.0
        k = np.arange(1, n)
        bt[1:n] = self.b[n - k] - self.b[n - k - 1]
        bt[0] = (n - 1) ** (1 - self.alpha) - n ** (1 - self.alpha)
        return bt

    def tilde_entry(self, k, n):
        return float(self.tilde(n)[k])


def l1_weights(alpha, N):
    """Compute the L1 coefficients for ``N`` steps."""
    _check_alpha(alpha)
    if int(N) != N or N < 1:
        raise ValueError("N must be a positive integer")
    k = np.arange(1, int(N), dtype=float)
    p = 1.0 - alpha
    # (k+1)^p - k^p without cancellation for large k
    tail = k ** p * np.expm1(p * np.log1p(1.0 / k))
    b = np.concatenate([[1.0], tail])
    b.setflags(write=False)
    return L1Weights(float(alpha), b)


def caputo_apply(weights, tau, history):
    """Apply the discrete Caputo operator at the last level of ``history``.

    ``history`` is a sequence ``U^0 .. U^n`` (scalars or equally sized
    vectors) with ``n >= 1``.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    try:
        H = np.asarray(history, dtype=float)
    except ValueError as exc:
        raise ValueError("history vectors must all have the same length") from exc
    if H.ndim == 0 or len(H) < 2:
        raise ValueError("history needs at least two levels")
    n = len(H) - 1
    bt = weights.tilde(n)
    return tau ** (-weights.alpha) / weights.gamma * np.tensordot(bt, H, axes=(0, 0))


def history_rhs_weights(weights, n):
    """Multipliers ``-bt_k^n / Gamma(2-alpha)`` of ``B1 U^k`` for ``k < n``."""
    return -weights.tilde(n)[:n] / weights.gamma
