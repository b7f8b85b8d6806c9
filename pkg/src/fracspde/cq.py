"""Backward-Euler convolution quadrature for the fractional derivative of order 1 - alpha."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class CQWeights:
    """Taylor coefficients b_0..b_n of (1 - zeta)**(1 - alpha)."""

    alpha: float
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.weights)

    def __getitem__(self, j):
        return self.weights[j]


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    return alpha


@lru_cache(maxsize=64)
def _weights_table(alpha: float, n: int) -> np.ndarray:
    ratios = (np.arange(1, n + 1, dtype=float) - 2.0 + alpha) / np.arange(1, n + 1, dtype=float)
    out = np.empty(n + 1)
    out[0] = 1.0
    # cumprod multiplies left to right, i.e. b_j = b_{j-1} * ratio_j
    out[1:] = np.cumprod(ratios)
    out.setflags(write=False)
    return out


def cq_weights(alpha: float, n: int) -> CQWeights:
    """Return the convolution-quadrature weights b_0..b_n for order 1 - alpha.

    The weights follow the recurrence ``b_j = b_{j-1} (j - 2 + alpha) / j``.
    Tables are cached per ``(alpha, n)`` and returned read-only so they can be
    shared between realizations and threads.

    >>> cq_weights(0.5, 2).weights.tolist()
    [1.0, -0.5, -0.125]
    """
    alpha = _check_alpha(alpha)
    n = int(n)
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    return CQWeights(alpha, _weights_table(alpha, n))


def discrete_frac_derivative(values, weights: CQWeights, tau: float) -> np.ndarray:
    """Apply the discrete derivative ``d_n = tau**(alpha-1) sum_j b_{n-j} v_j``.

    ``values`` may be a 1-d sequence of scalars or a 2-d array whose first axis
    is time (one column per spatial degree of freedom).
    """
    v = np.asarray(values, dtype=float)
    if v.ndim == 0:
        raise ValueError("values must be a sequence")
    n_steps = v.shape[0]
    if n_steps > len(weights):
        raise ValueError(
            f"need at least {n_steps} weights for {n_steps} values, got {len(weights)}"
        )
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    b = weights.weights
    scale = tau ** (weights.alpha - 1.0)
    out = np.empty_like(v)
    for n in range(n_steps):
        out[n] = b[n::-1] @ v[: n + 1]
    return scale * out
