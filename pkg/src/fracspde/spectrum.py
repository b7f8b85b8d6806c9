"""Dirichlet-Laplacian eigenpairs on the unit interval."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# volume of the unit d-ball
_UNIT_BALL_VOLUME = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}


@dataclass(frozen=True)
class EigenBasis:
    """Sine basis ``phi_j(x) = sqrt(2) sin(j pi x)`` with ``lambda_j = (j pi)**2``."""

    M: int
    eigenvalues: np.ndarray
    length: float = 1.0

    @property
    def wavenumbers(self) -> np.ndarray:
        return np.pi * np.arange(1, self.M + 1)

    def __call__(self, j: int, x):
        """Evaluate the j-th eigenfunction (1-based) at ``x``."""
        if not 1 <= j <= self.M:
            raise IndexError(f"mode {j} outside 1..{self.M}")
        return math.sqrt(2.0) * np.sin(j * np.pi * np.asarray(x, dtype=float))


def interval_basis(M: int) -> EigenBasis:
    if M < 1:
        raise ValueError(f"need at least one mode, got M={M}")
    lam = (np.pi * np.arange(1, M + 1)) ** 2
    lam.setflags(write=False)
    return EigenBasis(int(M), lam)


def eval_basis(basis: EigenBasis, x_grid) -> np.ndarray:
    """Matrix with entry ``(i, j-1) = phi_j(x_i)``."""
    x = np.asarray(x_grid, dtype=float)
    if x.ndim != 1:
        raise ValueError("x_grid must be one-dimensional")
    if np.any((x < 0.0) | (x > 1.0)):
        raise ValueError("grid points must lie in [0, 1]")
    out = math.sqrt(2.0) * np.sin(np.outer(x, basis.wavenumbers))
    # sin(j*pi) is only ~1e-13 in floating point; the boundary values are exact zeros
    out[(x == 0.0) | (x == 1.0)] = 0.0
    return out


def li_yau_bound(d: int, volume: float, j) -> float:
    """Lower bound ``C_d d / (d + 2) j**(2/d) |O|**(-2/d)`` on the j-th Dirichlet eigenvalue."""
    if d not in _UNIT_BALL_VOLUME:
        raise ValueError(f"dimension must be 1, 2 or 3, got {d}")
    if volume <= 0:
        raise ValueError(f"volume must be positive, got {volume}")
    j = np.asarray(j, dtype=float)
    if np.any(j < 1):
        raise ValueError("eigenvalue index must be >= 1")
    c_d = (2.0 * math.pi) ** 2 * _UNIT_BALL_VOLUME[d] ** (-2.0 / d)
    out = c_d * d / (d + 2.0) * j ** (2.0 / d) * volume ** (-2.0 / d)
    return float(out) if out.ndim == 0 else out
