"""Backward-Euler convolution-quadrature time stepping.

Two spatial discretizations share the same time stepper:

* ``modal``: spectral Galerkin in the sine basis, where every mode evolves
  independently through :func:`step_modal`;
* ``fem``: continuous P1 elements on a uniform mesh, one tridiagonal solve per
  step.

Initial data is always zero. Noise enters through per-mode Brownian
increments (see :mod:`fracspde.noise`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from .cq import CQWeights, cq_weights
from .noise import NoisePaths, coarsen_increments
from .spectrum import EigenBasis, eval_basis, interval_basis


# manufactured sources with exact solution t^2 x^2 (1-x)^2


def profile_sine_coeffs(M: int) -> np.ndarray:
    """Sine coefficients ``int_0^1 x^2 (1-x)^2 sqrt(2) sin(j pi x) dx``, j = 1..M."""
    j = np.arange(1, M + 1, dtype=float)
    parity = 1.0 - (-1.0) ** j
    return 2.0 * math.sqrt(2.0) * (12.0 - (math.pi * j) ** 2) * parity / (math.pi * j) ** 5


@dataclass(frozen=True)
class PolynomialSource:
    """``f = 2t g(x) - c(t) g''(x)`` with ``g = x^2 (1-x)^2``, ``c(t) = 2 t^(1+alpha) / Gamma(2+alpha)``.

    The deterministic solution is ``t^2 g(x)``. At ``alpha = 1`` this is the
    integer-order heat source ``2t g - t^2 g''``.
    """

    alpha: float

    def memory_factor(self, t):
        return 2.0 * np.asarray(t, dtype=float) ** (1.0 + self.alpha) / math.gamma(2.0 + self.alpha)

    def __call__(self, x, t):
        x = np.asarray(x, dtype=float)
        g = x**2 * (1.0 - x) ** 2
        g2 = 2.0 - 12.0 * x + 12.0 * x**2
        return 2.0 * t * g - self.memory_factor(t) * g2

    def modal(self, basis: EigenBasis, t) -> np.ndarray:
        """Exact sine coefficients of f(., t); shape ``(len(t), M)``.

        Uses ``int g'' phi_j = -lam_j int g phi_j`` (both vanish at the ends).
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        G = profile_sine_coeffs(basis.M)
        return 2.0 * t[:, None] * G + self.memory_factor(t)[:, None] * basis.eigenvalues * G

    @staticmethod
    def exact(x, t):
        x = np.asarray(x, dtype=float)
        return t**2 * x**2 * (1.0 - x) ** 2

    @staticmethod
    def exact_modes(basis: EigenBasis, t) -> np.ndarray:
        return t**2 * profile_sine_coeffs(basis.M)


def project_source(f: Callable, basis: EigenBasis, times) -> np.ndarray:
    """L2 projection of a general ``f(x, t)`` onto the sine basis by composite Gauss quadrature.

    Eight points per half-wavelength of the highest mode.
    """
    cells = 4 * basis.M
    xg, wg = np.polynomial.legendre.leggauss(8)
    edges = np.linspace(0.0, 1.0, cells + 1)
    half = 0.5 * np.diff(edges)
    x = ((edges[:-1] + edges[1:]) / 2)[:, None] + half[:, None] * xg
    w = (half[:, None] * wg).ravel()
    x = x.ravel()
    phi = eval_basis(basis, x) * w[:, None]
    return np.array([f(x, t) @ phi for t in np.atleast_1d(times)])


# configuration and trajectories


@dataclass(frozen=True)
class SchemeConfig:
    alpha: float
    T: float = 1.0
    N: int = 32
    kind: Literal["modal", "fem"] = "modal"
    M: int = 32
    epsilon: float = 0.0
    source: Callable | None = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ValueError(f"alpha must lie in (0, 2), got {self.alpha}")
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")
        if self.M < 1 or (self.kind == "fem" and self.M < 2):
            raise ValueError(f"M too small for {self.kind}: {self.M}")
        if self.kind not in ("modal", "fem"):
            raise ValueError(f"kind must be 'modal' or 'fem', got {self.kind!r}")

    @property
    def tau(self) -> float:
        return self.T / self.N

    @property
    def h(self) -> float:
        return 1.0 / self.M


@dataclass(frozen=True)
class Trajectory:
    """Solution history; row n holds the coefficients at ``t_n = n tau``.

    Modal rows are sine coefficients, nodal rows are P1 nodal values
    including the two boundary nodes.
    """

    kind: Literal["modal", "nodal"]
    coefficients: np.ndarray
    tau: float
    basis: EigenBasis | None = None
    mesh: "P1Mesh | None" = None

    @property
    def N(self) -> int:
        return self.coefficients.shape[0] - 1

    def field(self, n: int, x=None):
        """Return ``(x, u)`` at step n; modal fields are evaluated on ``x`` (default: 129 points)."""
        if self.kind == "nodal":
            return self.mesh.nodes, self.coefficients[n]
        x = np.linspace(0.0, 1.0, 129) if x is None else np.asarray(x, dtype=float)
        return x, eval_basis(self.basis, x) @ self.coefficients[n]


def _noise_increments(paths: NoisePaths | None, tau: float, N: int) -> np.ndarray | None:
    if paths is None:
        return None
    ratio = tau / paths.tau
    factor = int(round(ratio))
    if factor < 1 or abs(ratio - factor) > 1e-9 * ratio:
        raise ValueError(f"solver tau {tau} is not a multiple of the path tau {paths.tau}")
    inc = coarsen_increments(paths.increments, factor)
    if inc.shape[1] != N:
        raise ValueError(f"paths cover {inc.shape[1]} steps of size {tau}, solver needs {N}")
    return inc


# modal scheme


def step_modal(history, lam: float, weights: CQWeights, tau: float, forcing_n: float = 0.0, dW_n: float = 0.0) -> float:
    """One step of the scalar scheme for a single mode.

    ``history`` holds ``u_0 .. u_{n-1}``; returns

        u_n = [u_{n-1} - tau^a lam sum_{k<n} b_{n-k} u_k + tau f_n + dW_n] / (1 + tau^a b_0 lam)
    """
    u = np.asarray(history, dtype=float)
    n = len(u)
    if n < 1:
        raise ValueError("history must contain at least u_0")
    if n >= len(weights):
        raise ValueError(f"need weights up to b_{n}, have {len(weights)}")
    b = weights.weights
    ta = tau**weights.alpha
    memory = b[n:0:-1] @ u
    return float((u[-1] - ta * lam * memory + tau * forcing_n + dW_n) / (1.0 + ta * b[0] * lam))


def modal_recurrence(lam: np.ndarray, weights: CQWeights, tau: float, rhs: np.ndarray) -> np.ndarray:
    """Run the modal scheme for independent columns.

    ``lam`` has shape ``(K,)``; ``rhs[n-1]`` holds ``tau f_n + eps dW_n`` for
    each column. Returns the ``(N+1, K)`` history with a zero first row.
    """
    N, K = rhs.shape
    b = weights.weights
    ta = tau**weights.alpha
    scale = ta * lam
    denom = 1.0 + ta * b[0] * lam
    U = np.zeros((N + 1, K))
    for n in range(1, N + 1):
        memory = b[n:0:-1] @ U[:n]
        U[n] = (U[n - 1] - scale * memory + rhs[n - 1]) / denom
    return U


def final_response(alpha: float, lam: np.ndarray, tau: float, N: int) -> np.ndarray:
    """Weights ``R[n-1, j]`` with ``u_N = sum_n R[n-1, j] rhs_n`` for mode j.

    The scheme is linear and shift-invariant in time, so the final state is a
    fixed linear functional of the per-step right-hand sides. ``R`` is obtained
    by marching :func:`modal_recurrence` once on a unit impulse.
    """
    lam = np.asarray(lam, dtype=float)
    rhs = np.zeros((N, lam.size))
    rhs[0] = 1.0
    H = modal_recurrence(lam, cq_weights(alpha, N), tau, rhs)
    # impulse at step n reaches t_N after N - n steps: H[N - n + 1]
    return H[N:0:-1].copy()


def solve_modal(
    config: SchemeConfig,
    basis: EigenBasis | None = None,
    paths: NoisePaths | None = None,
    source_modes: np.ndarray | None = None,
) -> Trajectory:
    """Spectral Galerkin solve; every mode follows :func:`step_modal`.

    ``source_modes[n-1, j-1]`` is the sine coefficient of f(., t_n). When it is
    omitted it is taken from ``config.source`` (closed form for
    :class:`PolynomialSource`, quadrature otherwise).
    """
    basis = interval_basis(config.M) if basis is None else basis
    if basis.M != config.M:
        raise ValueError(f"basis has {basis.M} modes, config asks for {config.M}")
    N, tau = config.N, config.tau
    times = tau * np.arange(1, N + 1)
    rhs = np.zeros((N, basis.M))
    if source_modes is None and config.source is not None:
        if isinstance(config.source, PolynomialSource):
            source_modes = config.source.modal(basis, times)
        else:
            source_modes = project_source(config.source, basis, times)
    if source_modes is not None:
        source_modes = np.asarray(source_modes, dtype=float)
        if source_modes.shape != (N, basis.M):
            raise ValueError(f"source table shape {source_modes.shape} != {(N, basis.M)}")
        rhs += tau * source_modes
    inc = _noise_increments(paths, tau, N)
    if inc is not None and config.epsilon != 0.0:
        if inc.shape[0] < basis.M:
            raise ValueError(f"paths carry {inc.shape[0]} modes, need {basis.M}")
        rhs += config.epsilon * inc[: basis.M].T
    U = modal_recurrence(basis.eigenvalues, cq_weights(config.alpha, N), tau, rhs)
    return Trajectory("modal", U, tau, basis=basis)


# P1 finite elements


@dataclass(frozen=True)
class P1Mesh:
    """Uniform mesh of (0, 1) with M cells; matrices act on the M-1 interior nodes."""

    M: int

    @property
    def h(self) -> float:
        return 1.0 / self.M

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.M + 1)

    def mass_bands(self):
        h = self.h
        return 2.0 * h / 3.0, h / 6.0

    def stiffness_bands(self):
        h = self.h
        return 2.0 / h, -1.0 / h

    def load(self, f, t) -> np.ndarray:
        """Exact-for-quintics P1 load vector of ``f(., t)`` on the interior nodes."""
        xg, wg = np.polynomial.legendre.leggauss(3)
        h = self.h
        left = self.nodes[:-1]
        x = left[:, None] + 0.5 * h * (xg + 1.0)
        s = 0.5 * (xg + 1.0)  # local coordinate in [0, 1]
        fx = f(x, t) * (0.5 * h * wg)
        right_hat = fx @ s  # contribution of cell c to node c+1
        left_hat = fx @ (1.0 - s)  # contribution of cell c to node c
        return right_hat[:-1] + left_hat[1:]

    def noise_load(self, M_modes: int) -> np.ndarray:
        """``(M-1, M_modes)`` matrix of ``int phi_j hat_i``, closed form for the sine basis."""
        k = np.pi * np.arange(1, M_modes + 1)
        h = self.h
        xi = self.nodes[1:-1]
        return math.sqrt(2.0) * np.sin(np.outer(xi, k)) * (2.0 * (1.0 - np.cos(k * h)) / (k**2 * h))

    def mass_apply(self, u: np.ndarray) -> np.ndarray:
        d, o = self.mass_bands()
        return _tri_apply(d, o, u)

    def stiffness_apply(self, u: np.ndarray) -> np.ndarray:
        d, o = self.stiffness_bands()
        return _tri_apply(d, o, u)


def _tri_apply(diag: float, off: float, u: np.ndarray) -> np.ndarray:
    out = diag * u
    out[1:] += off * u[:-1]
    out[:-1] += off * u[1:]
    return out


class TridiagonalSolver:
    """Thomas elimination for a constant symmetric tridiagonal matrix.

    The factorization is computed once; :meth:`solve` accepts right-hand sides
    of shape ``(n,)`` or ``(n, K)``.
    """

    def __init__(self, n: int, diag: float, off: float):
        self.n = n
        self.off = off
        piv = np.empty(n)
        piv[0] = diag
        for i in range(n):
            if i:
                piv[i] = diag - off * off / piv[i - 1]
            if piv[i] <= 0.0:
                raise np.linalg.LinAlgError(f"non-positive pivot at row {i} in tridiagonal elimination")
        self.pivots = piv
        self.ratio = off / piv

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        y = np.array(rhs, dtype=float, copy=True)
        r, off = self.ratio, self.off
        for i in range(1, self.n):
            y[i] -= r[i - 1] * y[i - 1]
        y[-1] /= self.pivots[-1]
        for i in range(self.n - 2, -1, -1):
            y[i] = (y[i] - off * y[i + 1]) / self.pivots[i]
        return y


def fem_recurrence(
    mesh: P1Mesh, weights: CQWeights, tau: float, rhs: np.ndarray
) -> np.ndarray:
    """March ``(M + tau^a b_0 A) u_n = M u_{n-1} - tau^a A sum_{k<n} b_{n-k} u_k + rhs_n``.

    ``rhs`` has shape ``(N, M-1)`` or ``(N, M-1, K)`` for K independent
    right-hand sides. Returns interior values with a zero first row.
    """
    N = rhs.shape[0]
    b = weights.weights
    ta = tau**weights.alpha
    md, mo = mesh.mass_bands()
    ad, ao = mesh.stiffness_bands()
    solver = TridiagonalSolver(mesh.M - 1, md + ta * b[0] * ad, mo + ta * b[0] * ao)
    U = np.zeros((N + 1,) + rhs.shape[1:])
    for n in range(1, N + 1):
        memory = np.tensordot(b[n:0:-1], U[:n], axes=1)
        r = mesh.mass_apply(U[n - 1]) - ta * mesh.stiffness_apply(memory) + rhs[n - 1]
        U[n] = solver.solve(r)
    return U


def fem_rhs(config: SchemeConfig, mesh: P1Mesh, increments: np.ndarray | None) -> np.ndarray:
    """Per-step load ``tau F_n + eps G_n``; increments may carry a trailing batch axis."""
    N, tau = config.N, config.tau
    batch = () if increments is None or increments.ndim == 2 else increments.shape[2:]
    rhs = np.zeros((N, mesh.M - 1) + batch)
    if config.source is not None:
        F = np.array([mesh.load(config.source, tau * n) for n in range(1, N + 1)])
        rhs += tau * F.reshape(F.shape + (1,) * len(batch))
    if increments is not None and config.epsilon != 0.0:
        G = mesh.noise_load(increments.shape[0])
        # (M-1, modes) x (modes, N, ...) -> (N, M-1, ...)
        rhs += config.epsilon * np.moveaxis(np.tensordot(G, increments, axes=1), 1, 0)
    return rhs


def solve_fem(config: SchemeConfig, paths: NoisePaths | None = None, source=None) -> Trajectory:
    """P1 finite-element solve on the uniform mesh ``h = 1/M``.

    The white-noise load is the spectrally truncated field
    ``sum_j dW_j phi_j`` tested against the hat functions.
    """
    if source is not None:
        config = SchemeConfig(**{**config.__dict__, "source": source})
    mesh = P1Mesh(config.M)
    inc = _noise_increments(paths, config.tau, config.N)
    U = fem_recurrence(mesh, cq_weights(config.alpha, config.N), config.tau, fem_rhs(config, mesh, inc))
    full = np.zeros((config.N + 1, config.M + 1))
    full[:, 1:-1] = U
    return Trajectory("nodal", full, config.tau, mesh=mesh)


def l2_norm(traj: Trajectory, n: int) -> float:
    """L2(0,1) norm at step n: Parseval for modal, ``sqrt(u^T M u)`` for nodal."""
    if not 0 <= n <= traj.N:
        raise IndexError(f"step {n} outside 0..{traj.N}")
    c = traj.coefficients[n]
    if traj.kind == "modal":
        return float(np.sqrt(c @ c))
    h = traj.mesh.h
    # full mass matrix including the boundary rows (diagonal h/3 there)
    mc = (2.0 * h / 3.0) * c
    mc[[0, -1]] = (h / 3.0) * c[[0, -1]]
    mc[1:] += (h / 6.0) * c[:-1]
    mc[:-1] += (h / 6.0) * c[1:]
    return float(np.sqrt(c @ mc))
