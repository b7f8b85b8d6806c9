"""Monte Carlo convergence studies and field statistics.

Realizations are processed in fixed-size chunks; each chunk is a pure function
of ``(seed, chunk indices, config)``, and results are reassembled by
realization index, so the output does not depend on the worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cq import cq_weights
from .noise import coarsen_increments, generate_batch
from .spectrum import interval_basis
from .stepper import (
    P1Mesh,
    PolynomialSource,
    SchemeConfig,
    fem_recurrence,
    fem_rhs,
    final_response,
    solve_fem,
    solve_modal,
)

CHUNK = 8
EXAMPLES = ("frac_stochastic", "parabolic_stochastic")


def default_workers() -> int:
    return max(1, int(os.environ.get("FRACSPDE_WORKERS", "1")))


def expected_ratio(alpha: float, d: int = 1) -> float:
    """Error ratio ``2^(1 - alpha d / 2)`` expected when the step is halved."""
    return 2.0 ** (1.0 - alpha * d / 2.0)


@dataclass
class ConvergenceReport:
    """Errors per level ``tau_k = 2^-k``.

    ``metric`` is ``"mean_sq"`` for Monte Carlo runs (E is the mean squared L2
    error) and ``"l2"`` for deterministic runs (E is the L2 error itself).
    """

    alpha: float
    levels: list[int]
    E: np.ndarray
    stderr: np.ndarray
    I: int = 1
    seed: int | None = None
    tau_ref: float | None = None
    example: str = "frac_stochastic"
    M: int = 64
    epsilon: float = 1.0
    metric: str = "mean_sq"
    cov: np.ndarray | None = None  # covariance of the E estimates (Monte Carlo only)
    ratios: np.ndarray = field(init=False)
    orders: np.ndarray = field(init=False)

    def __post_init__(self):
        self.E = np.asarray(self.E, dtype=float)
        self.stderr = np.asarray(self.stderr, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            self.ratios = self.E[:-1] / self.E[1:]
            self.orders = np.log2(self.ratios)

    def _log_combination_stderr(self, g: np.ndarray) -> float:
        # delta method for sum_i g_i log2(E_i)
        if self.cov is None:
            return 0.0
        grad = g / (self.E * math.log(2.0))
        return float(math.sqrt(max(grad @ self.cov @ grad, 0.0)))

    def order_stderr(self) -> np.ndarray:
        """Delta-method standard error of each observed order."""
        out = []
        for i in range(len(self.E) - 1):
            g = np.zeros(len(self.E))
            g[i], g[i + 1] = 1.0, -1.0
            out.append(self._log_combination_stderr(g))
        return np.array(out)

    def order_increment_stderr(self) -> np.ndarray:
        """Standard error of ``orders[i+1] - orders[i]``."""
        out = []
        for i in range(len(self.E) - 2):
            g = np.zeros(len(self.E))
            g[i], g[i + 1], g[i + 2] = -1.0, 2.0, -1.0
            out.append(self._log_combination_stderr(g))
        return np.array(out)

    @property
    def taus(self) -> np.ndarray:
        return 2.0 ** -np.asarray(self.levels, dtype=float)

    def rows(self):
        for i, k in enumerate(self.levels):
            ratio = self.ratios[i - 1] if i else None
            order = self.orders[i - 1] if i else None
            yield k, float(self.taus[i]), float(self.E[i]), float(self.stderr[i]), ratio, order

    def to_csv(self) -> str:
        lines = ["k,tau,E_tau,stderr,ratio,order"]
        for k, tau, E, se, ratio, order in self.rows():
            cells = [str(k), repr(tau), repr(E), repr(se)]
            cells += ["" if v is None else repr(float(v)) for v in (ratio, order)]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def table(self) -> str:
        out = [f"{'k':>3} {'tau':>10} {'E(tau)':>12} {'stderr':>10} {'ratio':>7} {'order':>7}"]
        for k, tau, E, se, ratio, order in self.rows():
            r = "--" if ratio is None else f"{ratio:.3f}"
            o = "--" if order is None else f"{order:.3f}"
            out.append(f"{k:>3} {tau:>10.3e} {E:>12.4e} {se:>10.2e} {r:>7} {o:>7}")
        return "\n".join(out)


def _level_steps(levels, T: float) -> list[int]:
    steps = []
    for k in levels:
        n = T * 2.0**k
        if abs(n - round(n)) > 1e-9:
            raise ValueError(f"T={T} is not a multiple of tau=2^-{k}")
        steps.append(int(round(n)))
    return steps


def run_deterministic_convergence(alpha: float, levels=range(3, 9), M: int = 64, T: float = 1.0) -> ConvergenceReport:
    """L2 error at t=T of the noise-free modal scheme against ``t^2 x^2 (1-x)^2``."""
    levels = list(levels)
    basis = interval_basis(M)
    src = PolynomialSource(alpha)
    exact = src.exact_modes(basis, T)
    E = []
    for N in _level_steps(levels, T):
        traj = solve_modal(SchemeConfig(alpha, T, N, "modal", M, 0.0, src), basis)
        e = traj.coefficients[-1] - exact
        E.append(math.sqrt(e @ e))
    return ConvergenceReport(
        alpha, levels, np.array(E), np.zeros(len(E)), I=1, example="deterministic",
        M=M, epsilon=0.0, metric="l2",
    )


def _final_fem(alpha, mesh, cfg, inc):
    C, M, N = inc.shape
    rhs = fem_rhs(cfg, mesh, inc.transpose(1, 2, 0))
    U = fem_recurrence(mesh, cq_weights(alpha, N), cfg.tau, rhs)
    return U[-1].T  # (C, M-1)


def _mass_sq(mesh: P1Mesh, e: np.ndarray) -> np.ndarray:
    # e: (C, M-1) interior values
    return np.einsum("ci,ci->c", e, mesh.mass_apply(e.T).T)


def run_convergence(
    alpha: float,
    levels=range(2, 7),
    I: int = 200,
    seed: int = 42,
    example: str = "frac_stochastic",
    M: int = 64,
    tau_ref: float = 2.0**-13,
    epsilon: float = 1.0,
    T: float = 1.0,
    discretization: str = "modal",
    workers: int | None = None,
) -> ConvergenceReport:
    """Strong-error study against a fine-step surrogate sharing each Brownian path.

    For every realization one path is drawn at ``tau_ref``; the reference and
    every level ``tau_k = 2^-k`` are solved with that path (coarsened by
    summation). ``E(tau_k)`` is the sample mean of ``||U_k(T) - U_ref(T)||^2``.
    """
    if example not in EXAMPLES:
        raise ValueError(f"example must be one of {EXAMPLES}, got {example!r}")
    if example == "parabolic_stochastic" and alpha != 1.0:
        raise ValueError("the parabolic example requires alpha = 1")
    levels = list(levels)
    steps = _level_steps(levels, T)
    N_ref = T / tau_ref
    if abs(N_ref - round(N_ref)) > 1e-9:
        raise ValueError(f"tau_ref={tau_ref} does not divide T={T}")
    N_ref = int(round(N_ref))
    factors = []
    for N in steps:
        if N > N_ref or N_ref % N or (N_ref // N) & (N_ref // N - 1):
            raise ValueError(f"level with {N} steps is not a power-of-two coarsening of {N_ref}")
        factors.append(N_ref // N)
    if I < 2:
        raise ValueError("need at least two realizations")

    src = PolynomialSource(alpha)
    basis = interval_basis(M)
    mesh = P1Mesh(M)

    if discretization == "modal":
        # only u(T) is needed: precompute the final-state response of every level once
        resp, det = {}, {}
        for N in set(steps) | {N_ref}:
            tau = T / N
            resp[N] = final_response(alpha, basis.eigenvalues, tau, N)
            det[N] = np.einsum("nm,nm->m", resp[N], tau * src.modal(basis, tau * np.arange(1, N + 1)))

        def final(inc, N):
            return det[N] + epsilon * np.einsum("nm,cmn->cm", resp[N], inc)

        def sq_norm(e):
            return np.einsum("cm,cm->c", e, e)
    elif discretization == "fem":
        cfgs = {N: SchemeConfig(alpha, T, N, "fem", M, epsilon, src) for N in set(steps) | {N_ref}}

        def final(inc, N):
            return _final_fem(alpha, mesh, cfgs[N], inc)

        def sq_norm(e):
            return _mass_sq(mesh, e)
    else:
        raise ValueError(f"discretization must be 'modal' or 'fem', got {discretization!r}")

    def chunk(idx):
        inc = generate_batch(seed, idx, M, N_ref, tau_ref)
        ref = final(inc, N_ref)
        errs = np.empty((len(steps), len(idx)))
        for li, (N, f) in enumerate(zip(steps, factors)):
            errs[li] = sq_norm(final(coarsen_increments(inc, f), N) - ref)
        return errs

    errs = _map_chunks(chunk, I, workers)
    if not np.all(np.isfinite(errs)):
        raise FloatingPointError("non-finite error accumulated")
    E = errs.mean(axis=1)
    stderr = errs.std(axis=1, ddof=1) / math.sqrt(I)
    return ConvergenceReport(
        alpha, levels, E, stderr, I=I, seed=seed, tau_ref=tau_ref, example=example,
        M=M, epsilon=epsilon, cov=np.atleast_2d(np.cov(errs)) / I,
    )


def expected_errors(
    alpha: float,
    levels=range(2, 7),
    M: int = 64,
    tau_ref: float = 2.0**-13,
    epsilon: float = 1.0,
    T: float = 1.0,
) -> np.ndarray:
    """Exact expectation of the Monte Carlo estimator of :func:`run_convergence` (modal).

    Both solves are linear in the shared fine increments, so
    ``E||U_k - U_ref||^2 = ||deterministic difference||^2
    + eps^2 tau_ref sum_{i,j} (c_k[i,j] - c_ref[i,j])^2`` where ``c[i,j]`` is the
    weight of fine increment i of mode j in the final state.
    """
    levels = list(levels)
    N_ref = int(round(T / tau_ref))
    basis = interval_basis(M)
    src = PolynomialSource(alpha)
    fine = np.arange(N_ref)

    def parts(N):
        tau = T / N
        R = final_response(alpha, basis.eigenvalues, tau, N)
        det = np.einsum("nm,nm->m", R, tau * src.modal(basis, tau * np.arange(1, N + 1)))
        return R[fine // (N_ref // N)], det

    c_ref, d_ref = parts(N_ref)
    out = []
    for N in _level_steps(levels, T):
        c, d = parts(N)
        out.append(np.sum((d - d_ref) ** 2) + epsilon**2 * tau_ref * np.sum((c - c_ref) ** 2))
    return np.array(out)


def _map_chunks(fn, I: int, workers: int | None) -> np.ndarray:
    workers = default_workers() if workers is None else max(1, int(workers))
    chunks = [np.arange(s, min(s + CHUNK, I)) for s in range(0, I, CHUNK)]
    if workers == 1:
        parts = [fn(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(fn, chunks))
    return np.concatenate(parts, axis=-1)


@dataclass
class FieldStats:
    x: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    samples: np.ndarray
    exact: np.ndarray
    deterministic: np.ndarray
    I: int = 0

    def to_csv(self) -> str:
        lines = ["x,mean,std,sample1,sample2,sample3,exact"]
        for i, x in enumerate(self.x):
            row = [x, self.mean[i], self.std[i], *self.samples[:3, i], self.exact[i]]
            lines.append(",".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"


def run_field_stats(
    alpha: float,
    tau: float = 2.0**-5,
    M: int = 32,
    epsilon: float = 0.1,
    I: int = 1000,
    seed: int = 42,
    T: float = 1.0,
    workers: int | None = None,
) -> FieldStats:
    """Pointwise mean and standard deviation at ``t = T`` of the P1 solution.

    The mesh has M cells and the noise is truncated to M sine modes.
    """
    if I < 3:
        raise ValueError("need at least three realizations for the sample fields")
    N = T / tau
    if abs(N - round(N)) > 1e-9:
        raise ValueError(f"tau={tau} does not divide T={T}")
    N = int(round(N))
    src = PolynomialSource(alpha)
    cfg = SchemeConfig(alpha, T, N, "fem", M, epsilon, src)
    mesh = P1Mesh(M)

    def chunk(idx):
        inc = generate_batch(seed, idx, M, N, tau)
        return _final_fem(alpha, mesh, cfg, inc).T  # (M-1, C)

    interior = _map_chunks(chunk, I, workers)
    fields = np.zeros((I, M + 1))
    fields[:, 1:-1] = interior.T
    det = solve_fem(SchemeConfig(alpha, T, N, "fem", M, 0.0, src)).coefficients[-1]
    x = mesh.nodes
    return FieldStats(
        x=x,
        mean=fields.mean(axis=0),
        std=fields.std(axis=0, ddof=1),
        samples=fields[:3].copy(),
        exact=src.exact(x, T),
        deterministic=det,
        I=I,
    )
