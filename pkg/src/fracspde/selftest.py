"""Structural property checks, grouped the way the ``selftest`` subcommand reports them.

Each check returns ``(passed, detail)``. The oracles here (dense space-time
solve, a separately written backward-Euler heat solver, binomial weights) do
not share code with the paths they check.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import linalg
from scipy.special import binom

from .cq import cq_weights, discrete_frac_derivative
from .mild import kernel_contour, kernel_ml, one_step_variance
from .noise import coarsen, generate_batch, generate_paths
from .spectrum import interval_basis
from .stepper import PolynomialSource, SchemeConfig, modal_recurrence, solve_fem

KERNEL_GRID = dict(
    alpha=(0.3, 0.5, 1.0, 1.3, 1.7),
    lam=(math.pi**2, (4 * math.pi) ** 2, (32 * math.pi) ** 2),
    t=(0.01, 0.1, 1.0),
)


# oracles


def dense_space_time_solve(alpha, lam, tau, rhs):
    """Solve the whole CQ system for all steps at once (no recurrence).

    Unknown vector is ``u_1..u_N`` stacked step-major; ``rhs[n-1]`` is the
    per-step forcing ``tau f_n + dW_n`` for every mode.
    """
    N, M = rhs.shape
    b = cq_weights(alpha, N).weights
    L = np.diag(lam)
    A = np.zeros((N * M, N * M))
    I = np.eye(M)
    for n in range(1, N + 1):
        r = slice((n - 1) * M, n * M)
        A[r, r] += I / tau
        if n > 1:
            A[r, (n - 2) * M : (n - 1) * M] -= I / tau
        for k in range(1, n + 1):
            A[r, (k - 1) * M : k * M] += tau ** (alpha - 1.0) * b[n - k] * L
    u = np.linalg.solve(A, (rhs / tau).ravel())
    return np.vstack([np.zeros(M), u.reshape(N, M)])


def backward_euler_heat_fem(M, N, T, source, increments, epsilon):
    """Classic ``(M + tau A) u_n = M u_{n-1} + tau F_n + eps G_n`` with P1 elements."""
    h, tau = 1.0 / M, T / N
    n = M - 1
    mass = np.zeros((3, n))
    mass[0, 1:] = mass[2, :-1] = h / 6.0
    mass[1] = 4.0 * h / 6.0
    stiff = np.zeros((3, n))
    stiff[0, 1:] = stiff[2, :-1] = -1.0 / h
    stiff[1] = 2.0 / h
    system = mass + tau * stiff
    x = np.linspace(0.0, 1.0, M + 1)[1:-1]
    # 5-point Gauss on each half of the hat support
    xg, wg = np.polynomial.legendre.leggauss(5)

    def load(t):
        out = np.zeros(n)
        for side in (-1.0, 1.0):
            s = 0.5 * (xg + 1.0)  # distance from node in units of h
            pts = x[:, None] + side * h * s
            out += (source(pts, t) * (1.0 - s)) @ (0.5 * h * wg)
        return out

    k = math.pi * np.arange(1, increments.shape[0] + 1)
    hat_sine = (
        math.sqrt(2.0) / (k**2 * h)
        * (2.0 * np.sin(np.outer(x, k)) - np.sin(np.outer(x - h, k)) - np.sin(np.outer(x + h, k)))
    )
    u = np.zeros(n)
    out = [np.zeros(M + 1)]
    for step in range(1, N + 1):
        mu = mass[1] * u
        mu[1:] += mass[0, 1:] * u[:-1]
        mu[:-1] += mass[2, :-1] * u[1:]
        rhs = mu + tau * load(step * tau) + epsilon * hat_sine @ increments[:, step - 1]
        u = linalg.solve_banded((1, 1), system, rhs)
        out.append(np.concatenate([[0.0], u, [0.0]]))
    return np.array(out)


# checks


def check_weights():
    b = cq_weights(1.0, 1000).weights
    if np.any(b[1:] != 0.0) or b[0] != 1.0:
        return False, "alpha=1 weights are not exactly [1, 0, ...]"
    worst = 0.0
    j = np.arange(51)
    for alpha in np.round(np.arange(0.1, 2.0, 0.1), 10):
        direct = (-1.0) ** j * binom(1.0 - alpha, j)
        w = cq_weights(alpha, 50).weights
        mask = direct != 0
        worst = max(worst, float(np.max(np.abs(w[mask] / direct[mask] - 1.0))))
    if worst > 1e-12:
        return False, f"recurrence vs binomial rel. error {worst:.2e}"
    rng = np.random.default_rng(0)
    v = np.zeros(2000)
    v[:12] = rng.standard_normal(12)
    gf_worst = 0.0
    for alpha in (0.3, 0.7, 1.4):
        tau = 0.1
        d = discrete_frac_derivative(v, cq_weights(alpha, 1999), tau)
        for zeta in (0.9, -0.5 + 0.6j, 0.3j):
            pw = zeta ** np.arange(2000)
            lhs = d @ pw
            rhs = ((1 - zeta) / tau) ** (1 - alpha) * (v @ pw)
            gf_worst = max(gf_worst, abs(lhs - rhs) / abs(rhs))
    return gf_worst <= 1e-10, f"binomial {worst:.1e}, generating function {gf_worst:.1e}"


def check_mutual_oracle(tol=1e-8):
    worst = 0.0
    for a in KERNEL_GRID["alpha"]:
        for lam in KERNEL_GRID["lam"]:
            for t in KERNEL_GRID["t"]:
                worst = max(worst, abs(kernel_contour(a, lam, t) - float(kernel_ml(a, lam, t))))
    return worst <= tol, f"max |contour - Mittag-Leffler| = {worst:.2e} (tol {tol:.0e})"


def check_modal_dense(tol=1e-12):
    rng = np.random.default_rng(1)
    worst = 0.0
    for alpha in (0.4, 1.0, 1.6):
        M, N = 8, 16
        lam = interval_basis(M).eigenvalues
        rhs = rng.standard_normal((N, M))
        tau = 1.0 / N
        rec = modal_recurrence(lam, cq_weights(alpha, N), tau, rhs)
        dense = dense_space_time_solve(alpha, lam, tau, rhs)
        worst = max(worst, float(np.max(np.abs(rec - dense)) / np.max(np.abs(dense))))
    return worst <= tol, f"recurrence vs dense rel. difference {worst:.2e}"


def check_alpha_one_reduction(tol=1e-14):
    M, N = 32, 24
    paths = generate_paths(7, 0, M, N, 1.0 / N)
    src = PolynomialSource(1.0)
    cq = solve_fem(SchemeConfig(1.0, 1.0, N, "fem", M, 0.3, src), paths).coefficients
    be = backward_euler_heat_fem(M, N, 1.0, src, np.asarray(paths.increments), 0.3)
    rel = float(np.max(np.abs(cq - be)) / np.max(np.abs(be)))
    return rel <= tol, f"CQ(alpha=1) vs backward Euler rel. difference {rel:.2e}"


def one_step_noise_moments(alpha, tau, M, I=10_000, seed=2024):
    """Sample mean and standard error of ``||u_1||^2`` after one step from rest."""
    lam = interval_basis(M).eigenvalues
    inc = generate_batch(seed, np.arange(I), M, 1, tau)[:, :, 0]  # (I, M)
    rhs = inc.reshape(1, I * M)
    u1 = modal_recurrence(np.tile(lam, I), cq_weights(alpha, 1), tau, rhs)[1].reshape(I, M)
    sq = np.einsum("im,im->i", u1, u1)
    return float(sq.mean()), float(sq.std(ddof=1) / math.sqrt(I))


def check_one_step_variance():
    worst = 0.0
    for alpha in (0.5, 1.3):
        for tau in (2.0**-4, 2.0**-6):
            mean, se = one_step_noise_moments(alpha, tau, 64)
            exact = one_step_variance(alpha, tau, interval_basis(64).eigenvalues)
            worst = max(worst, abs(mean - exact) / se)
    return worst <= 5.0, f"max deviation {worst:.2f} standard errors"


def check_noise():
    p = generate_paths(11, 3, 16, 256, 2.0**-8)
    twice = coarsen(coarsen(p, 2), 2).increments
    once = coarsen(p, 4).increments
    if not np.array_equal(twice, once):
        return False, "coarsen(coarsen(p,2),2) != coarsen(p,4)"
    if not np.array_equal(coarsen(p, 8).total(), p.total()):
        return False, "coarse and fine path totals differ"
    q = generate_paths(11, 3, 16, 256, 2.0**-8, workers=4)
    if not np.array_equal(p.increments, q.increments):
        return False, "paths depend on worker count"
    return True, "coarsening and worker-count invariance are bitwise"


GROUPS = {
    "weights": check_weights,
    "mutual-oracle": check_mutual_oracle,
    "modal-vs-dense": check_modal_dense,
    "alpha1-reduction": check_alpha_one_reduction,
    "variance": check_one_step_variance,
    "noise": check_noise,
}


def run_all(out=print) -> bool:
    ok_all = True
    for name, fn in GROUPS.items():
        try:
            ok, detail = fn()
        except Exception as exc:  # reported, not raised: selftest prints every group
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        ok_all &= ok
        out(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return ok_all
