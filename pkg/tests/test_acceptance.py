"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Criteria 2-4 are run exactly as stated (reference step 2^-10). They are also
run with the finer reference step 2^-13; both variants report, and the
literal ones are allowed to fail on their own.
"""

import math
import time

import numpy as np
import pytest

from fracspde.experiments import expected_errors, run_convergence, run_deterministic_convergence, run_field_stats
from fracspde.mild import kernel_contour, kernel_ml, one_step_variance, sum_bound_check, sum_tail_bound
from fracspde.noise import coarsen, generate_paths
from fracspde.selftest import (
    KERNEL_GRID,
    check_modal_dense,
    check_noise,
    one_step_noise_moments,
)
from fracspde.cq import cq_weights
from fracspde.spectrum import interval_basis

SEED = 42
LEVELS = range(2, 7)


def _fmt(v):
    return "[" + ", ".join(f"{x:.3f}" for x in v) + "]"


def _orders_increase(report):
    """Orders rise across levels: no step down beyond 2 standard errors, last above first."""
    inc = np.diff(report.orders)
    se = report.order_increment_stderr()
    return bool(np.all(inc >= -2.0 * se) and report.orders[-1] > report.orders[0])


def _stochastic(alpha, example, tau_ref, window, monotone):
    t0 = time.perf_counter()
    rep = run_convergence(alpha, LEVELS, I=200, seed=SEED, example=example, M=64, tau_ref=tau_ref, workers=4)
    elapsed = time.perf_counter() - t0
    E_exact = expected_errors(alpha, LEVELS, M=64, tau_ref=tau_ref)
    expected = np.log2(E_exact[:-1] / E_exact[1:])
    lo, hi = window
    finest = rep.orders[-1]
    ok = lo <= finest <= hi and elapsed < 600
    if monotone:
        ok = ok and _orders_increase(rep)
    detail = (
        f"orders {_fmt(rep.orders)} (se {_fmt(rep.order_stderr())}), finest {finest:.3f} "
        f"vs [{lo}, {hi}]; exact expectation of orders {_fmt(expected)}; {elapsed:.0f} s"
    )
    return ok, detail


def test_criterion_1_deterministic_first_order(report_criterion):
    t0 = time.perf_counter()
    rep = run_deterministic_convergence(0.5, range(3, 9), M=64)
    elapsed = time.perf_counter() - t0
    ok = rep.orders[-1] >= 0.9 and elapsed < 10
    report_criterion(
        "1 deterministic CQ order (alpha=0.5)",
        ok,
        f"orders {_fmt(rep.orders)}, finest {rep.orders[-1]:.4f} >= 0.9; {elapsed:.2f} s",
    )


@pytest.mark.slow
def test_criterion_2_subdiffusion_rate(report_criterion):
    ok, detail = _stochastic(0.5, "frac_stochastic", 2.0**-10, (0.55, 0.95), monotone=True)
    report_criterion("2 alpha=0.5 rate, tau_ref=2^-10", ok, detail)


@pytest.mark.slow
def test_criterion_3_diffusion_wave_rate(report_criterion):
    ok, detail = _stochastic(1.3, "frac_stochastic", 2.0**-10, (0.30, 0.55), monotone=False)
    report_criterion("3 alpha=1.3 rate, tau_ref=2^-10", ok, detail)


@pytest.mark.slow
def test_criterion_4_parabolic_rate(report_criterion):
    ok, detail = _stochastic(1.0, "parabolic_stochastic", 2.0**-10, (0.40, 0.65), monotone=False)
    report_criterion("4 alpha=1 rate, tau_ref=2^-10", ok, detail)


@pytest.mark.slow
def test_criterion_2_subdiffusion_rate_fine_reference(report_criterion):
    ok, detail = _stochastic(0.5, "frac_stochastic", 2.0**-13, (0.55, 0.95), monotone=True)
    report_criterion("2 alpha=0.5 rate, tau_ref=2^-13", ok, detail)


@pytest.mark.slow
def test_criterion_3_diffusion_wave_rate_fine_reference(report_criterion):
    ok, detail = _stochastic(1.3, "frac_stochastic", 2.0**-13, (0.30, 0.55), monotone=False)
    report_criterion("3 alpha=1.3 rate, tau_ref=2^-13", ok, detail)


@pytest.mark.slow
def test_criterion_4_parabolic_rate_fine_reference(report_criterion):
    ok, detail = _stochastic(1.0, "parabolic_stochastic", 2.0**-13, (0.40, 0.65), monotone=False)
    report_criterion("4 alpha=1 rate, tau_ref=2^-13", ok, detail)


def test_criterion_5_mutual_oracle(report_criterion):
    t0 = time.perf_counter()
    worst = 0.0
    for a in KERNEL_GRID["alpha"]:
        for lam in KERNEL_GRID["lam"]:
            for t in KERNEL_GRID["t"]:
                worst = max(worst, abs(kernel_contour(a, lam, t) - float(kernel_ml(a, lam, t))))
    elapsed = time.perf_counter() - t0
    report_criterion(
        "5 contour vs Mittag-Leffler, 45 points",
        worst <= 1e-8 and elapsed < 5,
        f"max abs difference {worst:.2e} <= 1e-8; {elapsed:.2f} s",
    )


def test_criterion_6_one_step_variance(report_criterion):
    lam = interval_basis(64).eigenvalues
    parts, ok = [], True
    for alpha in (0.5, 1.3):
        for k in (4, 6):
            tau = 2.0**-k
            mean, se = one_step_noise_moments(alpha, tau, 64, I=10_000)
            z = (mean - one_step_variance(alpha, tau, lam)) / se
            ok &= abs(z) <= 5.0
            parts.append(f"({alpha}, 2^-{k}): {z:+.2f} se")
    report_criterion("6 one-step noise variance", ok, ", ".join(parts))


def test_criterion_7_structural_equivalences(report_criterion):
    b = cq_weights(1.0, 4096).weights
    collapse = b[0] == 1.0 and not np.any(b[1:])
    dense_ok, dense_detail = check_modal_dense(1e-12)
    noise_ok, noise_detail = check_noise()
    # seeded Monte Carlo outputs must not depend on the worker count
    a = run_convergence(0.5, range(2, 5), I=20, seed=3, M=16, tau_ref=2.0**-7, workers=1)
    c = run_convergence(0.5, range(2, 5), I=20, seed=3, M=16, tau_ref=2.0**-7, workers=4)
    f1 = run_field_stats(0.5, I=20, seed=3, workers=1)
    f4 = run_field_stats(0.5, I=20, seed=3, workers=3)
    p1 = generate_paths(5, 9, 32, 64, 1 / 64, workers=1)
    p8 = generate_paths(5, 9, 32, 64, 1 / 64, workers=8)
    threads = (
        a.to_csv() == c.to_csv()
        and f1.to_csv() == f4.to_csv()
        and np.array_equal(p1.increments, p8.increments)
        and np.array_equal(coarsen(p1, 64).increments, coarsen(p8, 64).increments)
    )
    ok = collapse and dense_ok and noise_ok and threads
    report_criterion(
        "7 structural equivalences",
        ok,
        f"alpha=1 collapse {collapse}; {dense_detail}; {noise_detail}; Monte Carlo worker invariance {threads}",
    )


def test_criterion_8_sum_bound(report_criterion):
    M = 100_000
    lam = (math.pi * np.arange(1, M + 1)) ** 2
    vals = [
        sum_bound_check(r, 0.5, 1, lam) + sum_tail_bound(r, 0.5, 1, math.pi**2, M)
        for r in np.logspace(-6, 6, 25)
    ]
    worst = max(vals)
    report_criterion("8 kernel-sum bound", worst <= 2.0, f"max ratio incl. tail {worst:.4f} <= 2.0 over 25 r values")


@pytest.mark.slow
def test_criterion_9_field_statistics(report_criterion):
    s = run_field_stats(0.5, tau=2.0**-5, M=32, epsilon=0.1, I=1000, seed=SEED, workers=4)
    dev = float(np.max(np.abs(s.mean - s.deterministic)))
    bound = 5.0 * float(np.max(s.std)) / math.sqrt(s.I)
    boundary = s.std[0] == 0.0 and s.std[-1] == 0.0
    report_criterion(
        "9 field statistics (alpha=0.5)",
        dev <= bound and boundary,
        f"max|mean - deterministic| {dev:.3e} <= {bound:.3e}; boundary std exactly 0: {boundary}",
    )
