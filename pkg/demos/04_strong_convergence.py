"""Strong convergence in time with space-time white noise.

E(tau) is the Monte Carlo mean of ||U_tau(1) - U_ref(1)||^2 over realizations,
each level driven by the same Brownian path as a fine-step reference. For
d = 1 the squared error is expected to shrink by 2^(1 - alpha/2) per halving,
i.e. an observed order of 1 - alpha/2.

Run: python demos/04_strong_convergence.py   (about two minutes)
"""
import numpy as np

from fracspde import expected_errors, run_convergence
from fracspde.experiments import expected_ratio

levels = range(2, 7)
for alpha, example in [(0.5, "frac_stochastic"), (1.3, "frac_stochastic"), (1.0, "parabolic_stochastic")]:
    rep = run_convergence(alpha, levels, I=200, seed=42, example=example, M=64, tau_ref=2.0**-13, workers=4)
    print(f"alpha = {alpha}, {example}, I = 200, tau_ref = 2^-13;"
          f" asymptotic order {np.log2(expected_ratio(alpha)):.3f}")
    print(rep.table())
    print("order standard errors:", np.round(rep.order_stderr(), 3), "\n")

# Both solves are linear in the noise, so the expectation of the estimator can be
# computed exactly. That separates Monte Carlo scatter from genuine effects.
# Here: how a too-coarse reference inflates the observed orders.
print("exact expected orders, alpha = 1.3, M = 64")
for k_ref in (10, 13):
    E = expected_errors(1.3, levels, M=64, tau_ref=2.0**-k_ref)
    print(f"  tau_ref = 2^-{k_ref}:", np.round(np.log2(E[:-1] / E[1:]), 3))
