"""Convolution-quadrature weights and the per-mode kernel, computed two ways.

Run: python demos/01_weights_and_kernel.py
"""
import math

import numpy as np

from fracspde import cq_weights, discrete_frac_derivative, kernel_contour, kernel_ml

# The weights are the Taylor coefficients of (1 - z)^(1 - alpha).
for alpha in (0.5, 1.0, 1.5):
    print(f"alpha={alpha}:", np.round(cq_weights(alpha, 6).weights, 5))

# At alpha = 1 the memory term disappears and the scheme is implicit Euler.
print("alpha=1 weights beyond b_0 all zero:", not np.any(cq_weights(1.0, 10_000).weights[1:]))

# Applied to v(t) = t the discrete operator approximates t^alpha / Gamma(1+alpha).
alpha = 0.5
for N in (16, 64, 256):
    tau = 1.0 / N
    v = tau * np.arange(N + 1)
    d = discrete_frac_derivative(v, cq_weights(alpha, N), tau)
    print(f"N={N:4d}  value at t=1: {d[-1]:.6f}  exact {1 / math.gamma(1 + alpha):.6f}")

# Each sine mode decays like E_alpha(-lam t^alpha). The contour integral of the
# resolvent gives the same numbers without ever calling the Mittag-Leffler series.
lam = math.pi**2
print("\n   t    alpha   Mittag-Leffler        contour          |diff|")
for alpha in (0.3, 1.0, 1.7):
    for t in (0.01, 0.1, 1.0):
        a, b = float(kernel_ml(alpha, lam, t)), kernel_contour(alpha, lam, t)
        print(f"{t:5.2f}  {alpha:4.1f}  {a:+.15f}  {b:+.15f}  {abs(a - b):.1e}")

# For alpha > 1 the kernel overshoots and oscillates: a damped wave, not a diffusion.
t = np.linspace(0.05, 1.0, 8)
print("\nalpha=1.7, lam=(4 pi)^2:", np.round(kernel_ml(1.7, (4 * math.pi) ** 2, t), 4))
