"""First-order convergence of the noise-free scheme against a manufactured solution.

The source is chosen so that u(x, t) = t^2 x^2 (1 - x)^2 exactly.

Run: python demos/02_deterministic_convergence.py
"""
import numpy as np

from fracspde import PolynomialSource, SchemeConfig, run_deterministic_convergence, solve_fem

for alpha in (0.5, 1.0, 1.3):
    rep = run_deterministic_convergence(alpha, levels=range(3, 9), M=64)
    print(f"alpha = {alpha}  (spectral Galerkin, 64 modes)")
    print(rep.table(), "\n")

# The same stepper on P1 elements. The error now also carries an O(h^2) spatial part,
# so the mesh is taken fine enough for the time error to dominate.
alpha = 0.5
src = PolynomialSource(alpha)
print("P1 elements, M = 256 cells, max nodal error at t = 1")
prev = None
for N in (8, 16, 32, 64):
    x, u = solve_fem(SchemeConfig(alpha, 1.0, N, "fem", 256, 0.0, src)).field(N)
    err = np.max(np.abs(u - src.exact(x, 1.0)))
    note = "" if prev is None else f"  order {np.log2(prev / err):.3f}"
    print(f"  tau = 1/{N:<3d} error {err:.3e}{note}")
    prev = err
