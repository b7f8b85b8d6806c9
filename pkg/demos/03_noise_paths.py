"""Reproducible Brownian increments from a counter-based generator.

Run: python demos/03_noise_paths.py
"""
import numpy as np

from fracspde import coarsen, generate_paths
from fracspde.noise import standard_normals

# A draw is a pure function of (seed, realization, mode, step): no stream state.
print("z(seed=42, r=0, mode=1, steps 1..4):", standard_normals(42, 0, 1, np.arange(1, 5)))
print("same entries, asked for in reverse: ", standard_normals(42, 0, 1, np.arange(4, 0, -1))[::-1])

# One realization: 8 modes, 1024 fine steps on [0, 1].
p = generate_paths(seed=42, realization=0, M=8, N_fine=1024, tau_fine=2.0**-10)
print("\nincrement table", p.increments.shape, " sample variance / tau:",
      round(float(p.increments.var() / p.tau), 3))

# Coarse paths are sums of fine ones, so every level sees the same Brownian motion.
for f in (2, 16, 256):
    c = coarsen(p, f)
    print(f"factor {f:3d}: {c.N:4d} steps, W_1(1) = {c.total()[0]:+.15f}")

# Pairwise summation makes repeated halving identical to one big coarsening, bit for bit.
print("coarsen twice by 2 == coarsen once by 4:",
      np.array_equal(coarsen(coarsen(p, 2), 2).increments, coarsen(p, 4).increments))

# Thread count does not matter either.
q = generate_paths(42, 0, 8, 1024, 2.0**-10, workers=4)
print("1 worker vs 4 workers identical:", np.array_equal(p.increments, q.increments))
