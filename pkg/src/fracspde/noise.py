"""Counter-based Brownian increments for truncated cylindrical Wiener noise.

Every Gaussian draw is a pure function of ``(seed, realization, mode, step)``:
the tuple is encrypted with Philox4x32-10 and the four output words are turned
into one standard normal by Box-Muller (cosine branch). Nothing depends on
evaluation order, so paths can be generated in any partition and any entry
can be regenerated on its own.

Counter layout: ``(step, mode, realization & 0xffffffff, realization >> 32)``.
Key layout: ``(seed & 0xffffffff, seed >> 32)``. Modes and steps are 1-based.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

_MASK32 = np.uint64(0xFFFFFFFF)
_PHILOX_M0 = np.uint64(0xD2511F53)
_PHILOX_M1 = np.uint64(0xCD9E8D57)
_PHILOX_W0 = 0x9E3779B9
_PHILOX_W1 = 0xBB67AE85
_ROUNDS = 10


def philox4x32(counter, key) -> tuple[np.ndarray, ...]:
    """Philox4x32-10 block function.

    ``counter`` is a 4-tuple of integer arrays (broadcastable), ``key`` a pair of
    32-bit integers. Returns the four 32-bit output words as uint64 arrays.
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) & _MASK32 for c in counter)
    k0, k1 = int(key[0]) & 0xFFFFFFFF, int(key[1]) & 0xFFFFFFFF
    for _ in range(_ROUNDS):
        p0 = _PHILOX_M0 * c0
        p1 = _PHILOX_M1 * c2
        hi0, lo0 = p0 >> np.uint64(32), p0 & _MASK32
        hi1, lo1 = p1 >> np.uint64(32), p1 & _MASK32
        c0, c1, c2, c3 = (
            hi1 ^ c1 ^ np.uint64(k0),
            lo1,
            hi0 ^ c3 ^ np.uint64(k1),
            lo0,
        )
        k0 = (k0 + _PHILOX_W0) & 0xFFFFFFFF
        k1 = (k1 + _PHILOX_W1) & 0xFFFFFFFF
    return c0, c1, c2, c3


def _split_seed(seed: int) -> tuple[int, int]:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed & 0xFFFFFFFF, seed >> 32


def _uniform53(hi: np.ndarray, lo: np.ndarray) -> np.ndarray:
    # 27 + 26 bits, offset by half an ulp so the result lies in (0, 1)
    k = (hi >> np.uint64(5)) * np.uint64(1 << 26) + (lo >> np.uint64(6))
    return (k.astype(np.float64) + 0.5) * 2.0**-53


def standard_normals(seed: int, realization, mode, step) -> np.ndarray:
    """Standard normal draws keyed by ``(seed, realization, mode, step)`` (broadcast)."""
    realization = np.asarray(realization, dtype=np.uint64)
    w0, w1, w2, w3 = philox4x32(
        (step, mode, realization & _MASK32, realization >> np.uint64(32)),
        _split_seed(seed),
    )
    u1 = _uniform53(w0, w1)
    u2 = _uniform53(w2, w3)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


@dataclass(frozen=True)
class NoisePaths:
    """Per-mode Brownian increments; ``increments[j-1, n-1] = W_j(t_n) - W_j(t_{n-1})``."""

    seed: int
    realization: int
    M: int
    N: int
    tau: float
    increments: np.ndarray

    def total(self) -> np.ndarray:
        """``W_j(T) - W_j(0)`` per mode, summed in the same tree order as :func:`coarsen`."""
        return _tree_sum(self.increments, self.N)[:, 0]


def _validate(M: int, N: int, tau: float) -> None:
    if M < 1:
        raise ValueError(f"need at least one mode, got M={M}")
    if N < 1:
        raise ValueError(f"need at least one step, got N={N}")
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")


def _increment_block(seed, realization, modes, N, tau) -> np.ndarray:
    steps = np.arange(1, N + 1, dtype=np.uint64)
    z = standard_normals(seed, realization, modes[:, None], steps[None, :])
    return math.sqrt(tau) * z


def generate_paths(
    seed: int,
    realization: int,
    M: int,
    N_fine: int,
    tau_fine: float,
    workers: int = 1,
) -> NoisePaths:
    """Draw the ``M x N_fine`` increment table for one realization.

    ``workers > 1`` splits the modes over a thread pool; the result is
    bitwise identical for any worker count.
    """
    _validate(M, N_fine, tau_fine)
    modes = np.arange(1, M + 1, dtype=np.uint64)
    if workers <= 1:
        inc = _increment_block(seed, realization, modes, N_fine, tau_fine)
    else:
        parts = np.array_split(modes, min(workers, M))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = pool.map(
                lambda m: _increment_block(seed, realization, m, N_fine, tau_fine), parts
            )
            inc = np.concatenate(list(blocks), axis=0)
    inc.setflags(write=False)
    return NoisePaths(int(seed), int(realization), int(M), int(N_fine), float(tau_fine), inc)


def generate_batch(seed: int, realizations, M: int, N_fine: int, tau_fine: float) -> np.ndarray:
    """Increments for several realizations at once, shape ``(len(realizations), M, N_fine)``."""
    _validate(M, N_fine, tau_fine)
    r = np.asarray(realizations, dtype=np.uint64)[:, None, None]
    modes = np.arange(1, M + 1, dtype=np.uint64)[None, :, None]
    steps = np.arange(1, N_fine + 1, dtype=np.uint64)[None, None, :]
    return math.sqrt(tau_fine) * standard_normals(seed, r, modes, steps)


def _tree_sum(inc: np.ndarray, factor: int) -> np.ndarray:
    out = inc
    while factor > 1:
        out = out[..., 0::2] + out[..., 1::2]
        factor //= 2
    return out


def coarsen_increments(increments: np.ndarray, factor: int) -> np.ndarray:
    """Sum groups of ``factor`` consecutive increments along the last axis.

    The groups are reduced as a balanced binary tree (adjacent pairs first), so
    coarsening by 2 twice gives the same bits as coarsening by 4 once.
    """
    factor = int(factor)
    n = increments.shape[-1]
    if factor < 1 or factor & (factor - 1):
        raise ValueError(f"coarsening factor must be a power of two, got {factor}")
    if n % factor:
        raise ValueError(f"factor {factor} does not divide the step count {n}")
    return _tree_sum(np.asarray(increments), factor)


def coarsen(paths: NoisePaths, factor: int) -> NoisePaths:
    inc = coarsen_increments(paths.increments, factor)
    if inc is paths.increments:
        return paths
    inc.setflags(write=False)
    return NoisePaths(
        paths.seed, paths.realization, paths.M, paths.N // factor, paths.tau * factor, inc
    )


def write_paths_csv(paths: NoisePaths, fh) -> None:
    """Debug dump with header ``mode,step,increment``."""
    fh.write("mode,step,increment\n")
    for j in range(paths.M):
        for n in range(paths.N):
            fh.write(f"{j + 1},{n + 1},{float(paths.increments[j, n])!r}\n")
