"""Per-mode kernel of the mild solution, evaluated two independent ways.

For the eigenmode with eigenvalue ``lam`` the solution operator acts as
multiplication by ``F(t) = (1/2 pi i) int_Gamma e^{zt} z^(alpha-1) / (z^alpha + lam) dz``.
:func:`kernel_contour` integrates that contour numerically, while
:func:`mittag_leffler` evaluates the closed form ``F(t) = E_alpha(-lam t^alpha)``.
The two share no code, so each checks the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import integrate
from scipy.special import gammaln, rgamma

from .cq import cq_weights
from .spectrum import EigenBasis

THETA_MAX = math.pi - math.atan(math.pi / 2.0)  # arccot(-2/pi)
_SERIES_DOUBLE_MAX_LOG = math.log(1e3)


# Mittag-Leffler E_{alpha,1} on the negative real axis


def ml_crossover(alpha: float) -> float:
    """|z| above which the asymptotic expansion replaces the power series.

    Calibrated so that the truncated asymptotic remainder, roughly
    ``exp(-|z|**(1/alpha))``, is below 1e-15 at the switch.
    """
    return 36.0**alpha


def _series_peak_log(alpha: float, x: float) -> tuple[float, int]:
    # log of the largest series term and the index where terms drop below 1e-40
    # terms decay once alpha k > e x^(1/alpha)
    k = np.arange(0, int(3.0 * math.e * x ** (1.0 / alpha) / alpha) + 200)
    logt = k * math.log(x) - gammaln(alpha * k + 1.0)
    tail = np.nonzero(logt > math.log(1e-40))[0]
    return float(logt.max()), int(k[tail[-1]]) + 2


def _ml_series(alpha: float, x: float) -> float:
    peak, kend = _series_peak_log(alpha, x)
    if peak <= _SERIES_DOUBLE_MAX_LOG:
        k = np.arange(kend + 1)
        terms = np.exp(k * math.log(x) - gammaln(alpha * k + 1.0))
        terms[1::2] *= -1.0
        return float(math.fsum(terms))
    digits = int(peak / math.log(10.0)) + 25
    with mpmath.workdps(digits):
        a = mpmath.mpf(alpha)
        z = -mpmath.mpf(x)
        s = mpmath.fsum(z**k * mpmath.rgamma(a * k + 1) for k in range(kend + 1))
        return float(s)


def _ml_asymptotic(alpha: float, x: float) -> float:
    s = 0.0
    logx = math.log(x)
    prev = math.inf
    for k in range(1, 4000):
        # |1/Gamma(1 - alpha k)| <= Gamma(alpha k) / pi, stop at the envelope minimum
        env = gammaln(alpha * k) - k * logx
        if env > prev:
            break
        prev = env
        s -= (-x) ** (-k) * rgamma(1.0 - alpha * k)
        if math.exp(env) < 1e-17 * abs(s):
            break
    if alpha > 1.0:
        r = x ** (1.0 / alpha)
        s += (
            2.0 / alpha
            * math.exp(r * math.cos(math.pi / alpha))
            * math.cos(r * math.sin(math.pi / alpha))
        )
    return s


def _ml_scalar(alpha: float, z: float) -> float:
    if z > 0:
        raise ValueError(f"argument must be <= 0, got {z}")
    if z == 0:
        return 1.0
    if alpha == 1.0:
        return math.exp(z)
    x = -z
    if x <= ml_crossover(alpha):
        return _ml_series(alpha, x)
    return _ml_asymptotic(alpha, x)


def mittag_leffler(alpha: float, z):
    """Two-parameter-free Mittag-Leffler function ``E_alpha(z)`` for real ``z <= 0``.

    Power series below :func:`ml_crossover`, asymptotic expansion above it.
    Accepts scalars or arrays.
    """
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    zz = np.asarray(z, dtype=float)
    if np.any(zz > 0):
        raise ValueError("mittag_leffler is only implemented for z <= 0")
    if zz.ndim == 0:
        return _ml_scalar(alpha, float(zz))
    return np.array([_ml_scalar(alpha, float(v)) for v in zz.ravel()]).reshape(zz.shape)


def kernel_ml(alpha: float, lam: float, t):
    """Mode kernel ``E_alpha(-lam t^alpha)``."""
    t = np.asarray(t, dtype=float)
    return mittag_leffler(alpha, -lam * t**alpha)


# contour integral


def default_theta(alpha: float) -> float:
    """0.6 pi, pulled below pi/alpha when the poles at arg = pi/alpha would be crossed."""
    theta = 0.6 * math.pi
    if alpha > 1.0 and theta >= math.pi / alpha:
        theta = 0.5 * (math.pi / 2.0 + math.pi / alpha)
    return theta


@dataclass(frozen=True)
class ContourConfig:
    theta: float = 0.6 * math.pi
    kappa: float = 1.0
    arc_nodes: int = 64
    panel_nodes: int = 16
    panel_ratio: float = 1.5
    threshold: float = 1e-16

    def __post_init__(self):
        if not math.pi / 2 < self.theta < THETA_MAX:
            raise ValueError(
                f"theta must lie in (pi/2, arccot(-2/pi)) = (1.5708, {THETA_MAX:.4f}), "
                f"got {self.theta}"
            )
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.arc_nodes < 64:
            raise ValueError("need at least 64 arc nodes")

    @classmethod
    def for_alpha(cls, alpha: float, T: float = 1.0, **kw) -> "ContourConfig":
        return cls(theta=default_theta(alpha), kappa=1.0 / T, **kw)


class ContourAccuracyError(RuntimeError):
    pass


def _ray_nodes(cfg: ContourConfig, t: float) -> tuple[np.ndarray, np.ndarray]:
    cos_t, sin_t = math.cos(cfg.theta), math.sin(cfg.theta)
    r_max = math.log(cfg.threshold) / (t * cos_t)
    if r_max <= cfg.kappa:
        r_max = 2.0 * cfg.kappa
    # geometric breakpoints, refined so no panel spans more than half an oscillation
    n_geo = max(1, math.ceil(math.log(r_max / cfg.kappa) / math.log(cfg.panel_ratio)))
    edges = cfg.kappa * (r_max / cfg.kappa) ** (np.arange(n_geo + 1) / n_geo)
    max_len = math.pi / (t * sin_t)
    pieces = [edges[:1]]
    for a, b in zip(edges[:-1], edges[1:]):
        m = max(1, math.ceil((b - a) / max_len))
        pieces.append(np.linspace(a, b, m + 1)[1:])
    edges = np.concatenate(pieces)
    xg, wg = np.polynomial.legendre.leggauss(cfg.panel_nodes)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    rho = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    w = (half[:, None] * wg[None, :]).ravel()
    return rho, w


def kernel_contour(alpha: float, lam: float, t: float, cfg: ContourConfig | None = None) -> float:
    """Evaluate the mode kernel by quadrature on the contour ``Gamma_{theta,kappa}``.

    Gauss-Legendre in angle on the arc ``|z| = kappa``; composite Gauss-Legendre
    on geometrically graded panels along the rays ``z = rho e^{+-i theta}``,
    truncated where ``|e^{zt}|`` falls below ``cfg.threshold``.
    """
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    if cfg is None:
        cfg = ContourConfig.for_alpha(alpha)
    if alpha * cfg.theta >= math.pi and lam ** (1.0 / alpha) >= cfg.kappa:
        raise ValueError(
            f"theta={cfg.theta:.4f} crosses the resolvent poles at arg z = pi/alpha"
        )

    def f(z):
        return np.exp(z * t) * z ** (alpha - 1.0) / (z**alpha + lam)

    xg, wg = np.polynomial.legendre.leggauss(cfg.arc_nodes)
    phi = cfg.theta * xg
    z_arc = cfg.kappa * np.exp(1j * phi)
    arc = np.sum(wg * cfg.theta * f(z_arc) * 1j * z_arc)

    rho, w = _ray_nodes(cfg, t)
    e_up = np.exp(1j * cfg.theta)
    e_dn = np.exp(-1j * cfg.theta)
    up = np.sum(w * f(rho * e_up)) * e_up
    down = np.sum(w * f(rho * e_dn)) * e_dn
    val = (arc + up - down) / (2j * math.pi)
    if abs(val.imag) > 1e-10:
        raise ContourAccuracyError(
            f"imaginary residual {val.imag:.3e} for alpha={alpha}, lam={lam}, t={t}"
        )
    return float(val.real)


# variance oracles


def mode_variance(alpha: float, lam: float, t: float) -> float:
    """Ito-isometry variance ``int_0^t E_alpha(-lam s^alpha)^2 ds`` of one noise mode."""
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    if t == 0:
        return 0.0
    opts = dict(epsabs=0.0, epsrel=1e-10, limit=200)
    # |z| = 1 at s_c; below it the kernel is O(1) and smooth, above it decays algebraically
    s_c = min(t, lam ** (-1.0 / alpha))
    head, _ = integrate.quad(lambda s: _ml_scalar(alpha, -lam * s**alpha) ** 2, 0.0, s_c, **opts)
    if s_c >= t:
        return head
    tail, _ = integrate.quad(
        lambda u: _ml_scalar(alpha, -lam * math.exp(alpha * u)) ** 2 * math.exp(u),
        math.log(s_c),
        math.log(t),
        **opts,
    )
    return head + tail


def wellposedness_tail(alpha: float, T: float, basis: EigenBasis, ell: int) -> float:
    """Truncated tail ``sum_{j=ell}^{M} mode_variance(alpha, lam_j, T)``."""
    if ell < 1:
        raise ValueError(f"tail start must be >= 1, got {ell}")
    return math.fsum(mode_variance(alpha, lam, T) for lam in basis.eigenvalues[ell - 1 :])


def one_step_variance(alpha: float, tau: float, eigenvalues) -> float:
    """``E ||u_1||^2 = sum_j tau (1 + tau^alpha b_0 lam_j)^-2`` for one step from rest."""
    b0 = cq_weights(alpha, 0).weights[0]
    lam = np.asarray(eigenvalues, dtype=float)
    return float(np.sum(tau / (1.0 + tau**alpha * b0 * lam) ** 2))


# kernel-sum bound


def sum_bound_check(r: float, alpha: float, d: int, eigenvalues) -> float:
    """``sum_j (r^alpha / (r^alpha + lam_j))^2 / r^(alpha d / 2)`` over the given eigenvalues."""
    lam = np.asarray(eigenvalues, dtype=float)
    ra = r**alpha
    # ratio form avoids overflow of r**(2 alpha) for large r
    terms = (1.0 / (1.0 + lam / ra)) ** 2
    return float(np.sum(terms)) / r ** (alpha * d / 2.0)


def sum_tail_bound(r: float, alpha: float, d: int, c: float, M: int) -> float:
    """Upper bound for the terms j > M of :func:`sum_bound_check` when ``lam_j >= c j^(2/d)``.

    Uses ``(r^a/(r^a + lam))^2 <= r^(2a) / (c^2 j^(4/d))`` and an integral tail.
    Returned already divided by ``r^(alpha d / 2)``.
    """
    p = 4.0 / d
    return r ** (2.0 * alpha - alpha * d / 2.0) / c**2 * M ** (1.0 - p) / (p - 1.0)
