"""The Gamma smoothing kernel

    omega(t, T1, T2) = e^lam / (2 pi) int_T1^T2 Gamma(lam + (u-t) i) lam^(-(lam + (u-t) i)) du,

a smoothed indicator of [T1, T2] with Gaussian edges of width sqrt(lam).
The integrand is only ever formed as exp(log-magnitude + i phase).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import quadrature
from .errors import DomainError, VerificationError
from .specialfn import stirling_magnitude_exponent_array, stirling_phase_array

log = logging.getLogger(__name__)

CLIP_SIGMAS = 12.0   # |u - t| beyond 12 sqrt(lam): magnitude below e^-72
NOISE_FLOOR = 1e-12
LAMBDA_MAX = 1e8


@dataclass(frozen=True)
class KernelParams:
    lam: float
    t1: float
    t2: float
    alpha: float = 2.0

    def __post_init__(self):
        if not 10.0 <= self.lam <= LAMBDA_MAX:
            raise DomainError(f"lambda must lie in [10, {LAMBDA_MAX:g}], got {self.lam}")
        if not self.t1 < self.t2:
            raise DomainError("kernel window needs t1 < t2")
        if self.alpha < 1.0:
            raise DomainError("alpha must be >= 1")
        if self.t2 <= 1.0:
            raise DomainError("T = t2 must exceed 1 so that log T > 0")

    @property
    def T(self) -> float:
        return self.t2

    @property
    def delta_margin(self) -> float:
        return math.sqrt(2.0 * self.alpha * self.lam * math.log(self.T))

    @property
    def implied_epsilon(self) -> float:
        """epsilon with lam = T^(2 - epsilon)."""
        return 2.0 - math.log(self.lam) / math.log(self.T)

    @property
    def bound(self) -> float:
        return max(self.T ** (-self.alpha), NOISE_FLOOR)

    @property
    def below_floor(self) -> bool:
        return self.T ** (-self.alpha) < NOISE_FLOOR


def kernel_density(x, lam: float) -> np.ndarray:
    """(1/2pi) e^lam Gamma(lam + i x) lam^(-lam - i x) at offsets x = u - t."""
    x = np.asarray(x, dtype=float)
    mag = stirling_magnitude_exponent_array(lam, x)
    ph = stirling_phase_array(lam, x)
    return np.exp(mag + 1j * ph) / (2.0 * math.pi)


def omega_array(t, p: KernelParams, order: int = 20, with_error: bool = False):
    """omega(t) for an array of t.

    The u-range is clipped to |u - t| <= 12 sqrt(lam) and covered by equal
    Gauss-Legendre panels no wider than sqrt(lam)/2.  With ``with_error``
    also returns the difference against half the panel count.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    sig = math.sqrt(p.lam)
    a = np.maximum(p.t1, t - CLIP_SIGMAS * sig)
    b = np.minimum(p.t2, t + CLIP_SIGMAS * sig)
    width = np.maximum(b - a, 0.0)
    n_panels = max(2, int(math.ceil(width.max(initial=0.0) / (0.5 * sig))))

    def rule(n):
        x, w = quadrature.gauss_legendre(order)
        frac = (np.arange(n)[:, None] + 0.5 * (x[None, :] + 1.0)).ravel() / n
        wts = np.tile(w, n) * 0.5 / n
        u = a[:, None] + width[:, None] * frac[None, :]
        vals = kernel_density(u - t[:, None], p.lam)
        quadrature.count_nodes(vals.size)
        return (vals * wts[None, :]).sum(axis=1) * width

    value = rule(n_panels)
    if not with_error:
        return value
    coarse = rule(max(1, n_panels // 2))
    return value, np.abs(value - coarse)


def omega(t: float, p: KernelParams) -> complex:
    return complex(omega_array(np.array([t]), p)[0])


def _phi(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def omega_gaussian(t: float, p: KernelParams) -> float:
    """Phi((t2 - t)/sqrt(lam)) - Phi((t1 - t)/sqrt(lam))."""
    sig = math.sqrt(p.lam)
    hi = (p.t2 - t) / sig
    lo = (p.t1 - t) / sig
    if lo > 0:
        # both in the upper tail: Q(lo) - Q(hi) avoids cancellation
        return 0.5 * math.erfc(lo / math.sqrt(2.0)) - 0.5 * math.erfc(hi / math.sqrt(2.0))
    return _phi(hi) - _phi(lo)


@dataclass
class WindowRow:
    t: float
    region: str          # "interior" | "exterior" | "edge"
    omega: complex
    deviation: float     # |omega - 1| inside, |omega| outside and on edges
    bound: float | None
    passed: bool | None


def classify(t: float, p: KernelParams) -> str:
    d = p.delta_margin
    if p.t1 + d <= t <= p.t2 - d:
        return "interior"
    if t <= p.t1 - d or t >= p.t2 + d:
        return "exterior"
    return "edge"


def kernel_window_report(p: KernelParams, grid, strict: bool = True) -> list[WindowRow]:
    """Check |omega - 1| <= bound inside [T1 + D, T2 - D] and |omega| <= bound
    outside [T1 - D, T2 + D], bound = max(T^-alpha, 1e-12)."""
    grid = [float(t) for t in grid]
    if p.below_floor:
        log.warning("T^-alpha = %.3g is below the quadrature noise floor; asserting against %.0e",
                    p.T ** (-p.alpha), NOISE_FLOOR)
    values = omega_array(np.array(grid), p) if grid else np.zeros(0, complex)
    rows = []
    for t, w in zip(grid, values):
        region = classify(t, p)
        dev = float(abs(w - 1.0) if region == "interior" else abs(w))
        if region == "edge":
            rows.append(WindowRow(t, region, complex(w), dev, None, None))
        else:
            rows.append(WindowRow(t, region, complex(w), dev, p.bound, bool(dev <= p.bound)))
    bad = [r.t for r in rows if r.passed is False]
    if strict and bad:
        raise VerificationError(f"kernel window bound violated at t = {bad}", bad)
    return rows


def omega_argument(t: float, u: float, lam: float) -> float:
    """Phase of e^lam Gamma(lam + (u-t) i) lam^(-(lam + (u-t) i))."""
    if abs(t - u) > CLIP_SIGMAS * math.sqrt(lam):
        raise DomainError("omega_argument needs |t - u| <= 12 sqrt(lambda)")
    return float(stirling_phase_array(lam, np.array([u - t]))[0])


def omega_argument_approx(t: float, u: float, lam: float) -> float:
    """Two-term approximation (t-u)/(2 lam) - (t-u)^3/(6 lam^2)."""
    d = t - u
    return d / (2 * lam) - d ** 3 / (6 * lam ** 2)


def gaussian_exponent(lam: float, x: float, extra_quartic: bool = False) -> float:
    """Leading terms of the kernel log-magnitude, -x^2/(2 lam) - log(lam)/2 + log(2 pi)/2.

    ``extra_quartic`` adds the -x^2/(4 lam^2) term displayed alongside it in
    the source derivation; it is kept as a diagnostic only.
    """
    val = -x * x / (2 * lam) - 0.5 * math.log(lam) + 0.5 * math.log(2 * math.pi)
    if extra_quartic:
        val -= x * x / (4 * lam * lam)
    return val
