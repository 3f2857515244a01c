"""Mellin and contour-integral identities around s1 = lam + 1/2 + i u.

Magnitudes such as Gamma(s1) lam^(-s1) or e^(-lam) are far outside double
range for the lam used here, so contour quantities are returned as
``Scaled`` pairs (log scale, mantissa) with value mantissa * e^scale.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import quadrature
from .errors import DomainError, FitError, GeometryError, TruncationError
from .specialfn import (EULER_GAMMA, LOG_2PI, _log_cos, chi_factor_array, log_gamma,
                        log_gamma_array, zeta)


class Scaled(NamedTuple):
    log_scale: float
    mantissa: complex

    @property
    def value(self) -> complex:
        with np.errstate(over="ignore"):
            return complex(self.mantissa * np.exp(self.log_scale))

    def rescale(self, log_scale: float) -> complex:
        """Mantissa relative to another scale."""
        return self.mantissa * math.exp(self.log_scale - log_scale)

    def rel_diff(self, other: "Scaled") -> float:
        ref = other.mantissa
        mine = self.rescale(other.log_scale)
        return abs(mine - ref) / abs(ref)


@dataclass(frozen=True)
class ContourParams:
    lam: float
    u: float
    c: float = 1.5
    delta_ray: float = math.pi / 6
    beta: float = 10.0
    T: float | None = None

    def __post_init__(self):
        if self.lam < 10:
            raise DomainError("lambda must be >= 10")
        if not 1.0 < self.c < 2.0:
            raise DomainError("c = 1 + eta must lie in (1, 2)")
        if not 0.0 < self.delta_ray <= math.pi / 2:
            raise DomainError("ray angle must lie in (0, pi/2]")
        if self.beta < 1:
            raise DomainError("beta must be >= 1")

    @property
    def s1(self) -> complex:
        return complex(self.lam + 0.5, self.u)

    @property
    def eta(self) -> float:
        return self.c - 1.0

    @property
    def theta(self) -> float:
        if self.T is None:
            raise DomainError("theta needs the scale T")
        return math.sqrt(2.0 * self.beta * math.log(self.T) / self.lam)


# ---------------------------------------------------------------- J(y)

def _j_reference_scale(p: ContourParams) -> float:
    return (log_gamma(p.s1) - p.s1 * math.log(p.lam)).real


def j_closed(y: float, p: ContourParams) -> Scaled:
    """J(y) = Gamma(s1) [(lam - 2 pi i y)^(-s1) + (lam + 2 pi i y)^(-s1)]."""
    s1 = p.s1
    base = log_gamma(s1) - s1 * math.log(p.lam)
    eps = 2 * math.pi * y / p.lam
    terms = [-s1 * cmath.log(1 - 1j * eps), -s1 * cmath.log(1 + 1j * eps)]
    top = max(t.real for t in terms)
    mant = sum(cmath.exp(t - top) for t in terms) * cmath.exp(1j * base.imag)
    return Scaled(base.real + top, mant)


def _j_log_integrand(t, y: float, p: ContourParams) -> np.ndarray:
    s = p.c + 1j * np.asarray(t, dtype=float)
    w = p.s1 - s
    log_chi = math.log(2.0) - s * LOG_2PI + log_gamma_array(s) + _log_cos(0.5 * math.pi * s)
    return log_gamma_array(w) - w * math.log(p.lam) + log_chi - s * math.log(y)


@dataclass
class ContourIntegral:
    value: Scaled
    quad_error: float        # absolute, in units of e^value.log_scale
    tail_estimate: float     # same units
    nodes: int = 0


def j_contour(y: float, p: ContourParams, t_cut: float = 200.0, rtol: float = 1e-12,
              tail_tol: float = 1e-9) -> ContourIntegral:
    """(1/2 pi i) int_(c) Gamma(s1 - s) lam^-(s1 - s) chi(1 - s) y^-s ds on
    |Im s| <= t_cut.  Raises TruncationError when the Gaussian tail beyond
    t_cut is estimated above ``tail_tol`` relative to the result."""
    if y <= 0:
        raise DomainError("j_contour needs y > 0")
    # integrand peaks near t = u with Gaussian width sqrt(lam)
    probe = np.linspace(-t_cut, t_cut, 4001)
    logs = _j_log_integrand(probe, y, p).real
    scale = float(logs.max())

    def f(t):
        return np.exp(_j_log_integrand(t, y, p) - scale) / (2 * math.pi)

    before = quadrature.node_count()
    # phases of size ~t log t carry ~1e-13 relative rounding per value
    val, err = quadrature.adaptive(f, -t_cut, t_cut, rtol=rtol, order=20,
                                   initial_panels=max(16, int(t_cut)), noise=1e-12)
    nodes = quadrature.node_count() - before
    sig = math.sqrt(p.lam)
    ends = np.array([-t_cut, t_cut])
    mags = np.abs(f(ends))
    tail = float(np.sum(mags * p.lam / np.maximum(np.abs(ends - p.u), sig)))
    if tail > tail_tol * abs(val):
        raise TruncationError(
            f"estimated tail {tail:.3g} beyond |Im s| = {t_cut} exceeds "
            f"{tail_tol:g} of |J| = {abs(val):.3g}; increase t_cut"
        )
    return ContourIntegral(Scaled(scale, complex(val)), err, tail, nodes)


# ---------------------------------------------------------------- Gamma integral

def _support(logf, center: float, level: float, step: float, limit: float) -> float:
    """Walk from center by ``step`` until logf drops below level."""
    x = center
    while logf(x) > level:
        x += step
        if abs(x - center) > limit:
            break
    return x


def gamma_integral(p: ContourParams, rtol: float = 1e-13) -> float:
    """Relative residual between int_0^inf v^(s1-1) e^(-lam v) dv (numeric,
    substituted v = e^x) and lam^(-s1) Gamma(s1)."""
    lam, s1 = p.lam, p.s1

    def logmag(x):
        return (lam + 0.5) * x - lam * math.expm1(x)

    lo = _support(logmag, 0.0, -60.0, -0.05, 1e3)
    hi = _support(logmag, 0.0, -60.0, 0.05, 1e3)

    def f(x):
        return np.exp(s1 * x - lam * np.expm1(x))

    val, _ = quadrature.adaptive(f, lo, hi, rtol=rtol, order=20, initial_panels=64)
    closed = log_gamma(s1) - s1 * math.log(lam) + lam   # relative to e^-lam
    return abs(val - cmath.exp(closed)) / abs(cmath.exp(closed))


# ---------------------------------------------------------------- ray integrals

RESIDUE_TOL = 1e-8
MIN_RAY_ANGLE = 1e-6
_DOUBLE_SAFE_LOG = 16.0   # cancellation e^16 still leaves ~9 digits
MAX_CANCELLATION_LOG = 60.0


@dataclass
class RayPair:
    value: Scaled            # scale is -lam
    normalized: complex      # value / (2 pi i e^-lam)
    cancellation: float      # log of max |integrand| relative to e^-lam
    precision: str           # "double" or "mp<dps>"
    radial_cut: float
    # log(|printed prefactor| / |computed|): the printed e^lam against the
    # residue e^-lam is off by e^(2 lam)
    erratum_log_ratio: float = 0.0


def radial_cut(lam: float, delta: float) -> float:
    """Smallest R with lam R cos(delta) - (lam + 1/2) log R >= 40 + lam."""
    cd = math.cos(delta)
    if cd <= 1e-12:
        raise GeometryError("ray at angle pi/2 does not decay")
    R = max(1.0, (lam + 0.5) / (lam * cd))
    while lam * R * cd - (lam + 0.5) * math.log(R) < 40.0 + lam:
        R *= 1.1
    return R


def _ray_log_integrand(r, sgn: int, p: ContourParams, log_kind: str | None):
    """log of e^lam v^(s1-1) e^(-lam v) / (v - 1) * dv/dr [* log factor]
    on v = r e^(i sgn delta), as numpy complex."""
    d = sgn * p.delta_ray
    r = np.asarray(r, dtype=float)
    rot = cmath.exp(1j * d)
    v = r * rot
    logv = np.log(r) + 1j * d
    base = (p.s1 - 1.0) * logv - p.lam * (v - 1.0) - np.log(v - 1.0) + 1j * d
    return base, v


def _ray_integrand_np(r, sgn, p, log_kind):
    base, v = _ray_log_integrand(r, sgn, p, log_kind)
    val = np.exp(base)
    if log_kind == "upper":
        val = val * np.log(-1j * (v - 1.0))
    elif log_kind == "lower":
        val = val * np.log(1j * (v - 1.0))
    return val


def _ray_integrand_mp(mp, r, sgn, p, log_kind):
    d = sgn * mp.mpf(p.delta_ray)
    rot = mp.expj(d)
    v = r * rot
    s1 = mp.mpc(p.lam + 0.5, p.u)
    val = mp.exp((s1 - 1) * (mp.log(r) + 1j * d) - p.lam * (v - 1) + 1j * d) / (v - 1)
    if log_kind == "upper":
        val *= mp.log(-1j * (v - 1))
    elif log_kind == "lower":
        val *= mp.log(1j * (v - 1))
    return val


def _ray_breakpoints(p: ContourParams, r_hi: float) -> np.ndarray:
    """Panel edges: dense near r = 1 (pole proximity ~ sin delta) and at
    the oscillation scale elsewhere."""
    d = p.delta_ray
    sig = 1.0 / math.sqrt(p.lam)
    freq = abs(p.u) + p.lam * math.sin(d) + 1.0
    step = min(sig, 1.0 / freq * 4.0, 0.25)
    pts = list(np.arange(0.0, r_hi, step)) + [r_hi]
    near = max(math.sin(d), 1e-9)
    for k in range(-12, 13):
        pts.append(1.0 + np.sign(k) * near * (2.0 ** (abs(k) / 2.0) - 1.0))
    pts = np.unique(np.clip(np.array(pts), 0.0, r_hi))
    return pts


def _ray_support(p: ContourParams, sgn: int, level: float) -> tuple[float, float]:
    lam, d = p.lam, p.delta_ray

    def logmag(r):
        return ((lam - 0.5) * math.log(r) + sgn * (-p.u * d) - lam * (r * math.cos(d) - 1.0))

    peak = (lam - 0.5) / (lam * math.cos(d))
    top = logmag(peak)
    lo = peak
    while lo > 1e-12 and logmag(lo) > top + level:
        lo *= 0.97
    hi = peak
    while logmag(hi) > top + level:
        hi *= 1.03
    return lo, hi, top


def _cancellation(p: ContourParams) -> float:
    tops = []
    for sgn in (1, -1):
        _, _, top = _ray_support(p, sgn, -1.0)
        tops.append(top)
    return max(tops)


def _ray_pair_integral(p: ContourParams, with_log: bool, force_mp: bool = False):
    d = p.delta_ray
    if d < MIN_RAY_ANGLE:
        raise GeometryError(f"ray angle {d:g} passes too close to the pole at v = 1")
    if d >= math.pi / 2 - 1e-9:
        raise GeometryError("rays at +-pi/2 do not decay")
    R = radial_cut(p.lam, d)
    cancel = _cancellation(p)
    kinds = ("upper", "lower") if with_log else (None, None)
    if cancel > MAX_CANCELLATION_LOG:
        raise GeometryError(
            f"ray integrand exceeds the result by e^{cancel:.0f}; use an angle "
            f"near {default_k_angle(p.u, p.lam):.3g}"
        )
    need_digits = cancel / math.log(10.0)
    if cancel <= _DOUBLE_SAFE_LOG and not force_mp:
        total = 0j
        for sgn, kind in zip((1, -1), kinds):
            lo, hi, _ = _ray_support(p, sgn, -45.0 - max(cancel, 0.0))
            hi = min(max(hi, 1.5), R)
            edges = _ray_breakpoints(p, hi)
            edges = edges[edges >= min(lo, 0.5) * 0.0]
            res = quadrature.integrate_panels(
                lambda r, sgn=sgn, kind=kind: _ray_integrand_np(r, sgn, p, kind), edges, order=24)
            total += sgn * res.value
        return total, cancel, "double", R
    import mpmath

    dps = int(20 + math.ceil(max(need_digits, 0.0)))
    with mpmath.workdps(dps):
        total = mpmath.mpc(0)
        for sgn, kind in zip((1, -1), kinds):
            lo, hi, _ = _ray_support(p, sgn, -45.0 - max(cancel, 0.0) - 2.3 * 20)
            hi = min(max(hi, 1.5), R)
            edges = _ray_breakpoints(p, hi)
            pts = [mpmath.mpf(float(x)) for x in edges if x >= 0.0]
            quadrature.count_nodes(len(pts) * 40)
            val = mpmath.quad(lambda r: _ray_integrand_mp(mpmath, r, sgn, p, kind), pts)
            total += sgn * val
        return complex(total), cancel, f"mp{dps}", R


def residue_pair(p: ContourParams, check: bool = True, force_mp: bool = False) -> RayPair:
    """int_{L_delta} - int_{L_-delta} of v^s1 e^(-lam v) / (v (v - 1)) dv.

    The residue theorem (clockwise loop around v = 1) gives -2 pi i e^(-lam);
    ``check`` asserts that to 1e-8 relative.  The mantissa is carried
    relative to e^(-lam).
    """
    total, cancel, prec, R = _ray_pair_integral(p, with_log=False, force_mp=force_mp)
    normalized = total / (2j * math.pi)
    out = RayPair(Scaled(-p.lam, total), normalized, cancel, prec, R,
                  erratum_log_ratio=2.0 * p.lam)
    if check and abs(normalized + 1.0) > RESIDUE_TOL:
        raise GeometryError(
            f"ray pair gives {normalized:.12g} x 2 pi i e^-lam, expected -1 "
            f"(precision {prec}, cancellation e^{cancel:.1f})"
        )
    return out


def default_k_angle(u: float, lam: float = 0.0) -> float:
    """Ray angle for K: keeps the cancellation e^(|u| delta + lam delta^2/2) O(1)."""
    return min(math.pi / 6, 1.0 / max(abs(u), 1.0), 1.0 / math.sqrt(max(lam, 1.0)))


def k_integral(p: ContourParams, delta: float | None = None, force_mp: bool = False) -> RayPair:
    """K = int_{L_delta} ... log(-i(v-1)) ... - int_{L_-delta} ... log(i(v-1)) ...,
    returned with K / (2 pi i e^-lam) in ``normalized``.

    The ray angle defaults to ``default_k_angle(u)``, not ``p.delta_ray``:
    K is path independent and wide rays cost e^(|u| delta) in cancellation."""
    if delta is None:
        delta = default_k_angle(p.u, p.lam)
    p = ContourParams(p.lam, p.u, p.c, delta, p.beta, p.T)
    total, cancel, prec, R = _ray_pair_integral(p, with_log=True, force_mp=force_mp)
    return RayPair(Scaled(-p.lam, total), total / (2j * math.pi), cancel, prec, R)


# ---------------------------------------------------------------- c0

def _int_one_minus_cos_over_x(a: float) -> float:
    def f(x):
        return 2.0 * np.sin(0.5 * x) ** 2 / np.where(x == 0, 1.0, x)

    val, _ = quadrature.adaptive(f, 0.0, a, rtol=1e-15, order=20,
                                 initial_panels=max(1, int(math.ceil(a / 2))))
    return float(np.real(val))


def _cos_over_x_tail(A: float, terms: int = 14) -> float:
    """int_A^inf cos(x)/x dx by repeated integration by parts:
    int_A^inf e^(ix)/x dx ~ -e^(iA) sum_k k! / (i^(k+1) A^(k+1))."""
    acc = 0j
    for k in range(terms):
        acc += math.factorial(k) / ((1j) ** (k + 1) * A ** (k + 1))
    return (-cmath.exp(1j * A) * acc).real


def c0_constant(split: float = 1.0, tail_start: float = 64.0, panels_per_unit: float = 0.5) -> float:
    """int_0^1 (1 - cos x)/x dx - int_1^inf cos(x)/x dx.

    Recombined at ``split`` a:  int_0^a (1-cos x)/x dx - log a - int_a^inf cos x/x dx,
    the infinite piece integrated numerically up to ``tail_start`` and by
    parts beyond it.
    """
    if tail_start <= split:
        raise DomainError("tail_start must exceed split")
    head = _int_one_minus_cos_over_x(split)

    def g(x):
        return np.cos(x) / x

    mid, _ = quadrature.adaptive(g, split, tail_start, rtol=1e-15, order=20,
                                 initial_panels=max(1, int((tail_start - split) * panels_per_unit)))
    return head - math.log(split) - float(np.real(mid)) - _cos_over_x_tail(tail_start)


def euler_gamma_oracle(h: float = 0.02) -> float:
    """Euler's constant from zeta(s) = 1/(s-1) + gamma + O(s-1).

    The symmetric difference g(h) = [zeta(1+h) - 1/h + zeta(1-h) + 1/h]/2
    equals gamma + a h^2 + b h^4 + ...; two Richardson steps remove the
    h^2 and h^4 terms.
    """
    def g(step):
        up = zeta(1 + step, "euler_maclaurin").real - 1.0 / step
        down = zeta(1 - step, "euler_maclaurin").real + 1.0 / step
        return 0.5 * (up + down)

    g1, g2, g4 = g(h), g(2 * h), g(4 * h)
    r1 = (4 * g1 - g2) / 3
    r2 = (4 * g2 - g4) / 3
    return (16 * r1 - r2) / 15


# ---------------------------------------------------------------- asymptotic fit

@dataclass
class AsymptoticFit:
    c0_est: float
    c1: float                    # u^-1 control coefficient (expected 0)
    higher_coeffs: list[float]   # c2, c3, c4
    residual: float              # max abs residual of the fit
    imag_max: float              # max |Im K/(2 pi i e^-lam)| over the family
    us: list[float]
    values: list[complex]


def k_asymptotic_fit(lam: float, us, delta: float | None = None, degree: int = 4,
                     k_values=None) -> AsymptoticFit:
    """Least squares of Re K/(2 pi i e^-lam) - log u against {1, u^-1, ..., u^-degree}."""
    us = np.asarray(sorted(set(float(u) for u in us)))
    if us.size < 6:
        raise FitError("need at least 6 distinct u values")
    if us.max() / us.min() < 9.99:
        raise FitError("u values must span a decade")
    if degree > 4:
        raise FitError("fit degree is capped at 4")
    if k_values is None:
        k_values = [k_integral(ContourParams(lam, u),
                               delta if delta is not None else default_k_angle(u, lam)).normalized
                    for u in us]
    vals = np.asarray(k_values, dtype=complex)
    y = vals.real - np.log(us)
    u0 = us.min()
    design = np.stack([(u0 / us) ** n for n in range(degree + 1)], axis=1)
    if np.linalg.cond(design) > 1e12:
        raise FitError("design matrix is ill-conditioned; spread the u values")
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = float(np.max(np.abs(design @ coef - y)))
    scaled = [float(coef[n] * u0 ** n) for n in range(degree + 1)]
    return AsymptoticFit(scaled[0], scaled[1], scaled[2:], resid,
                         float(np.max(np.abs(vals.imag))), us.tolist(), vals.tolist())


# ---------------------------------------------------------------- indentation

def indentation_arc(p: ContourParams, radius: float) -> complex:
    """Clockwise half circle of given radius above v = 1 for
    v^s1 e^(-lam v) / (v (v - 1)), mantissa relative to e^-lam.  Tends to
    -pi i e^-lam as the radius shrinks (half the clockwise residue)."""
    if not 0.0 < radius < 0.5:
        raise GeometryError("indentation radius must lie in (0, 1/2)")

    def f(phi):
        w = radius * np.exp(1j * phi)
        v = 1.0 + w
        logv = np.log(v)
        return np.exp((p.s1 - 1.0) * logv - p.lam * (v - 1.0)) / w * (1j * w)

    val, _ = quadrature.adaptive(f, math.pi, 0.0, rtol=1e-14, order=20)
    return complex(val)


def indentation_richardson(p: ContourParams, radius: float = 1e-3) -> tuple[complex, complex, complex]:
    """Arc values at radius and radius/2 and their Richardson combination."""
    big = indentation_arc(p, radius)
    small = indentation_arc(p, radius / 2)
    return big, small, 2 * small - big


# ---------------------------------------------------------------- pointwise bounds

# Explicit constants for |v - 1|, v = x e^(i delta), valid when theta <= 1/2
# and delta <= theta/2 (then a = |v - 1|^(c-1) inherits K^(c-1)):
#   x <= 1 - theta:      |v - 1| <= A_LOW,                 pi - b >= B_LOW x delta
#   |x - 1| <= theta:    |v - 1| <= A_MID theta,           min(b, pi - b) >= B_MID delta/theta
#   x >= 1 + theta:      |v - 1| <= A_HIGH x,              b <= B_HIGH delta/theta
#   everywhere:          b > delta
# A_LOW = sqrt 3, A_MID = sqrt(1 + 3/8), B_LOW = 2/(pi sqrt 3), B_MID = (2/pi)/(2 sqrt(11/8)),
# B_HIGH = 1.5/0.9 follow from |v-1|^2 = (x-1)^2 + 2x(1-cos delta) and
# sin b = x sin delta / |v - 1|; the values below are rounded outward.
LEMMA26_CONSTANTS = {
    "A_LOW": 1.75,
    "A_MID": 1.2,
    "A_HIGH": 2.0,
    "B_LOW": 0.35,
    "B_MID": 0.25,
    "B_HIGH": 1.7,
}
THETA_MAX = 0.5


@dataclass
class LemmaPoint:
    x: float
    delta: float
    theta: float
    a_val: float
    b_val: float
    region: str                   # "low" | "mid" | "high" | "edge"
    checks: dict
    bounds_ok: bool | None        # None on edges or outside the regime


def lemma26_a(x: float, delta: float, c: float, shift: float = 1.0) -> float:
    """((x - shift)^2 + 2x(1 - cos delta))^((c-1)/2); shift = 1 gives |v - 1|^(c-1)."""
    return ((x - shift) ** 2 + 4 * x * math.sin(0.5 * delta) ** 2) ** (0.5 * (c - 1))


def lemma26_b(x: float, delta: float) -> float:
    """arg(v - 1) for v = x e^(i delta), the arctan branch in (0, pi)."""
    return math.atan2(x * math.sin(delta), x * math.cos(delta) - 1.0)


def lemma26_region(x: float, theta: float, rel: float = 1e-12) -> str:
    for edge in (1 - theta, 1 + theta):
        if abs(x - edge) <= rel * max(1.0, edge):
            return "edge"
    if x <= 1 - theta:
        return "low"
    if x >= 1 + theta:
        return "high"
    return "mid"


def lemma26_pointwise(x: float, delta: float, p: ContourParams | None = None, *,
                      theta: float | None = None, c: float | None = None,
                      shift: float = 1.0) -> LemmaPoint:
    if x <= 0:
        raise DomainError("x must be positive")
    if not 0 < delta < math.pi:
        raise DomainError("delta must lie in (0, pi)")
    if theta is None:
        if p is None:
            raise DomainError("need ContourParams with T, or theta")
        theta = p.theta
    if c is None:
        c = p.c if p is not None else 1.5
    K = LEMMA26_CONSTANTS
    a = lemma26_a(x, delta, c, shift)
    b = lemma26_b(x, delta)
    region = lemma26_region(x, theta)
    e = c - 1
    checks = {"b>delta": b > delta}
    if region == "low":
        checks["a"] = a <= K["A_LOW"] ** e
        checks["pi-b"] = math.pi - b >= K["B_LOW"] * x * delta
    elif region == "mid":
        checks["a"] = a <= (K["A_MID"] * theta) ** e
        checks["b"] = min(b, math.pi - b) >= K["B_MID"] * delta / theta
    elif region == "high":
        checks["a"] = a <= (K["A_HIGH"] * x) ** e
        checks["b"] = b <= K["B_HIGH"] * delta / theta
    in_regime = theta <= THETA_MAX and delta <= 0.5 * theta and shift == 1.0
    ok = None if region == "edge" or not in_regime else all(checks.values())
    return LemmaPoint(x, delta, theta, a, b, region, checks, ok)


def lemma26_calibrate(theta: float, c: float = 1.5, n: int = 100,
                      x_max: float = 4.0) -> dict:
    """Sweep an n x n (x, delta) grid and return the extreme ratios that the
    frozen constants must dominate: sup for upper-bound constants, inf for
    lower-bound ones."""
    xs = np.linspace(x_max / n, x_max, n)
    ds = np.geomspace(1e-4, 0.5 * theta, n)
    X, D = np.meshgrid(xs, ds, indexing="ij")
    mod = np.sqrt((X - 1) ** 2 + 4 * X * np.sin(0.5 * D) ** 2)
    B = np.arctan2(X * np.sin(D), X * np.cos(D) - 1)
    low = X <= 1 - theta
    high = X >= 1 + theta
    mid = ~low & ~high
    return {
        "A_LOW": float(mod[low].max()),
        "A_MID": float((mod[mid] / theta).max()),
        "A_HIGH": float((mod[high] / X[high]).max()),
        "B_LOW": float(((np.pi - B[low]) / (X[low] * D[low])).min()),
        "B_MID": float((np.minimum(B[mid], np.pi - B[mid]) * theta / D[mid]).min()),
        "B_HIGH": float((B[high] * theta / D[high]).max()),
        "b_over_delta_min": float((B / D).min()),
        "points": int(X.size),
    }


# ---------------------------------------------------------------- small-scale W

@dataclass
class WResult:
    value: complex
    quad_error: float
    tail_estimate: float
    flagged: bool
    t_cut: float
    nodes: int


def _w_log_t_factor(s: np.ndarray, with_cos: bool) -> np.ndarray:
    """log[(1+|s|) Gamma(s)/sin(pi s) (cos pi s) e^(-pi i s/2) * i]."""
    out = (np.log1p(np.abs(s)) + log_gamma_array(s) - _log_cos(np.pi * s - 0.5 * np.pi)
           - 0.5j * np.pi * s + 0.5j * np.pi)
    if with_cos:
        out = out + _log_cos(np.pi * s)
    return out


def _w_x_edges(p: ContourParams, delta: float, x_max: float) -> np.ndarray:
    sig = 1.0 / math.sqrt(p.lam)
    lo = max(1e-6, 1.0 - 9.0 * sig)
    hi = min(x_max, 1.0 + 9.0 * sig)
    coarse = np.arange(lo, hi, min(0.02, sig / 4))
    fine = 1.0 + delta * np.linspace(-6, 6, 49)
    edges = np.unique(np.concatenate([coarse, fine, [lo, hi]]))
    return edges[(edges >= lo) & (edges <= hi)]


def _w_eval(p, delta, t_cut, x_max, with_cos, order):
    xe = _w_x_edges(p, delta, x_max)
    xs, xw = quadrature.panel_nodes(xe, order)
    te = np.linspace(-t_cut, t_cut, int(2 * t_cut) + 1)
    ts, tw = quadrature.panel_nodes(te, order)
    s = p.c + 1j * ts
    g = _w_log_t_factor(s, with_cos)
    v = xs * cmath.exp(1j * delta)
    L = np.log(v - 1.0)
    outer = (p.lam + p.s1 * (np.log(xs) + 1j * delta) - p.lam * v + 1j * delta)
    quadrature.count_nodes(xs.size * ts.size)
    val = 0j
    for lo in range(0, xs.size, 256):
        sl = slice(lo, lo + 256)
        expo = g[None, :] + (s - 1.0)[None, :] * L[sl, None] + outer[sl, None]
        val += complex((np.exp(expo) @ tw) @ xw[sl])
    # tail: |integrand| at +-t_cut over the local decay rate, summed over x
    ends = np.array([-t_cut, -t_cut + 1.0, t_cut - 1.0, t_cut])
    se = p.c + 1j * ends
    mag = np.exp((_w_log_t_factor(se, with_cos)[None, :] + (se - 1.0)[None, :] * L[:, None]
                  + outer[:, None]).real)
    tail = 0.0
    for i0, i1 in ((0, 1), (3, 2)):
        rate = np.log(np.maximum(mag[:, i1], 1e-300) / np.maximum(mag[:, i0], 1e-300))
        rate = np.maximum(rate, 1.0 / t_cut)
        tail += float(np.sum(mag[:, i0] / rate * xw))
    return val, tail, xs.size * ts.size


def w_smallscale(p: ContourParams, t_cut: float = 100.0, x_max: float = 4.0,
                 with_cos: bool = True, delta: float | None = None,
                 max_nodes: int = 20_000_000, order: int = 16) -> WResult:
    """Truncated double integral W over v on L_delta (delta = 1/T) and
    |Im s| <= t_cut on Re s = c.

    The inner integrand decays only like e^(-|t| min(b, pi - b)), so at desk
    scale the truncation is real; its estimate is reported and ``flagged``
    is set when it exceeds 1e-3 |W| or the node budget forced a smaller
    t_cut.
    """
    if p.lam > 200 or t_cut > 100:
        raise DomainError("w_smallscale is a desk-scale check: lam <= 200, t_cut <= 100")
    if delta is None:
        if p.T is None:
            raise DomainError("need T (delta = 1/T) or an explicit delta")
        delta = 1.0 / p.T
    flagged = False
    est = _w_x_edges(p, delta, x_max).size * order * (2 * t_cut) * order
    if est > max_nodes:
        t_cut = max(5.0, t_cut * max_nodes / est)
        flagged = True
    val, tail, nodes = _w_eval(p, delta, t_cut, x_max, with_cos, order)
    coarse, _, n2 = _w_eval(p, delta, t_cut, x_max, with_cos, order // 2)
    qerr = abs(val - coarse)
    flagged = flagged or tail > 1e-3 * abs(val)
    return WResult(val, qerr, tail, flagged, t_cut, nodes + n2)


@dataclass
class TrendRow:
    T: float
    lam: float
    u: float
    w_abs: float
    reference: float      # (log T / T)^c
    ratio: float
    flagged: bool


def w_trend(T_grid=(4.0, 6.0, 8.0, 12.0), c: float = 1.5, eps: float = 0.0,
            u_factor: float = 1.5, t_cut: float = 100.0, with_cos: bool = True,
            lam: float | None = None) -> list[TrendRow]:
    """|W| against (log T / T)^c over a T grid.  By default lam = T^(2 - eps)
    as in the lemma; pass ``lam`` to hold it fixed instead."""
    rows = []
    for T in T_grid:
        lam_T = lam if lam is not None else T ** (2.0 - eps)
        p = ContourParams(lam_T, u_factor * T, c, T=T)
        w = w_smallscale(p, t_cut=t_cut, with_cos=with_cos)
        ref = (math.log(T) / T) ** c
        rows.append(TrendRow(T, lam_T, p.u, abs(w.value), ref, abs(w.value) / ref, w.flagged))
    return rows


def trend_bounded(rows: list[TrendRow], band: float = 3.0) -> bool:
    """Upper-bound trend: |W| / (log T/T)^c never exceeds ``band`` times its
    value at the smallest T (the bound allows faster decay, not slower)."""
    rows = sorted(rows, key=lambda r: r.T)
    return all(r.ratio <= band * rows[0].ratio for r in rows)


def doubling_factors(rows: list[TrendRow]) -> list[tuple[float, float, float]]:
    """(T, observed |W(2T)|/|W(T)|, predicted (log 2T/log T) 2^-c) for every
    pair in the grid related by doubling."""
    by_t = {r.T: r for r in rows}
    out = []
    for r in sorted(rows, key=lambda r: r.T):
        if 2 * r.T in by_t:
            c = math.log(r.reference) / math.log(math.log(r.T) / r.T)
            pred = math.log(2 * r.T) / math.log(r.T) * 2.0 ** (-c)
            out.append((r.T, by_t[2 * r.T].w_abs / r.w_abs, pred))
    return out
