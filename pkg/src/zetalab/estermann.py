"""Estermann zeta function D(s, h/k), the divisor exponential sum S(x, h/k),
and the identity linking them.

D(s, h/k) = sum_n d(n) e(nh/k) n^(-s) continues to s != 1 through the
Hurwitz decomposition

    D(s, h/k) = k^(-2s) sum_{a,b=1..k} e(abh/k) zeta(s, a/k) zeta(s, b/k).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import quadrature
from .errors import BranchError, DivergenceError, DomainError, PoleError, RegionError, TruncationError
from .specialfn import (EULER_GAMMA, LOG_2PI, _euler_maclaurin_array, divisor_table,
                        log_gamma_array, reduce_fraction)


class Truncated(NamedTuple):
    """A truncated series: partial sum, certified bound on the dropped tail,
    number of terms kept."""
    value: complex
    tail_bound: float
    n_terms: int


def hurwitz_zeta(s, a: float) -> complex:
    s = complex(s)
    if s == 1:
        raise PoleError("Hurwitz zeta has a pole at s = 1")
    if not 0.0 < a <= 1.0:
        raise DomainError("hurwitz_zeta needs a in (0, 1]")
    return complex(_euler_maclaurin_array(np.array([s]), a)[0])


def hurwitz_zeta_array(s, a: float) -> np.ndarray:
    return _euler_maclaurin_array(s, a)


def _phase_matrix(h: int, k: int) -> np.ndarray:
    a = np.arange(1, k + 1)
    return np.exp(2j * np.pi * ((np.outer(a, a) * h) % k) / k)


def estermann_continued_array(s, h: int, k: int) -> np.ndarray:
    """D(s, h/k) for an array of s via k Hurwitz evaluations per point."""
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    if np.any(s == 1):
        raise PoleError("D(s, h/k) has a double pole at s = 1")
    k = int(k)
    if k < 1:
        raise DomainError("denominator k must be >= 1")
    hz = np.stack([hurwitz_zeta_array(s, a / k) for a in range(1, k + 1)])  # (k, n)
    E = _phase_matrix(int(h) % k, k)
    quad_form = np.einsum("an,ab,bn->n", hz, E, hz)
    return np.exp(-2.0 * s * math.log(k)) * quad_form


def estermann_continued(s, h: int, k: int) -> complex:
    """D(s, h/k) for every s != 1 (h may be any integer, only h mod k matters)."""
    return complex(estermann_continued_array(np.array([complex(s)]), h, k)[0])


def divisor_tail_bound(sigma: float, n: int) -> float:
    """Upper bound for sum_{m > n} d(m) m^(-sigma), sigma > 1.

    Partial summation against sum_{m<=x} d(m) <= x (log x + 1) gives
    sigma n^(1-sigma) [ (log n + 1)/(sigma - 1) + 1/(sigma - 1)^2 ].
    """
    if sigma <= 1:
        return math.inf
    n = max(n, 1)
    p = n ** (1.0 - sigma)
    return sigma * p * ((math.log(n) + 1.0) / (sigma - 1.0) + 1.0 / (sigma - 1.0) ** 2)


def terms_for_tail(sigma: float, tol: float, n_cap: int = 10_000_000) -> int:
    """Smallest power-of-two-ish n with divisor_tail_bound(sigma, n) <= tol."""
    n = 16
    while divisor_tail_bound(sigma, n) > tol:
        n *= 2
        if n > n_cap:
            raise TruncationError(
                f"tail sum_(n>N) d(n) n^-{sigma:g} cannot reach {tol:g} with N <= {n_cap}"
            )
    return n


def estermann_direct(s, h: int, k: int, n_max: int, tol: float | None = None) -> Truncated:
    """Partial sum of sum_n d(n) e(nh/k) n^(-s) for Re s > 1.

    If ``tol`` is given and the certified tail bound exceeds it, refuses
    instead of returning a silently truncated value.
    """
    s = complex(s)
    if s.real <= 1:
        raise RegionError("the Dirichlet series for D(s, h/k) needs Re s > 1")
    k = int(k)
    tail = divisor_tail_bound(s.real, n_max)
    if tol is not None and tail > tol:
        raise TruncationError(
            f"tail bound {tail:.3g} exceeds tolerance {tol:.3g}; "
            f"need n_max >= {terms_for_tail(s.real, tol)}"
        )
    d = divisor_table(n_max)[1:].astype(float)
    n = np.arange(1, n_max + 1)
    phase = 2j * np.pi * ((n * (int(h) % k)) % k) / k
    terms = d * np.exp(phase - s * np.log(n))
    return Truncated(complex(np.sum(terms)), tail, n_max)


# ---------------------------------------------------------------- S(x, h/k)

def s_sum(x, h: int, k: int, n_max: int | None = None) -> Truncated:
    """S(x, h/k) = sum_n d(n) e(nh/k) e^(2 pi i n x), Im x > 0.

    Without ``n_max`` the sum runs until d(n) e^(-2 pi n Im x) < 1e-17 and the
    geometric tail bound is certified below 1e-15.
    """
    x = complex(x)
    if x.imag <= 0:
        raise DivergenceError("S(x, h/k) needs Im x > 0")
    k = int(k)
    q = math.exp(-2 * math.pi * x.imag)
    if n_max is None:
        # d(n) <= 2 sqrt(n); stop once the envelope is negligible
        n_max = 1
        while 2 * math.sqrt(n_max) * q ** n_max > 1e-17 * (1 - q) or n_max < 4:
            n_max += max(1, n_max // 4)
    d = divisor_table(n_max)[1:].astype(float)
    n = np.arange(1, n_max + 1)
    phase = 2j * np.pi * (((n * (int(h) % k)) % k) / k + n * x.real) - 2 * np.pi * n * x.imag
    value = complex(np.sum(d * np.exp(phase)))
    m = n_max + 1
    # sum_{n>=m} 2 sqrt(n) q^n <= 2 sqrt(m) q^m / (1 - q) * (1 + 1/(2m))  (ratio bound)
    ratio = q * math.sqrt(1 + 1.0 / m)
    tail = 2 * math.sqrt(m) * q ** m / (1 - ratio) if ratio < 1 else math.inf
    return Truncated(value, tail, n_max)


# ---------------------------------------------------------------- identity

@dataclass
class IdentityCheck:
    residual: float
    lhs: complex
    rhs: complex
    pole_term: complex
    d0_term: complex
    integral_term: complex
    integral_error: float
    reading: dict


def _line_integrand(t, c, z, hbar, ks, power_2pi: int, minus_sign: bool):
    """(2pi)^(-p s) Gamma(s) k^(2s-1) / sin(pi s) [D(s, hbar/k) +/- cos(pi s) D(s, -hbar/k)] z^(s-1)
    on s = c + i t, multiplied by ds/dt = i."""
    s = c + 1j * np.asarray(t, dtype=float)
    log_z = cmath.log(z)
    d_plus = estermann_continued_array(s, hbar, ks)
    d_minus = estermann_continued_array(s, -hbar, ks)
    # Gamma(s)/sin(pi s) in log form; cos(pi s)/sin(pi s) directly (bounded off the axis)
    lg = log_gamma_array(s)
    sin_ps = np.sin(np.pi * s)
    cot = np.cos(np.pi * s) / sin_ps
    sgn = -1.0 if minus_sign else 1.0
    log_pref = -power_2pi * s * LOG_2PI + lg + (2 * s - 1) * math.log(ks) + (s - 1) * log_z
    pref = np.exp(log_pref)
    return 1j * pref * (d_plus / sin_ps + sgn * cot * d_minus)


def estermann_identity_check(x, h: int, k: int, c: float = 1.5, t_cut: float = 60.0,
                             normalization: str = "absorbed", power_2pi: int = 2,
                             d0_numerator: str = "plain", tol: float = 1e-13) -> IdentityCheck:
    """|S(x, h/k) - RHS| for the Mellin identity expressing S through D.

    RHS = (gamma - log z - 2 log k*)/(z k*) + D(0, num/k*)
          - i * norm * int_{(c)} (2pi)^(-p s) Gamma(s) k*^(2s-1)/sin(pi s)
                  [D(s, hbar*/k*) + cos(pi s) D(s, -hbar*/k*)] z^(s-1) ds,

    with z = -2 pi i x.  Switches select the reading:

    * ``normalization``: "absorbed" (norm = 1, the prefix -i already holds
      the 1/(2 pi i)) or "mellin" (norm = 1/(2 pi i) on top of -i).
    * ``power_2pi``: exponent p of (2 pi)^(-p s); 2 is what the functional
      equation of D produces, 1 is the literal printed reading.
    * ``d0_numerator``: "plain" uses D(0, h*/k*), "inverse" D(0, hbar*/k*).
    """
    x = complex(x)
    if x.imag <= 0:
        raise DivergenceError("identity needs Im x > 0")
    if not 1.0 < c < 2.0:
        raise DomainError("line abscissa c must lie in (1, 2)")
    h = int(h)
    k = int(k)
    if h % k == 0:
        hs, ks, hbar = 0, 1, 0
    else:
        rf = reduce_fraction(h % k, k)
        hs, ks, hbar = rf.h_star, rf.k_star, rf.h_bar
    z = -2j * math.pi * x
    if z.real <= 0:
        raise BranchError("z = -2 pi i x must lie in the right half-plane")
    log_z = cmath.log(z)
    pole = (EULER_GAMMA - log_z - 2 * math.log(ks)) / (z * ks)
    num = hs if d0_numerator == "plain" else hbar
    d0 = estermann_continued(0.0, num, ks)

    def f(t):
        return _line_integrand(t, c, z, hbar, ks, power_2pi, minus_sign=False)

    edge = np.abs(f(np.array([-t_cut, t_cut])))
    mid = np.abs(f(np.array([0.0])))[0]
    if np.any(edge > mid):
        raise BranchError("line integrand does not decay; check the branch of z^(s-1)")
    integral, err = quadrature.adaptive(f, -t_cut, t_cut, atol=tol, rtol=0.0,
                                        order=20, initial_panels=max(8, int(t_cut // 4)))
    integral = complex(integral)
    if normalization == "mellin":
        integral /= 2j * math.pi
    elif normalization != "absorbed":
        raise DomainError(f"unknown normalization {normalization!r}")
    integral_term = -1j * integral
    rhs = pole + d0 + integral_term
    lhs = s_sum(x, h, k).value
    reading = {"normalization": normalization, "power_2pi": power_2pi,
               "d0_numerator": d0_numerator}
    return IdentityCheck(abs(lhs - rhs), lhs, rhs, pole, d0, integral_term, err, reading)


def resolve_identity_reading(x, h: int, k: int, c: float = 1.5, t_cut: float = 60.0) -> list[IdentityCheck]:
    """Run every reading of the identity and return the checks sorted by residual."""
    checks = []
    for norm in ("absorbed", "mellin"):
        for p in (1, 2):
            for num in ("plain", "inverse"):
                checks.append(estermann_identity_check(x, h, k, c, t_cut, norm, p, num))
    return sorted(checks, key=lambda ch: ch.residual)


def d0_bound_holds(k_max: int = 40) -> list[tuple[int, int, float, float]]:
    """|D(0, h*/k*)| <= k* (log 2k*)^2 over all reduced fractions with
    k* <= k_max.  Returns the violations (empty when the bound holds)."""
    bad = []
    for ks in range(1, k_max + 1):
        bound = ks * math.log(2 * ks) ** 2
        for hs in range(1, ks + 1):
            if math.gcd(hs, ks) != 1:
                continue
            v = abs(estermann_continued(0.0, hs, ks))
            if v > bound:
                bad.append((hs, ks, v, bound))
    return bad
