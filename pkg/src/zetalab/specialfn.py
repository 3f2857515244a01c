"""Complex special functions and arithmetic helpers.

Everything here accepts Python scalars; the ``*_array`` variants accept
numpy arrays and are what the integrators call on quadrature nodes.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import DomainError, PoleError

EULER_GAMMA = 0.57721566490153286061
LOG_2PI = math.log(2.0 * math.pi)

# Re z at and above which the Stirling series is used without shifting.
STIRLING_THRESHOLD = 10.0
STIRLING_TERMS = 12


@lru_cache(maxsize=None)
def bernoulli_numbers(n: int) -> tuple[Fraction, ...]:
    """Exact B_0..B_n (B_1 = -1/2 convention)."""
    b = [Fraction(0)] * (n + 1)
    b[0] = Fraction(1)
    for m in range(1, n + 1):
        acc = Fraction(0)
        for k in range(m):
            acc += math.comb(m + 1, k) * b[k]
        b[m] = -acc / (m + 1)
    return tuple(b)


def _even_bernoulli(count: int) -> np.ndarray:
    b = bernoulli_numbers(2 * count)
    return np.array([float(b[2 * k]) for k in range(1, count + 1)])


_B2K = _even_bernoulli(30)
# B_{2k} / (2k (2k-1)) for the Stirling series
_STIRLING_COEF = np.array([_B2K[k - 1] / (2 * k * (2 * k - 1)) for k in range(1, STIRLING_TERMS + 1)])
# B_{2k} / (2k)! for Euler-Maclaurin
_EM_COEF = np.array([_B2K[k - 1] / math.factorial(2 * k) for k in range(1, 31)])


# ---------------------------------------------------------------- log Gamma

def _stirling_tail(z):
    """sum_k B_2k / (2k(2k-1) z^(2k-1)), vectorized, Horner in 1/z^2."""
    zi = 1.0 / z
    zi2 = zi * zi
    acc = np.zeros_like(z)
    for c in _STIRLING_COEF[::-1]:
        acc = acc * zi2 + c
    return acc * zi


def log_gamma_array(z) -> np.ndarray:
    """Principal log Gamma on a complex array (no pole checking)."""
    z = np.asarray(z, dtype=complex)
    flip = z.imag < 0
    w = np.where(flip, np.conj(z), z)
    shift = np.maximum(np.ceil(STIRLING_THRESHOLD - w.real), 0).astype(int)
    shifted = w + shift
    out = (shifted - 0.5) * np.log(shifted) - shifted + 0.5 * LOG_2PI + _stirling_tail(shifted)
    n_max = int(shift.max()) if shift.size else 0
    for k in range(n_max):
        active = shift > k
        if not active.any():
            break
        out = out - np.where(active, np.log(np.where(active, w + k, 1.0)), 0.0)
    return np.where(flip, np.conj(out), out)


def _check_gamma_pole(z: complex) -> None:
    if z.imag == 0 and z.real <= 0 and z.real == math.floor(z.real):
        raise DomainError(f"Gamma has a pole at z = {z.real:g}")


def log_gamma(z) -> complex:
    """Principal branch of log Gamma(z).

    Shifts Re z up to 10 with the recurrence and applies a 12-term Stirling
    series there. Conjugate symmetric: log_gamma(conj z) = conj log_gamma(z).
    """
    z = complex(z)
    _check_gamma_pole(z)
    return complex(log_gamma_array(np.array([z]))[0])


def stirling_magnitude_exponent_array(lam: float, x) -> np.ndarray:
    """lam + Re log Gamma(lam + i x) - lam log lam, evaluated without forming
    any quantity of size lam log lam (valid for lam >= 10)."""
    x = np.asarray(x, dtype=float)
    y = x / lam
    z = lam + 1j * x
    re_main = (lam - 0.5) * 0.5 * np.log1p(y * y) - x * np.arctan(y)
    return -0.5 * math.log(lam) + re_main + 0.5 * LOG_2PI + _stirling_tail(z).real


def stirling_phase_array(lam: float, x) -> np.ndarray:
    """Im log Gamma(lam + i x) - x log lam, the argument of
    Gamma(lam + i x) lam^(-lam - i x)."""
    x = np.asarray(x, dtype=float)
    y = x / lam
    z = lam + 1j * x
    small = np.abs(y) < 1e-3
    # (lam - 1/2) atan(y) - x = lam (atan y - y) - atan(y) / 2, series for small y
    y2 = y * y
    atan_minus = np.where(small, -y * y2 / 3.0 * (1 - 0.6 * y2 + 3.0 / 7.0 * y2 * y2),
                          np.arctan(y) - y)
    im_main = lam * atan_minus - 0.5 * np.arctan(y) + x * 0.5 * np.log1p(y2)
    return im_main + _stirling_tail(z).imag


def stirling_magnitude_exponent(lam: float, x: float) -> float:
    if lam < STIRLING_THRESHOLD:
        raise DomainError("stirling_magnitude_exponent needs lambda >= 10")
    return float(stirling_magnitude_exponent_array(lam, np.array([x]))[0])


# ---------------------------------------------------------------- zeta

def _euler_maclaurin_array(s, a: float = 1.0, n_terms: int | None = None) -> np.ndarray:
    """Hurwitz zeta(s, a) by Euler-Maclaurin, vectorized over s.

    One head length N is used for the whole batch: max(30, 2 max|Im s|).
    """
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    if n_terms is None:
        n_terms = int(max(30, math.ceil(2.0 * float(np.abs(s.imag).max(initial=0.0))),
                          math.ceil(np.abs(s).max(initial=0.0))))
    N = n_terms
    out = np.empty(s.shape, dtype=complex)
    chunk = max(1, 4_000_000 // N)
    logs = np.log(np.arange(N, dtype=float) + a)
    logN = math.log(N + a)
    for start in range(0, s.size, chunk):
        sc = s[start:start + chunk]
        head = np.exp(-np.outer(sc, logs)).sum(axis=1)
        tail_pow = np.exp(-sc * logN)  # (N+a)^(-s)
        acc = head + (N + a) * tail_pow / (sc - 1.0) + 0.5 * tail_pow
        # correction terms: B_2k/(2k)! * s(s+1)...(s+2k-2) * (N+a)^(-s-2k+1)
        poch = sc.copy()
        powr = tail_pow / (N + a)
        inv2 = 1.0 / (N + a) ** 2
        for k in range(len(_EM_COEF)):
            term = _EM_COEF[k] * poch * powr
            acc = acc + term
            if np.all(np.abs(term) <= 1e-18 * np.abs(acc)):
                break
            poch = poch * (sc + 2 * k + 1) * (sc + 2 * k + 2)
            powr = powr * inv2
        out[start:start + chunk] = acc
    return out


@lru_cache(maxsize=1)
def _psi_taylor() -> np.ndarray:
    """Taylor coefficients in x = p - 1/2 of
    Psi(p) = cos(2 pi (p^2 - p - 1/16)) / cos(2 pi p).

    Psi is entire but the series division has to be done in extended
    precision because 1/cos(2 pi x) alone has radius 1/4.
    """
    import mpmath

    order = 80
    with mpmath.workdps(80):
        two_pi = 2 * mpmath.pi
        c5, s5 = mpmath.cos(5 * mpmath.pi / 8), mpmath.sin(5 * mpmath.pi / 8)
        num = [mpmath.mpf(0)] * (order + 1)
        den = [mpmath.mpf(0)] * (order + 1)
        # cos(2 pi x^2 - 5pi/8) = c5 cos(2 pi x^2) + s5 sin(2 pi x^2)
        j = 0
        while 4 * j <= order:
            num[4 * j] += c5 * (-1) ** j * two_pi ** (2 * j) / mpmath.factorial(2 * j)
            if 4 * j + 2 <= order:
                num[4 * j + 2] += s5 * (-1) ** j * two_pi ** (2 * j + 1) / mpmath.factorial(2 * j + 1)
            j += 1
        for j in range(0, order // 2 + 1):
            den[2 * j] = -((-1) ** j) * two_pi ** (2 * j) / mpmath.factorial(2 * j)
        q = [mpmath.mpf(0)] * (order + 1)
        for n in range(order + 1):
            acc = num[n]
            for i in range(1, n + 1):
                acc -= den[i] * q[n - i]
            q[n] = acc / den[0]
        return np.array([float(v) for v in q])


def _psi_derivative(x: np.ndarray, k: int) -> np.ndarray:
    q = _psi_taylor()
    n = np.arange(k, len(q))
    falling = np.array([math.perm(int(m), k) for m in n], dtype=float)
    coef = q[k:] * falling
    return np.polynomial.polynomial.polyval(x, coef)


def riemann_siegel_theta_array(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return log_gamma_array(0.25 + 0.5j * t).imag - 0.5 * t * math.log(math.pi)


def _rs_remainder(p: np.ndarray, t: np.ndarray) -> np.ndarray:
    x = p - 0.5
    pi2 = math.pi ** 2
    d = {k: _psi_derivative(x, k) for k in (0, 1, 2, 3, 4, 5, 6, 8, 9, 12)}
    c0 = d[0]
    c1 = -d[3] / (96 * pi2)
    c2 = d[2] / (64 * pi2) + d[6] / (18432 * pi2 ** 2)
    c3 = -d[1] / (64 * pi2) - d[5] / (3840 * pi2 ** 2) - d[9] / (5308416 * pi2 ** 3)
    c4 = (d[0] / (128 * pi2) + 19 * d[4] / (24576 * pi2 ** 2)
          + 11 * d[8] / (5898240 * pi2 ** 3) + d[12] / (2038431744 * pi2 ** 4))
    r = np.sqrt(2 * math.pi / t)
    return c0 + r * (c1 + r * (c2 + r * (c3 + r * c4)))


def riemann_siegel_z_array(t) -> np.ndarray:
    """Hardy Z(t) for t >= 30 from the Riemann-Siegel main sum and the
    C0..C4 corrections."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    tau = np.sqrt(t / (2 * math.pi))
    N = np.floor(tau).astype(int)
    p = tau - N
    theta = riemann_siegel_theta_array(t)
    n_max = int(N.max()) if N.size else 0
    main = np.zeros_like(t)
    for n in range(1, n_max + 1):
        active = N >= n
        main += np.where(active, np.cos(theta - t * math.log(n)) / math.sqrt(n), 0.0)
    sign = np.where(N % 2 == 1, 1.0, -1.0)  # (-1)^(N-1)
    rem = sign * (2 * math.pi / t) ** 0.25 * _rs_remainder(p, t)
    return 2.0 * main + rem


ZETA_MODES = ("euler_maclaurin", "riemann_siegel", "auto")
RS_MIN_T = 30.0


def zeta_critical_array(t, mode: str = "auto") -> np.ndarray:
    """zeta(1/2 + i t) on an array of real t."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if mode == "euler_maclaurin":
        return _euler_maclaurin_array(0.5 + 1j * t)
    if mode == "riemann_siegel":
        if np.any(t < RS_MIN_T):
            raise DomainError("riemann_siegel mode needs Im s >= 30")
        return np.exp(-1j * riemann_siegel_theta_array(t)) * riemann_siegel_z_array(t)
    if mode != "auto":
        raise DomainError(f"unknown zeta mode {mode!r}")
    out = np.empty(t.shape, dtype=complex)
    big = np.abs(t) >= RS_MIN_T
    if big.any():
        ta = np.abs(t[big])
        val = np.exp(-1j * riemann_siegel_theta_array(ta)) * riemann_siegel_z_array(ta)
        out[big] = np.where(t[big] < 0, np.conj(val), val)
    if (~big).any():
        out[~big] = _euler_maclaurin_array(0.5 + 1j * t[~big])
    return out


def zeta(s, mode: str = "auto") -> complex:
    """Riemann zeta.

    ``euler_maclaurin`` works for every s != 1; ``riemann_siegel`` only on
    the critical line with Im s >= 30; ``auto`` uses Riemann-Siegel there
    and Euler-Maclaurin elsewhere.
    """
    s = complex(s)
    if s == 1:
        raise PoleError("zeta has a pole at s = 1")
    on_line = s.real == 0.5
    if mode == "riemann_siegel":
        if not on_line or s.imag < RS_MIN_T:
            raise DomainError("riemann_siegel mode needs Re s = 1/2 and Im s >= 30")
        return complex(zeta_critical_array(np.array([s.imag]), "riemann_siegel")[0])
    if mode == "auto" and on_line and abs(s.imag) >= RS_MIN_T:
        return complex(zeta_critical_array(np.array([s.imag]), "auto")[0])
    if mode not in ZETA_MODES:
        raise DomainError(f"unknown zeta mode {mode!r}")
    return complex(_euler_maclaurin_array(np.array([s]))[0])


def _log_cos(z: np.ndarray) -> np.ndarray:
    """log cos z without overflow for large |Im z|; continuous branch
    (differs from the principal log by a multiple of 2 pi i only)."""
    up = z.imag >= 0
    # Im z >= 0: cos z = e^{-iz}/2 (1 + e^{2iz}); else mirror
    zz = np.where(up, z, -z)
    return -1j * zz - math.log(2.0) + np.log1p(np.exp(2j * zz)) * 1.0


def chi_factor_array(s) -> np.ndarray:
    s = np.asarray(s, dtype=complex)
    log_val = math.log(2.0) - s * LOG_2PI + log_gamma_array(s) + _log_cos(0.5 * math.pi * s)
    return np.exp(log_val)


def chi_factor(s) -> complex:
    """chi(1 - s) = 2 (2 pi)^(-s) Gamma(s) cos(pi s / 2), so that
    zeta(1 - s) = chi(1 - s) zeta(s)."""
    s = complex(s)
    _check_gamma_pole(s)
    return complex(chi_factor_array(np.array([s]))[0])


# ---------------------------------------------------------------- arithmetic

@dataclass(frozen=True)
class ArithmeticTable:
    limit: int
    divisor_counts: np.ndarray

    @classmethod
    def build(cls, limit: int) -> "ArithmeticTable":
        d = np.zeros(limit + 1, dtype=np.int32)
        for i in range(1, math.isqrt(limit) + 1):
            d[i * i::i] += 2
            d[i * i] -= 1
        d.setflags(write=False)
        return cls(limit, d)


_TABLE = ArithmeticTable.build(1 << 16)


def divisor_table(limit: int) -> np.ndarray:
    """d(0..limit) as a read-only array (d(0) = 0 placeholder)."""
    global _TABLE
    if limit > _TABLE.limit:
        size = _TABLE.limit
        while size < limit:
            size *= 2
        _TABLE = ArithmeticTable.build(size)
    return _TABLE.divisor_counts[: limit + 1]


def divisor_d(n: int) -> int:
    n = int(n)
    if n <= 0:
        raise DomainError("d(n) needs n >= 1")
    if n <= _TABLE.limit:
        return int(_TABLE.divisor_counts[n])
    count = 1
    m = n
    p = 2
    while p * p <= m:
        e = 0
        while m % p == 0:
            m //= p
            e += 1
        count *= e + 1
        p += 1 if p == 2 else 2
    if m > 1:
        count *= 2
    return count


def mobius(n: int) -> int:
    if n <= 0:
        raise DomainError("mu(n) needs n >= 1")
    m, mu, p = n, 1, 2
    while p * p <= m:
        if m % p == 0:
            m //= p
            if m % p == 0:
                return 0
            mu = -mu
        p += 1 if p == 2 else 2
    return -mu if m > 1 else mu


class ReducedFraction(NamedTuple):
    h_star: int
    k_star: int
    h_bar: int  # least positive inverse of h_star modulo k_star
    g: int      # gcd(h, k)


def reduce_fraction(h: int, k: int) -> ReducedFraction:
    h, k = int(h), int(k)
    if h < 1 or k < 1:
        raise DomainError("reduce_fraction needs h, k >= 1")
    g = math.gcd(h, k)
    hs, ks = h // g, k // g
    hb = 1 if ks == 1 else pow(hs, -1, ks)
    return ReducedFraction(hs, ks, hb, g)


def e(x: float) -> complex:
    """e(x) = exp(2 pi i x) with argument reduction mod 1."""
    return cmath.exp(2j * math.pi * (x - math.floor(x)))
