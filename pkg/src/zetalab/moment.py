"""Second moments of zeta(1/2 + it) A(1/2 + it) for a Dirichlet polynomial A,
the main-term formula, its density g, the series M(s) with its supremum V,
the gcd sum, and a scan of the error term against (T, M).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import optimize, stats

from . import quadrature
from .errors import BudgetError, DivergenceError, DomainError, FitError, TruncationError
from .estermann import divisor_tail_bound, estermann_continued_array, terms_for_tail
from .kernel import KernelParams, kernel_density, omega_array
from .specialfn import (EULER_GAMMA, ZETA_MODES, divisor_table, mobius, reduce_fraction,
                        zeta_critical_array)

KINDS = ("ones", "moebius", "smoothed_moebius", "custom")
DEFAULT_B0 = 2 * EULER_GAMMA
DESK_T_MAX = 1e4
DEFAULT_MAX_NODES = 2_000_000


# ---------------------------------------------------------------- mollifier

@dataclass(frozen=True)
class DirichletPolynomial:
    m_max: int
    coeffs: tuple
    kind: str = "custom"

    def __post_init__(self):
        if self.m_max < 1:
            raise DomainError("M must be >= 1")
        if len(self.coeffs) != self.m_max:
            raise DomainError("need exactly M coefficients a(1..M)")
        if self.kind not in KINDS:
            raise DomainError(f"unknown mollifier kind {self.kind!r}")

    @classmethod
    def preset(cls, kind: str, m_max: int) -> "DirichletPolynomial":
        if kind == "ones":
            a = [1.0] * m_max
        elif kind == "moebius":
            a = [float(mobius(m)) for m in range(1, m_max + 1)]
        elif kind == "smoothed_moebius":
            if m_max < 2:
                raise DomainError("smoothed Moebius needs M >= 2")
            L = math.log(m_max)
            a = [mobius(m) * (1 - math.log(m) / L) for m in range(1, m_max + 1)]
        else:
            raise DomainError(f"no preset named {kind!r}")
        return cls(m_max, tuple(complex(x) for x in a), kind)

    @classmethod
    def from_file(cls, path) -> "DirichletPolynomial":
        """Read lines "m re im" (1-based; missing m are zero; '#' comments)."""
        entries = {}
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise DomainError(f"{path}:{lineno}: expected 'm re im'")
            m = int(parts[0])
            if m < 1:
                raise DomainError(f"{path}:{lineno}: m must be >= 1")
            entries[m] = complex(float(parts[1]), float(parts[2]))
        if not entries:
            raise DomainError(f"{path}: no coefficients")
        M = max(entries)
        return cls(M, tuple(entries.get(m, 0j) for m in range(1, M + 1)), "custom")

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=complex)

    def describe(self) -> dict:
        return {"kind": self.kind, "m_max": self.m_max,
                "coeffs": [[c.real, c.imag] for c in self.coeffs] if self.kind == "custom" else None}


def poly_eval(p: DirichletPolynomial, s) -> complex:
    """A(s) with compensated (fsum) accumulation of the M terms."""
    s = complex(s)
    terms = [a * complex(np.exp(-s * math.log(m))) for m, a in enumerate(p.coeffs, 1) if a != 0]
    return complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms))


def poly_critical_array(p: DirichletPolynomial, t) -> np.ndarray:
    """A(1/2 + i t) on an array of t."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    a = p.array
    m = np.arange(1, p.m_max + 1)
    nz = a != 0
    a, logm = a[nz], np.log(m[nz])
    out = np.empty(t.shape, dtype=complex)
    amp = a / np.sqrt(m[nz])
    for lo in range(0, t.size, 4096):
        sl = slice(lo, lo + 4096)
        out[sl] = np.exp(-1j * np.outer(t[sl], logm)) @ amp
    return out


# ---------------------------------------------------------------- integrand

@dataclass(frozen=True)
class MollifiedIntegrand:
    poly: DirichletPolynomial
    zeta_mode: str = "auto"

    def __post_init__(self):
        if self.zeta_mode not in ZETA_MODES:
            raise DomainError(f"unknown zeta mode {self.zeta_mode!r}")

    def values(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        z = zeta_critical_array(t, self.zeta_mode)
        a = poly_critical_array(self.poly, t)
        return (np.abs(z) * np.abs(a)) ** 2


def integrand(mi: MollifiedIntegrand, t: float) -> float:
    if t < 0:
        raise DomainError("integrand is defined for t >= 0")
    return float(mi.values(np.array([t]))[0])


# ---------------------------------------------------------------- sharp and smoothed moments

@dataclass
class MomentReport:
    t_lo: float
    t_hi: float
    i_numeric: float
    main_term: float
    b0_used: float
    quadrature_nodes: int
    est_quadrature_error: float
    error_term: float = field(init=False)

    def __post_init__(self):
        self.error_term = self.i_numeric - self.main_term


def panel_width(t_hi: float, m_max: int = 1) -> float:
    """Panel width tied to the mean zero spacing 2 pi / log(t/2pi), narrowed
    by the oscillation of |A|^2 at frequency up to 2 log M."""
    freq = max(math.log(max(t_hi, 2 * math.pi) / (2 * math.pi)), 1.0) + 2 * math.log(m_max)
    return 2 * math.pi / freq


def _edges(t_lo: float, t_hi: float, width: float) -> np.ndarray:
    n = max(1, int(math.ceil((t_hi - t_lo) / width)))
    return np.linspace(t_lo, t_hi, n + 1)


def _check_budget(n_panels: int, order: int, max_nodes: int, t_lo: float, t_hi: float):
    need = n_panels * (order + order // 2)
    if need > max_nodes:
        parts = int(math.ceil(need / max_nodes))
        raise BudgetError(
            f"[{t_lo:g}, {t_hi:g}] needs {need} nodes (cap {max_nodes}); "
            f"split into >= {parts} ranges or raise the cap"
        )


def sharp_moment(mi: MollifiedIntegrand, t_lo: float, t_hi: float,
                 nodes_per_unit: float | None = None, order: int = 16,
                 max_nodes: int = DEFAULT_MAX_NODES, allow_large_t: bool = False) -> MomentReport:
    """int_{t_lo}^{t_hi} |zeta A(1/2 + it)|^2 dt by fixed-order panels.

    The error estimate is the difference against the half-order rule.  The
    main term of the report is left as NaN; see ``moment_report``.
    """
    if t_hi < t_lo or t_lo < 0:
        raise DomainError("need 0 <= t_lo <= t_hi")
    if t_hi > DESK_T_MAX and not allow_large_t:
        raise BudgetError(f"T = {t_hi:g} exceeds the desk cap {DESK_T_MAX:g}; pass allow_large_t")
    if order < 8:
        raise DomainError("panel order must be >= 8")
    if t_hi == t_lo:
        return MomentReport(t_lo, t_hi, 0.0, math.nan, math.nan, 0, 0.0)
    width = panel_width(t_hi, mi.poly.m_max)
    floor = 4 * math.log(max(t_hi, 2 * math.pi * math.e) / (2 * math.pi)) / (2 * math.pi)
    if nodes_per_unit is not None:
        if nodes_per_unit < floor:
            raise DomainError(f"nodes_per_unit must be >= {floor:.3g} (4 per mean zero spacing)")
        width = min(width, order / nodes_per_unit)
    edges = _edges(t_lo, t_hi, width)
    _check_budget(edges.size - 1, order, max_nodes, t_lo, t_hi)
    res = quadrature.integrate_panels(mi.values, edges, order=order)
    return MomentReport(t_lo, t_hi, float(res.value.real), math.nan, math.nan,
                        res.nodes, res.error)


def smoothed_moment(mi: MollifiedIntegrand, p: KernelParams, t_lo: float, t_hi: float,
                    order: int = 16, max_nodes: int = DEFAULT_MAX_NODES) -> tuple[float, float]:
    """int Re omega(t) |zeta A(1/2 + it)|^2 dt over [t_lo, t_hi].

    Returns (value, error estimate).  The range must either cover the kernel
    window with 12 sqrt(lam) slack on both sides (clipped at t = 0) or lie
    entirely outside it by that slack; a partial overlap truncates the
    kernel and is refused.
    """
    slack = 12 * math.sqrt(p.lam)
    covers = t_lo <= max(0.0, p.t1 - slack) and t_hi >= p.t2 + slack
    disjoint = t_hi <= p.t1 - slack or t_lo >= p.t2 + slack
    if not (covers or disjoint):
        raise DomainError("integration range must cover the kernel window plus 12 sqrt(lambda), "
                          "or avoid it by that margin")
    edges = _edges(t_lo, t_hi, panel_width(t_hi, mi.poly.m_max))
    _check_budget(edges.size - 1, order, max_nodes, t_lo, t_hi)

    def f(t):
        out = np.empty(t.shape, dtype=float)
        for lo in range(0, t.size, 1024):
            sl = slice(lo, lo + 1024)
            out[sl] = omega_array(t[sl], p).real * mi.values(t[sl])
        return out

    res = quadrature.integrate_panels(f, edges, order=order)
    return float(res.value), res.error


# ---------------------------------------------------------------- main term

def _pair_weights(p: DirichletPolynomial):
    """Yield (h, k, g, a(h) conj(a(k)) / (hk)) over h <= k, nonzero a."""
    a = p.coeffs
    for h in range(1, p.m_max + 1):
        if a[h - 1] == 0:
            continue
        for k in range(h, p.m_max + 1):
            if a[k - 1] == 0:
                continue
            yield h, k, math.gcd(h, k), a[h - 1] * a[k - 1].conjugate() / (h * k)


def main_term(p: DirichletPolynomial, t_total: float, b0: float = DEFAULT_B0) -> float:
    """T sum_{h,k} a(h) conj a(k) /(hk) (h,k) (log(T (h,k)^2 / (2 pi h k)) + b0 - 1).

    Summed over h <= k with off-diagonal pairs entering as twice their real
    part, which is what the Hermitian symmetry of the full sum gives.
    """
    if t_total <= 0:
        raise DomainError("T must be positive")
    acc = []
    for h, k, g, w in _pair_weights(p):
        term = w * g * (math.log(t_total * g * g / (2 * math.pi * h * k)) + b0 - 1.0)
        acc.append(term.real if h == k else 2.0 * term.real)
    return t_total * math.fsum(acc)


def main_term_unsymmetrized(p: DirichletPolynomial, t_total: float, b0: float = DEFAULT_B0) -> complex:
    """The full h, k double loop, kept complex (for the realness check)."""
    a = p.coeffs
    acc = 0j
    for h in range(1, p.m_max + 1):
        for k in range(1, p.m_max + 1):
            g = math.gcd(h, k)
            acc += (a[h - 1] * a[k - 1].conjugate() / (h * k) * g
                    * (math.log(t_total * g * g / (2 * math.pi * h * k)) + b0 - 1.0))
    return t_total * acc


def main_term_range(p: DirichletPolynomial, t_lo: float, t_hi: float, b0: float = DEFAULT_B0) -> float:
    """main_term(t_hi) - main_term(t_lo), with main_term(0) = 0 (T log T -> 0)."""
    lo = main_term(p, t_lo, b0) if t_lo > 0 else 0.0
    return main_term(p, t_hi, b0) - lo


def g_main(p: DirichletPolynomial, u: float, b0: float = DEFAULT_B0) -> float:
    """Density of the main term: sum a(h) conj a(k)/(hk) (h,k) (log(u (h,k)^2/(2 pi hk)) + b0).

    With b0 = 2 gamma this is d/dT main_term(T) at T = u.
    """
    if u <= 0:
        raise DomainError("u must be positive")
    acc = []
    for h, k, g, w in _pair_weights(p):
        term = w * g * (math.log(u * g * g / (2 * math.pi * h * k)) + b0)
        acc.append(term.real if h == k else 2.0 * term.real)
    return math.fsum(acc)


def g_numeric(p: DirichletPolynomial, u: float, lam: float, zeta_mode: str = "auto",
              order: int = 16, integrand_fn=None) -> float:
    """Gamma-weighted local average of |zeta A(1/2 + it)|^2 around t = u:
    Re int kernel_density(u - t, lam) |zeta A|^2 dt over |t - u| <= 12 sqrt(lam).

    ``integrand_fn`` replaces |zeta A|^2 (the kernel mass is checked with 1).
    """
    if u < 0:
        raise DomainError("u must be >= 0")
    sig = math.sqrt(lam)
    t_lo, t_hi = u - 12 * sig, u + 12 * sig
    mi = MollifiedIntegrand(p, zeta_mode)
    f_int = integrand_fn or mi.values
    edges = _edges(t_lo, t_hi, min(panel_width(t_hi, p.m_max), sig / 2))

    def f(t):
        return (kernel_density(u - t, lam) * f_int(np.abs(t))).real

    res = quadrature.integrate_panels(f, edges, order=order)
    return float(res.value)


# ---------------------------------------------------------------- M(s) and V

@dataclass
class ScriptMPoint:
    s: complex
    value: complex
    n_trunc: int
    tail_bound: float


def _script_m_groups(p: DirichletPolynomial):
    """Group pairs (h, k) by (hbar*, k*): M(s) = sum over groups of
    D(s, hbar*/k*) sum_{(h,k) in group} a(h) conj a(k) (hk)^(s-1) (h,k)^(1-2s)."""
    groups: dict[tuple[int, int], list[tuple[complex, float, float]]] = {}
    a = p.coeffs
    for h in range(1, p.m_max + 1):
        for k in range(1, p.m_max + 1):
            w = a[h - 1] * a[k - 1].conjugate()
            if w == 0:
                continue
            rf = reduce_fraction(h, k)
            key = (rf.h_bar % rf.k_star, rf.k_star)
            groups.setdefault(key, []).append((w, math.log(h * k), math.log(rf.g)))
    return groups


def _group_weight(members, s):
    s = np.asarray(s, dtype=complex)
    out = np.zeros(s.shape, dtype=complex)
    for w, log_hk, log_g in members:
        out += w * np.exp((s - 1) * log_hk + (1 - 2 * s) * log_g)
    return out


def script_m_exact(p: DirichletPolynomial, s) -> np.ndarray:
    """M(s) through analytically continued Estermann functions (any s != 1)."""
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    total = np.zeros(s.shape, dtype=complex)
    for (hb, ks), members in _script_m_groups(p).items():
        total += _group_weight(members, s) * estermann_continued_array(s, hb, ks)
    return total


def script_m(p: DirichletPolynomial, s, tol: float = 1e-6, n_cap: int = 1 << 23) -> ScriptMPoint:
    """M(s) by direct summation over n with a certified tail bound <= tol."""
    s = complex(s)
    c = s.real
    if c <= 1:
        raise DivergenceError("M(s) series needs Re s > 1")
    groups = _script_m_groups(p)
    weights = {key: complex(_group_weight(m, np.array([s]))[0]) for key, m in groups.items()}
    wsum = sum(abs(w) for w in weights.values())
    n = terms_for_tail(c, tol / max(wsum, 1e-300), n_cap)
    d = divisor_table(n)[1:].astype(float)
    nn = np.arange(1, n + 1)
    base = d * np.exp(-s * np.log(nn))
    total = 0j
    for (hb, ks), w in weights.items():
        phase = np.exp(2j * np.pi * ((nn * hb) % ks) / ks)
        total += w * complex(np.sum(base * phase))
    return ScriptMPoint(s, total, n, wsum * divisor_tail_bound(c, n))


def script_m_bruteforce(p: DirichletPolynomial, s, n_max: int) -> complex:
    """Direct triple sum over n <= n_max and all (h, k); test oracle."""
    s = complex(s)
    d = divisor_table(n_max)[1:].astype(float)
    nn = np.arange(1, n_max + 1)
    base = d * np.exp(-s * np.log(nn))
    a = p.coeffs
    total = 0j
    for h in range(1, p.m_max + 1):
        for k in range(1, p.m_max + 1):
            rf = reduce_fraction(h, k)
            w = a[h - 1] * a[k - 1].conjugate() * (h * k) ** (s - 1) * rf.g ** (1 - 2 * s)
            total += w * complex(np.sum(base * np.exp(2j * np.pi * ((nn * rf.h_bar) % rf.k_star) / rf.k_star)))
    return total


def v_sup(p: DirichletPolynomial, c: float, grid_step: float = 0.05, top: int = 3) -> tuple[float, float]:
    """sup_{|t| <= M} |M(c + it)|: grid scan, then bounded Brent refinement
    around the ``top`` grid maxima.  Returns (V, t*)."""
    if c <= 1:
        raise DivergenceError("V needs c > 1")
    M = p.m_max
    n = max(3, int(math.ceil(2 * M / grid_step)) + 1)
    ts = np.linspace(-M, M, n)
    vals = np.abs(script_m_exact(p, c + 1j * ts))
    best_v, best_t = float(vals.max()), float(ts[vals.argmax()])
    h = ts[1] - ts[0]
    peaks = [i for i in range(n) if (i == 0 or vals[i] >= vals[i - 1]) and (i == n - 1 or vals[i] >= vals[i + 1])]
    peaks = sorted(peaks, key=lambda i: -vals[i])[:top]
    for i in peaks:
        lo, hi = max(-M, ts[i] - h), min(M, ts[i] + h)
        if hi <= lo:
            continue
        r = optimize.minimize_scalar(lambda t: -abs(script_m_exact(p, c + 1j * t)[0]),
                                     bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
        if -r.fun > best_v:
            best_v, best_t = float(-r.fun), float(r.x)
    return best_v, best_t


# ---------------------------------------------------------------- gcd sum

def totients(n: int) -> np.ndarray:
    phi = np.arange(n + 1)
    for q in range(2, n + 1):
        if phi[q] == q:
            phi[q::q] -= phi[q::q] // q
    return phi


def _harmonic_prefix(n: int, exact: bool):
    if exact:
        out = [Fraction(0)]
        for m in range(1, n + 1):
            out.append(out[-1] + Fraction(1, m))
        return out
    return np.concatenate([[0.0], np.cumsum(1.0 / np.arange(1, n + 1))])


def gcd_sum(m_max: int, exact: bool = False):
    """sum_{h,k <= M} (h,k)/(hk), via (h,k) = sum_{t | h, t | k} phi(t):
    sum_t phi(t)/t^2 H(floor(M/t))^2.  ``exact`` returns a Fraction."""
    if m_max < 1:
        raise DomainError("M must be >= 1")
    phi = totients(m_max)
    H = _harmonic_prefix(m_max, exact)
    if exact:
        return sum(Fraction(int(phi[t]), t * t) * H[m_max // t] ** 2 for t in range(1, m_max + 1))
    t = np.arange(1, m_max + 1)
    return math.fsum(phi[t] / t ** 2 * H[m_max // t] ** 2)


def gcd_sum_upper(m_max: int) -> float:
    """sum_t t (sum_{t | h <= M} 1/h)^2 = sum_t H(floor(M/t))^2 / t, an upper
    bound for gcd_sum (phi(t) <= t)."""
    H = _harmonic_prefix(m_max, False)
    t = np.arange(1, m_max + 1)
    return math.fsum(H[m_max // t] ** 2 / t)


def gcd_sum_bruteforce(m_max: int) -> Fraction:
    return sum(Fraction(math.gcd(h, k), h * k)
               for h in range(1, m_max + 1) for k in range(1, m_max + 1))


# ---------------------------------------------------------------- error scan

def moment_report(p: DirichletPolynomial, t_hi: float, t_lo: float = 0.0, b0: float = DEFAULT_B0,
                  zeta_mode: str = "auto", **quad) -> MomentReport:
    rep = sharp_moment(MollifiedIntegrand(p, zeta_mode), t_lo, t_hi, **quad)
    main = main_term_range(p, t_lo, t_hi, b0)
    return MomentReport(t_lo, t_hi, rep.i_numeric, main, b0, rep.quadrature_nodes,
                        rep.est_quadrature_error)


@dataclass
class ScanCell:
    T: float
    M: int
    report: MomentReport | None
    failure: str | None = None


@dataclass
class ScanFit:
    a: float
    b: float
    a_ci: tuple[float, float]
    b_ci: tuple[float, float]
    n_cells: int


@dataclass
class ScanResult:
    cells: list[ScanCell]
    fit: ScanFit | None
    normalizations: dict = field(default_factory=dict)


def _scan_cell(args) -> ScanCell:
    kind, T, M, b0, quad = args
    try:
        p = DirichletPolynomial.preset(kind, M)
        return ScanCell(T, M, moment_report(p, T, b0=b0, **quad))
    except Exception as exc:   # a failed cell is recorded, the scan goes on
        return ScanCell(T, M, None, f"{type(exc).__name__}: {exc}")


def fit_exponents(cells: list[ScanCell], level: float = 0.95) -> ScanFit:
    """Least squares log|E| = a log M + b log T + const with t-based intervals.
    Columns without spread (single M or single T) are dropped and reported as NaN."""
    ok = [c for c in cells if c.report is not None and c.report.error_term != 0]
    if len(ok) < 2:
        raise FitError("need at least two successful cells")
    y = np.log([abs(c.report.error_term) for c in ok])
    cols, names = [np.ones(len(ok))], ["const"]
    logM = np.log([c.M for c in ok])
    logT = np.log([c.T for c in ok])
    if np.ptp(logM) > 0:
        cols.append(logM)
        names.append("a")
    if np.ptp(logT) > 0:
        cols.append(logT)
        names.append("b")
    X = np.stack(cols, axis=1)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    dof = len(ok) - X.shape[1]
    if dof > 0:
        resid = y - X @ coef
        s2 = float(resid @ resid) / dof
        cov = s2 * np.linalg.pinv(X.T @ X)
        q = float(stats.t.ppf(0.5 + level / 2, dof))
        half = q * np.sqrt(np.diag(cov))
    else:
        half = np.full(X.shape[1], np.inf)
    est = {n: (float(coef[i]), float(half[i])) for i, n in enumerate(names)}
    nan = (math.nan, math.nan)

    def get(name):
        if name not in est:
            return math.nan, nan
        v, h = est[name]
        return v, (v - h, v + h)

    a, a_ci = get("a")
    b, b_ci = get("b")
    return ScanFit(a, b, a_ci, b_ci, len(ok))


def error_scan(kind: str, t_grid, m_grid, b0: float = DEFAULT_B0, workers: int = 1,
               c: float | None = None, **quad) -> ScanResult:
    """MomentReport for every (T, M), then the exponent fit.

    With ``c`` the table also carries E / (V T^(-c)) and E / (V T^(-(c-1)))
    (both normalizations of the error term in circulation).
    """
    t_grid, m_grid = list(t_grid), list(m_grid)
    if t_grid != sorted(t_grid) or m_grid != sorted(m_grid):
        raise DomainError("scan grids must be sorted ascending")
    jobs = [(kind, float(T), int(M), b0, quad) for M in m_grid for T in t_grid]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_scan_cell, jobs))
    else:
        cells = [_scan_cell(j) for j in jobs]
    cells.sort(key=lambda cell: (cell.M, cell.T))
    try:
        fit = fit_exponents(cells)
    except FitError:
        fit = None
    norms = {}
    if c is not None:
        for M in m_grid:
            V, _ = v_sup(DirichletPolynomial.preset(kind, M), c)
            for cell in cells:
                if cell.M == M and cell.report is not None:
                    E = cell.report.error_term
                    norms[(cell.T, M)] = {"V": V, "E_over_VT^-c": E / (V * cell.T ** -c),
                                          "E_over_VT^-eta": E / (V * cell.T ** -(c - 1))}
    return ScanResult(cells, fit, norms)
