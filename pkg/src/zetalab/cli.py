"""Batch driver: ``zetalab <command> [options]``.

Every command builds a flat configuration (built-in defaults, then the JSON
``--config`` file, then explicit flags), runs its suite, prints a CSV table
and exits 0 when all checks pass, 1 when a check fails and 2 on a bad
configuration.  With ``--cache FILE`` results are appended to a JSONL file
keyed by a hash of the configuration; a repeated run is served from it
without evaluating a single quadrature node.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, contour, estermann, kernel, moment, quadrature, specialfn
from .errors import DomainError, ZetaLabError

log = logging.getLogger("zetalab")


class ConfigError(Exception):
    """Invalid configuration; maps to exit code 2."""


# ---------------------------------------------------------------- option parsing

def _floats(text) -> list[float]:
    if isinstance(text, (int, float)):
        return [float(text)]
    if isinstance(text, list):
        return [float(x) for x in text]
    text = str(text).strip()
    if text.count(":") == 2:
        a, b, n = text.split(":")
        return [float(x) for x in np.linspace(float(a), float(b), int(n))]
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text) -> list[int]:
    vals = _floats(text)
    if any(v != int(v) for v in vals):
        raise ValueError(f"expected integers, got {text!r}")
    return [int(v) for v in vals]


@dataclass
class Opt:
    name: str            # long flag without dashes; dest uses underscores
    default: object
    conv: object         # str -> value
    check: object = None  # value -> bool
    help: str = ""
    choices: tuple | None = None

    @property
    def dest(self) -> str:
        return self.name.replace("-", "_")


def _pos(x):
    return x > 0


COMMON = [
    Opt("workers", 1, int, lambda v: v >= 1, "worker processes for independent cells"),
]

COMMANDS: dict[str, dict] = {}


def command(name: str, options: list[Opt], columns: str):
    def deco(fn):
        COMMANDS[name] = {"fn": fn, "options": options, "columns": columns, "doc": fn.__doc__}
        return fn
    return deco


def build_config(cmd: str, flags: dict, config_file: str | None) -> dict:
    opts = COMMANDS[cmd]["options"] + COMMON
    cfg = {o.dest: o.default for o in opts}
    if config_file:
        try:
            data = json.loads(Path(config_file).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {config_file}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        merged = {k: v for k, v in data.items() if not isinstance(v, dict)}
        merged.update(data.get(cmd, {}))
        known = {o.dest for o in opts} | {o.name for o in opts}
        unknown = set(merged) - known - {"out", "cache"}
        if unknown:
            raise ConfigError(f"unknown config keys for {cmd}: {sorted(unknown)}")
        cfg.update({k.replace("-", "_"): v for k, v in merged.items() if k not in ("out", "cache")})
    cfg.update({k: v for k, v in flags.items() if v is not None and k in cfg})
    for o in opts:
        val = cfg[o.dest]
        try:
            val = o.conv(val) if val is not None else None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"--{o.name}: {exc}") from exc
        if o.choices and val not in o.choices:
            raise ConfigError(f"--{o.name} must be one of {o.choices}")
        if val is not None and o.check is not None:
            bad = any(not o.check(v) for v in val) if isinstance(val, list) else not o.check(val)
            if bad:
                raise ConfigError(f"--{o.name}: value {val!r} out of range ({o.help})")
        cfg[o.dest] = val
    return cfg


# ---------------------------------------------------------------- results

@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class SuiteResult:
    columns: list[str]
    rows: list[list]
    checks: list[Check] = field(default_factory=list)
    provenance: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> dict:
        return {"columns": self.columns, "rows": self.rows,
                "checks": [[c.name, c.passed, c.detail] for c in self.checks],
                "provenance": self.provenance, "extra": self.extra}

    @classmethod
    def from_json(cls, d: dict) -> "SuiteResult":
        return cls(d["columns"], d["rows"], [Check(*c) for c in d["checks"]],
                   d.get("provenance", ""), d.get("extra", {}))


def fmt(x) -> str:
    if isinstance(x, np.bool_):
        x = bool(x)
    if isinstance(x, bool) or x is None:
        return "" if x is None else str(x).lower()
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def _jsonable(x):
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, complex):
        return [_jsonable(x.real), _jsonable(x.imag)]
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return _jsonable(obj)


def to_csv(res: SuiteResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(res.columns)
    for row in res.rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def cache_key(cmd: str, cfg: dict) -> str:
    echo = {k: v for k, v in cfg.items() if k != "workers"}
    blob = json.dumps({"command": cmd, "config": _clean(echo), "version": __version__},
                      sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


class ResultCache:
    """Append-only JSONL store; later records with the same key win."""

    def __init__(self, path):
        self.path = Path(path)
        self._index: dict[str, dict] = {}
        if self.path.exists():
            for line in self.path.read_text().splitlines():
                if line.strip():
                    try:
                        rec = json.loads(line)
                    except json.JSONDecodeError:
                        log.warning("skipping corrupt cache line in %s", self.path)
                        continue
                    self._index[rec["key"]] = rec

    def get(self, key: str) -> dict | None:
        return self._index.get(key)

    def append(self, record: dict) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a") as fh:
            fh.write(json.dumps(_clean(record), sort_keys=True) + "\n")
        self._index[record["key"]] = record


# ---------------------------------------------------------------- zeta

@command("zeta", [
    Opt("t", "14.134725141734693,0", _floats, None, "t values (list or a:b:n) for zeta(1/2 + it)"),
    Opt("mode", "auto", str, None, "zeta evaluation mode", specialfn.ZETA_MODES),
    Opt("check-functional", False, lambda v: v in (True, "true", "1", 1), None,
        "also check zeta(1-s) = chi(1-s) zeta(s) at --s"),
    Opt("s", "2", lambda v: [complex(x) for x in (v if isinstance(v, list) else str(v).split(","))],
        None, "s values for the functional-equation check (Python complex syntax, e.g. 0.3+5j)"),
    Opt("zero-tol", 1e-6, float, _pos, "bound on |zeta| at points flagged as zeros"),
    Opt("fe-tol", 1e-12, float, _pos, "functional-equation residual bound"),
], "kind,t_or_s_re,s_im,re,im,abs,residual,passed")
def cmd_zeta(cfg) -> SuiteResult:
    """zeta(1/2 + it) on a grid; optional functional-equation residuals.

    Points within 1e-6 of a tabulated zero ordinate (14.134725...) are
    checked against --zero-tol."""
    rows, checks = [], []
    zeros = (14.134725141734693, 21.022039638771555, 25.010857580145688)
    vals = specialfn.zeta_critical_array(np.array(cfg["t"]), cfg["mode"])
    for t, z in zip(cfg["t"], vals):
        near = any(abs(abs(t) - g) < 1e-6 for g in zeros)
        ok = abs(z) <= cfg["zero_tol"] if near else None
        rows.append(["zeta", t, 0.5, z.real, z.imag, abs(z), None, ok])
        if near:
            checks.append(Check(f"zero t={t:g}", bool(ok), f"|zeta|={abs(z):.3g}"))
    if cfg["check_functional"]:
        for s in cfg["s"]:
            lhs = specialfn.zeta(1 - s, cfg["mode"])
            rhs = specialfn.chi_factor(s) * specialfn.zeta(s, cfg["mode"])
            r = abs(lhs - rhs)
            ok = r <= cfg["fe_tol"] * max(1.0, abs(lhs))
            rows.append(["functional", s.real, s.imag, lhs.real, lhs.imag, abs(lhs), r, ok])
            checks.append(Check(f"functional s={s}", ok, f"residual={r:.3g}"))
    return SuiteResult(COMMANDS["zeta"]["columns"].split(","), rows, checks, "zeta/chi")


# ---------------------------------------------------------------- kernel

@command("kernel", [
    Opt("lam", 1000.0, float, lambda v: 10 <= v <= kernel.LAMBDA_MAX, "lambda in [10, 1e8]"),
    Opt("t1", 0.0, float, None, "window start"),
    Opt("t2", 1000.0, float, lambda v: v > 1, "window end (= T)"),
    Opt("alpha", 2.0, float, lambda v: v >= 1, "decay exponent alpha >= 1"),
    Opt("t", "-500:1500:201", _floats, None, "evaluation grid (list or a:b:n)"),
], "t,region,omega_re,omega_im,deviation,bound,passed")
def cmd_kernel(cfg) -> SuiteResult:
    """omega(t, T1, T2) against the window bounds: |omega - 1| inside
    [T1 + D, T2 - D], |omega| outside [T1 - D, T2 + D]; edges are reported only."""
    if cfg["t1"] >= cfg["t2"]:
        raise ConfigError("--t1 must be below --t2")
    p = kernel.KernelParams(cfg["lam"], cfg["t1"], cfg["t2"], cfg["alpha"])
    rows = kernel.kernel_window_report(p, cfg["t"], strict=False)
    checks = [Check(f"{r.region} t={r.t:g}", bool(r.passed), f"dev={r.deviation:.3g}")
              for r in rows if r.passed is not None]
    out = [[r.t, r.region, r.omega.real, r.omega.imag, r.deviation, r.bound, r.passed] for r in rows]
    extra = {"delta_margin": p.delta_margin, "bound": p.bound, "below_floor": p.below_floor}
    return SuiteResult(COMMANDS["kernel"]["columns"].split(","), out, checks, "kernel window", extra)


# ---------------------------------------------------------------- estermann

@command("estermann", [
    Opt("suite", "all", str, None, "identity | d0-bound | all", ("identity", "d0-bound", "all")),
    Opt("cases", "0.5j:0/1,0.5j:1/2,1j:1/3", str, None, "x:h/k cases for the identity"),
    Opt("c", 1.5, float, lambda v: 1 < v < 2, "line abscissa in (1, 2)"),
    Opt("t-cut", 60.0, float, _pos, "line truncation |Im s| <= t_cut"),
    Opt("tol", 1e-5, float, _pos, "identity residual bound"),
    Opt("k-max", 40, int, lambda v: v >= 1, "largest k* for the D(0) bound sweep"),
], "suite,case,value,tolerance,passed")
def cmd_estermann(cfg) -> SuiteResult:
    """Identity S(x, h/k) = pole + D(0) + line integral, and the bound
    |D(0, h*/k*)| <= k* log^2(2k*)."""
    rows, checks = [], []
    if cfg["suite"] in ("identity", "all"):
        for case in cfg["cases"].split(","):
            try:
                xs, frac = case.split(":")
                h, k = (int(v) for v in frac.split("/"))
                x = complex(xs)
            except ValueError as exc:
                raise ConfigError(f"bad case {case!r}; expected x:h/k") from exc
            chk = estermann.estermann_identity_check(x, h, k, cfg["c"], cfg["t_cut"])
            ok = chk.residual <= cfg["tol"]
            rows.append(["identity", case, chk.residual, cfg["tol"], ok])
            checks.append(Check(f"identity {case}", ok, f"residual={chk.residual:.3g}"))
    if cfg["suite"] in ("d0-bound", "all"):
        bad = estermann.d0_bound_holds(cfg["k_max"])
        rows.append(["d0-bound", f"k*<={cfg['k_max']}", len(bad), 0, not bad])
        checks.append(Check("D(0) bound", not bad, f"violations={bad[:3]}"))
    return SuiteResult(COMMANDS["estermann"]["columns"].split(","), rows, checks, "Estermann identity")


# ---------------------------------------------------------------- contour

CONTOUR_SUITES = ("j-crosscheck", "gamma", "residue", "c0", "k-fit", "lemma26", "w-trend")


@command("contour", [
    Opt("suite", "all", str, None, "one of " + ", ".join(CONTOUR_SUITES) + " or all",
        CONTOUR_SUITES + ("all",)),
    Opt("lam", 100.0, float, lambda v: v >= 10, "lambda for j-crosscheck and k-fit"),
    Opt("y", "1,3,10", _floats, _pos, "y grid for j-crosscheck"),
    Opt("u", "0,20,50", _floats, None, "u grid for j-crosscheck"),
    Opt("c", 1.5, float, lambda v: 1 < v < 2, "line abscissa c = 1 + eta"),
    Opt("t-cut", 200.0, float, _pos, "|Im s| truncation for J"),
    Opt("j-tol", 1e-7, float, _pos, "J relative tolerance"),
    Opt("residue-lam", 50.0, float, lambda v: v >= 10, "lambda for the residue pair"),
    Opt("residue-u", 10.0, float, None, "u for the residue pair"),
    Opt("residue-deltas", "0.39269908169872414,0.52359877559829882,0.78539816339744828",
        _floats, lambda v: 0 < v < math.pi / 2, "ray angles"),
    Opt("residue-tol", 1e-8, float, _pos, "relative tolerance against -2 pi i e^-lam"),
    Opt("gamma-cases", "10:0,100:30,1000:100", str, None, "lam:u pairs for the Gamma integral"),
    Opt("gamma-tol", 1e-8, float, _pos, "Gamma integral residual bound"),
    Opt("c0-tol", 1e-6, float, _pos, "c0 tolerance against Euler's constant"),
    Opt("k-u", "100:1000:10", _floats, _pos, "u values for the K fit"),
    Opt("c1-tol", 1e-3, float, _pos, "bound on the fitted u^-1 coefficient"),
    Opt("theta", "0.1,0.3,0.5", _floats, lambda v: 0 < v <= 0.5, "theta values for the Lemma 2.6 sweep"),
    Opt("w-T", "4,6,8,12", _floats, lambda v: v > 1, "T grid for the W trend (lam = T^2)"),
    Opt("w-band", 3.0, float, lambda v: v >= 1, "trend band factor"),
], "suite,case,value,tolerance,passed")
def cmd_contour(cfg) -> SuiteResult:
    """Mellin/contour identities: J line integral vs closed form, Gamma
    integral, residue pair (-2 pi i e^-lam), c0 vs Euler's constant, the K
    asymptotic fit, pointwise a/b bounds and the small-scale W trend."""
    suites = CONTOUR_SUITES if cfg["suite"] == "all" else (cfg["suite"],)
    rows, checks = [], []

    def add(suite, case, value, tol, ok):
        rows.append([suite, case, value, tol, bool(ok)])
        checks.append(Check(f"{suite} {case}", bool(ok), f"value={value:.6g}"))

    if "j-crosscheck" in suites:
        worst = 0.0
        for y in cfg["y"]:
            for u in cfg["u"]:
                p = contour.ContourParams(cfg["lam"], u, cfg["c"])
                r = contour.j_contour(y, p, cfg["t_cut"]).value.rel_diff(contour.j_closed(y, p))
                worst = max(worst, r)
                rows.append(["j-crosscheck", f"y={y:g} u={u:g}", r, cfg["j_tol"], r <= cfg["j_tol"]])
        checks.append(Check("j-crosscheck max", worst <= cfg["j_tol"], f"max={worst:.3g}"))
    if "gamma" in suites:
        for case in cfg["gamma_cases"].split(","):
            lam, u = (float(v) for v in case.split(":"))
            r = contour.gamma_integral(contour.ContourParams(lam, u))
            add("gamma", f"lam={lam:g} u={u:g}", r, cfg["gamma_tol"], r <= cfg["gamma_tol"])
    if "residue" in suites:
        for d in cfg["residue_deltas"]:
            p = contour.ContourParams(cfg["residue_lam"], cfg["residue_u"], delta_ray=d)
            rp = contour.residue_pair(p, check=False)
            err = abs(rp.normalized + 1.0)
            add("residue", f"delta={d:.6f} ({rp.precision})", err, cfg["residue_tol"],
                err <= cfg["residue_tol"])
            rows.append(["residue-erratum", f"delta={d:.6f}", rp.erratum_log_ratio, None, None])
    if "c0" in suites:
        c0 = contour.c0_constant()
        oracle = contour.euler_gamma_oracle()
        add("c0", "vs 0.5772156649015329", abs(c0 - specialfn.EULER_GAMMA), cfg["c0_tol"],
            abs(c0 - specialfn.EULER_GAMMA) <= cfg["c0_tol"])
        add("c0", "vs zeta-Laurent oracle", abs(c0 - oracle), cfg["c0_tol"], abs(c0 - oracle) <= cfg["c0_tol"])
    if "k-fit" in suites:
        fit = contour.k_asymptotic_fit(cfg["lam"], cfg["k_u"])
        add("k-fit", "|c1|", abs(fit.c1), cfg["c1_tol"], abs(fit.c1) <= cfg["c1_tol"])
        add("k-fit", "|c0_est - c0|", abs(fit.c0_est - contour.c0_constant()), 1e-4,
            abs(fit.c0_est - contour.c0_constant()) <= 1e-4)
        add("k-fit", "residual", fit.residual, 1e-5, fit.residual <= 1e-5)
        rows.append(["k-fit", "c2", fit.higher_coeffs[0], None, None])
    if "lemma26" in suites:
        for theta in cfg["theta"]:
            emp = contour.lemma26_calibrate(theta, cfg["c"])
            frozen = contour.LEMMA26_CONSTANTS
            for name, val in frozen.items():
                upper = name.startswith("A") or name == "B_HIGH"
                ok = emp[name] <= val if upper else emp[name] >= val
                add("lemma26", f"theta={theta:g} {name}", emp[name], val, ok)
            add("lemma26", f"theta={theta:g} b/delta min", emp["b_over_delta_min"], 1.0,
                emp["b_over_delta_min"] > 1.0)
    if "w-trend" in suites:
        trend = contour.w_trend(cfg["w_T"], c=cfg["c"])
        for r in trend:
            rows.append(["w-trend", f"T={r.T:g}", r.w_abs, r.reference, None])
        dec = all(a.w_abs > b.w_abs for a, b in zip(trend, trend[1:]))
        add("w-trend", "monotone decrease", float(dec), 1.0, dec)
        ok = contour.trend_bounded(trend, cfg["w_band"])
        add("w-trend", "ratio within band", max(r.ratio for r in trend) / trend[0].ratio, cfg["w_band"], ok)
    return SuiteResult(COMMANDS["contour"]["columns"].split(","), rows, checks, "contour identities")


# ---------------------------------------------------------------- moment

def _mollifier(spec: str, m: int) -> moment.DirichletPolynomial:
    if spec.startswith("file:"):
        return moment.DirichletPolynomial.from_file(spec[5:])
    return moment.DirichletPolynomial.preset(spec, m)


def _mollifier_ok(v):
    return v.startswith("file:") or v in moment.KINDS[:3]


MOMENT_OPTS = [
    Opt("mollifier", "ones", str, _mollifier_ok, "ones | moebius | smoothed_moebius | file:PATH"),
    Opt("b0", moment.DEFAULT_B0, float, None, "main-term constant b0 (default 2 gamma)"),
    Opt("order", 16, int, lambda v: v >= 8, "Gauss-Legendre order per panel"),
    Opt("max-nodes", moment.DEFAULT_MAX_NODES, int, _pos, "node budget per moment"),
]


@command("moment", MOMENT_OPTS + [
    Opt("M", 1, int, lambda v: v >= 1, "mollifier length"),
    Opt("T", 1000.0, float, lambda v: v > 2 * math.pi, "upper limit T"),
    Opt("rel-tol", 0.02, float, _pos, "bound on |E| / main"),
    Opt("m2-factor", None, float, _pos, "if set, also require |E| <= factor * M^2"),
], "T,M,i_numeric,main_term,error_term,rel_error,est_quadrature_error,nodes")
def cmd_moment(cfg) -> SuiteResult:
    """Sharp second moment over [0, T] against the main term."""
    p = _mollifier(cfg["mollifier"], cfg["M"])
    rep = moment.moment_report(p, cfg["T"], b0=cfg["b0"], order=cfg["order"],
                               max_nodes=cfg["max_nodes"])
    rel = abs(rep.error_term) / abs(rep.main_term)
    rows = [[cfg["T"], p.m_max, rep.i_numeric, rep.main_term, rep.error_term, rel,
             rep.est_quadrature_error, rep.quadrature_nodes]]
    checks = [Check("|E|/main", rel <= cfg["rel_tol"], f"{rel:.3g}")]
    if cfg["m2_factor"] is not None:
        checks.append(Check("|E| <= f M^2", abs(rep.error_term) <= cfg["m2_factor"] * p.m_max ** 2,
                            f"|E|={abs(rep.error_term):.3g}"))
    return SuiteResult(COMMANDS["moment"]["columns"].split(","), rows, checks, "second moment main term")


@command("scan", MOMENT_OPTS + [
    Opt("M", "2,4,8", _ints, lambda v: v >= 1, "M grid (ascending)"),
    Opt("T", "500,1000", _floats, lambda v: v > 2 * math.pi, "T grid (ascending)"),
    Opt("c", 1.5, float, lambda v: v > 1, "abscissa for V in the normalized columns"),
    Opt("max-a", 2.5, float, None, "acceptance bound on the fitted M exponent"),
], "T,M,i_numeric,main_term,error_term,E_over_VT^-c,E_over_VT^-eta,failure")
def cmd_scan(cfg) -> SuiteResult:
    """Error term over a (T, M) grid and the fit log|E| = a log M + b log T + const."""
    if cfg["mollifier"].startswith("file:"):
        raise ConfigError("scan needs a preset mollifier")
    res = moment.error_scan(cfg["mollifier"], cfg["T"], cfg["M"], b0=cfg["b0"],
                            workers=cfg["workers"], c=cfg["c"], order=cfg["order"],
                            max_nodes=cfg["max_nodes"])
    rows = []
    for cell in res.cells:
        n = res.normalizations.get((cell.T, cell.M), {})
        if cell.report is None:
            rows.append([cell.T, cell.M, None, None, None, None, None, cell.failure])
        else:
            r = cell.report
            rows.append([cell.T, cell.M, r.i_numeric, r.main_term, r.error_term,
                         n.get("E_over_VT^-c"), n.get("E_over_VT^-eta"), ""])
    checks = [Check("cells", all(c.report is not None for c in res.cells), "")]
    extra = {}
    if res.fit is not None:
        f = res.fit
        extra = {"a": f.a, "a_ci": list(f.a_ci), "b": f.b, "b_ci": list(f.b_ci), "n_cells": f.n_cells}
        if not math.isnan(f.a):
            checks.append(Check("M exponent", f.a <= cfg["max_a"], f"a={f.a:.3g} CI={f.a_ci}"))
    return SuiteResult(COMMANDS["scan"]["columns"].split(","), rows, checks, "error term scan", extra)


# ---------------------------------------------------------------- driver

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="zetalab", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name, spec in COMMANDS.items():
        sp = sub.add_parser(name, help=spec["doc"].splitlines()[0], description=spec["doc"],
                            epilog="CSV columns: " + spec["columns"],
                            formatter_class=argparse.RawDescriptionHelpFormatter)
        sp.add_argument("--config", help="JSON file; explicit flags override it")
        sp.add_argument("--out", help="run directory for CSV, JSON summary and manifest")
        sp.add_argument("--cache", help="JSONL result cache")
        sp.add_argument("-v", "--verbose", action="store_true")
        for o in spec["options"] + COMMON:
            kw = {"dest": o.dest, "default": None,
                  "help": f"{o.help} (default: {o.default})"}
            if o.choices:
                kw["choices"] = o.choices
            if isinstance(o.default, bool):
                sp.add_argument(f"--{o.name}", action="store_const", const=True, **kw)
            else:
                sp.add_argument(f"--{o.name}", **kw)
    return ap


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cmd = args.command
    flags = {k: v for k, v in vars(args).items()
             if k not in ("command", "config", "out", "cache", "verbose")}
    try:
        cfg = build_config(cmd, flags, args.config)
    except ConfigError as exc:
        print(f"zetalab {cmd}: configuration error: {exc}", file=sys.stderr)
        return 2
    key = cache_key(cmd, cfg)
    cache = ResultCache(args.cache) if args.cache else None
    hit = cache.get(key) if cache else None
    start = time.perf_counter()
    nodes0 = quadrature.node_count()
    if hit is not None:
        result = SuiteResult.from_json(hit["outputs"])
        log.info("cache hit %s", key[:12])
    else:
        try:
            result = COMMANDS[cmd]["fn"](cfg)
        except (ConfigError, DomainError) as exc:
            print(f"zetalab {cmd}: configuration error: {exc}", file=sys.stderr)
            return 2
        except ZetaLabError as exc:
            print(f"zetalab {cmd}: {type(exc).__name__}: {exc}", file=sys.stderr)
            return 1
    wall = time.perf_counter() - start
    text = to_csv(result)
    stdout.write(text)
    for c in result.checks:
        if not c.passed:
            print(f"FAIL {c.name}: {c.detail}", file=sys.stderr)
    if cache is not None and hit is None:
        cache.append({"key": key, "suite": cmd, "input": cfg, "outputs": result.to_json(),
                      "provenance": result.provenance, "wall_time": wall,
                      "passed": result.passed, "version": __version__})
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{cmd}.csv").write_text(text)
        (out / f"{cmd}.json").write_text(json.dumps(_clean(result.to_json()), indent=1, sort_keys=True))
        manifest = {"command": cmd, "key": key, "config": _clean(cfg), "passed": result.passed,
                    "cache_hit": hit is not None, "nodes": quadrature.node_count() - nodes0,
                    "files": [f"{cmd}.csv", f"{cmd}.json"], "version": __version__}
        (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True))
    return 0 if result.passed else 1


def main(argv=None) -> None:
    sys.exit(run(argv))
