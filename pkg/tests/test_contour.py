import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zetalab import contour as ct
from zetalab.errors import DomainError, FitError, GeometryError, TruncationError
from zetalab.specialfn import log_gamma

EULER = 0.5772156649015329


def test_params():
    p = ct.ContourParams(100.0, 30.0, c=1.3, beta=2.0, T=50.0)
    assert p.s1 == 100.5 + 30j
    assert p.eta == pytest.approx(0.3)
    assert p.theta == pytest.approx(math.sqrt(4 * math.log(50) / 100))
    for bad in (dict(lam=5.0, u=0.0), dict(lam=20.0, u=0.0, c=2.0), dict(lam=20.0, u=0.0, delta_ray=0.0),
                dict(lam=20.0, u=0.0, beta=0.5)):
        with pytest.raises(DomainError):
            ct.ContourParams(**bad)
    with pytest.raises(DomainError):
        ct.ContourParams(20.0, 0.0).theta


# ---------------------------------------------------------------- J

def test_j_closed_at_zero_is_twice_gamma_integral():
    p = ct.ContourParams(100.0, 50.0)
    ref = 2 * cmath.exp(log_gamma(p.s1) - p.s1 * math.log(p.lam))
    assert ct.j_closed(0.0, p).value == pytest.approx(ref, rel=1e-13)


def test_j_closed_against_mpmath():
    p = ct.ContourParams(100.0, 50.0)
    s1 = mpmath.mpc(p.s1.real, p.s1.imag)
    y = 3
    ref = mpmath.gamma(s1) * ((p.lam - 2j * mpmath.pi * y) ** -s1 + (p.lam + 2j * mpmath.pi * y) ** -s1)
    assert ct.j_closed(y, p).value == pytest.approx(complex(ref), rel=1e-11)


@pytest.mark.parametrize("y", [1.0, 5.0, 10.0])
def test_j_closed_even_in_y(y):
    p = ct.ContourParams(100.0, 20.0)
    assert ct.j_closed(-y, p).rel_diff(ct.j_closed(y, p)) <= 1e-14


@pytest.mark.parametrize("y, lam, u, tol", [(3.0, 100.0, 50.0, 1e-8), (10.0, 100.0, 20.0, 1e-7)])
def test_j_contour_matches_closed_form(y, lam, u, tol):
    p = ct.ContourParams(lam, u, c=1.5)
    res = ct.j_contour(y, p, t_cut=200.0)
    assert res.value.rel_diff(ct.j_closed(y, p)) <= tol


def test_j_contour_real_when_u_zero():
    p = ct.ContourParams(50.0, 0.0, c=1.2)
    v = ct.j_contour(1.0, p).value.value
    assert abs(v.imag) <= 1e-9 * abs(v)


def test_j_crosscheck_grid():
    worst = 0.0
    for y in (1.0, 3.0, 10.0):
        for u in (0.0, 20.0, 50.0):
            p = ct.ContourParams(100.0, u)
            worst = max(worst, ct.j_contour(y, p).value.rel_diff(ct.j_closed(y, p)))
    assert worst <= 1e-7


def test_j_contour_truncation_error():
    with pytest.raises(TruncationError, match="t_cut"):
        ct.j_contour(3.0, ct.ContourParams(100.0, 50.0), t_cut=40.0)
    with pytest.raises(DomainError):
        ct.j_contour(0.0, ct.ContourParams(100.0, 50.0))


# ---------------------------------------------------------------- Gamma integral

@pytest.mark.parametrize("lam, u, tol", [(10.0, 0.0, 1e-10), (100.0, 30.0, 1e-9), (1e3, 100.0, 1e-8)])
def test_gamma_integral(lam, u, tol):
    assert ct.gamma_integral(ct.ContourParams(lam, u)) <= tol


# ---------------------------------------------------------------- residue pair

@pytest.mark.parametrize("lam, u, delta", [(50.0, 10.0, math.pi / 6), (50.0, 10.0, math.pi / 3),
                                           (20.0, 0.0, math.pi / 4)])
def test_residue_pair_examples(lam, u, delta):
    r = ct.residue_pair(ct.ContourParams(lam, u, delta_ray=delta))
    assert abs(r.normalized + 1) <= 1e-8
    assert r.value.log_scale == -lam


def test_residue_pair_erratum_recorded():
    r = ct.residue_pair(ct.ContourParams(50.0, 10.0))
    assert r.erratum_log_ratio == pytest.approx(100.0)


def test_residue_pair_path_independence():
    vals = [ct.residue_pair(ct.ContourParams(50.0, 10.0, delta_ray=d)).normalized
            for d in (math.pi / 8, math.pi / 6, math.pi / 4)]
    assert max(abs(a - b) for a in vals for b in vals) <= 1e-9


def test_residue_pair_precision_escalates():
    assert ct.residue_pair(ct.ContourParams(50.0, 10.0, delta_ray=math.pi / 8)).precision == "double"
    assert ct.residue_pair(ct.ContourParams(50.0, 10.0, delta_ray=math.pi / 3)).precision.startswith("mp")
    r = ct.residue_pair(ct.ContourParams(50.0, 10.0, delta_ray=math.pi / 8), force_mp=True)
    assert abs(r.normalized + 1) <= 1e-12


def test_residue_pair_geometry_errors():
    with pytest.raises(GeometryError, match="pole"):
        ct.residue_pair(ct.ContourParams(50.0, 10.0, delta_ray=1e-8))
    with pytest.raises(GeometryError, match="angle"):
        ct.residue_pair(ct.ContourParams(100.0, 200.0, delta_ray=math.pi / 6))
    with pytest.raises(GeometryError):
        ct.radial_cut(50.0, math.pi / 2)


def test_radial_cut_condition():
    for lam, d in [(50.0, 0.3), (1e4, 0.01)]:
        R = ct.radial_cut(lam, d)
        assert lam * R * math.cos(d) - (lam + 0.5) * math.log(R) >= 40 + lam


# ---------------------------------------------------------------- K and c0

def test_k_examples():
    c0 = ct.c0_constant()
    k200 = ct.k_integral(ct.ContourParams(100.0, 200.0)).normalized
    assert abs(k200.real / (math.log(200) + c0) - 1) <= 0.02
    k1000 = ct.k_integral(ct.ContourParams(100.0, 1000.0)).normalized
    assert abs(k1000.real / (math.log(1000) + c0) - 1) <= 0.002
    k500 = ct.k_integral(ct.ContourParams(100.0, 500.0)).normalized
    assert abs((k1000 - k500).real / math.log(2) - 1) <= 0.01


def test_k_conjugation():
    for u in (30.0, 200.0):
        a = ct.k_integral(ct.ContourParams(100.0, u)).normalized
        b = ct.k_integral(ct.ContourParams(100.0, -u)).normalized
        assert abs(a - b.conjugate()) <= 1e-10 * abs(a)


def test_k_path_independent_and_precision_consistent():
    p = ct.ContourParams(100.0, 200.0)
    base = ct.k_integral(p).normalized
    for d in (0.5 / 200, 0.75 / 200):
        assert abs(ct.k_integral(p, d).normalized - base) <= 1e-9
    assert abs(ct.k_integral(p, force_mp=True).normalized - base) <= 1e-11


def test_k_second_order_coefficient_sign():
    c0 = ct.c0_constant()
    u = 300.0
    k = ct.k_integral(ct.ContourParams(100.0, u)).normalized.real
    # the u^-2 correction is of size lam/2
    assert (k - math.log(u) - c0) * u * u == pytest.approx(-50.0, rel=0.05)


def test_no_overflow_up_to_lambda_1e6():
    lam = 1e6
    p = ct.ContourParams(lam, 50.0)
    k = ct.k_integral(p)
    assert math.isfinite(abs(k.normalized)) and k.value.log_scale == -lam
    r = ct.residue_pair(ct.ContourParams(lam, 50.0, delta_ray=ct.default_k_angle(50.0, lam)))
    assert abs(r.normalized + 1) <= 1e-8
    j = ct.j_closed(3.0, p)
    assert math.isfinite(j.log_scale) and math.isfinite(abs(j.mantissa))


def test_c0_constant():
    c0 = ct.c0_constant()
    assert abs(c0 - 0.5772156649) <= 1e-8
    assert abs(c0 - float(mpmath.euler)) <= 1e-12
    assert abs(c0 - ct.euler_gamma_oracle()) <= 1e-6
    assert abs(ct.c0_constant(split=2.0) - c0) <= 1e-8
    parts = [ct.c0_constant(split=a, tail_start=t, panels_per_unit=q)
             for a, t, q in [(1.0, 64.0, 0.5), (2.0, 40.0, 1.0), (0.5, 100.0, 2.0)]]
    assert max(parts) - min(parts) <= 1e-8


def test_euler_gamma_oracle_independent_accuracy():
    assert abs(ct.euler_gamma_oracle() - float(mpmath.euler)) <= 1e-12


def test_k_asymptotic_fit():
    fit = ct.k_asymptotic_fit(100.0, np.geomspace(100, 1000, 8))
    assert abs(fit.c1) <= 1e-3
    assert fit.residual <= 1e-5
    assert abs(fit.c0_est - ct.c0_constant()) <= 1e-4
    assert len(fit.higher_coeffs) == 3


def test_k_asymptotic_fit_errors():
    with pytest.raises(FitError, match="6"):
        ct.k_asymptotic_fit(100.0, [100, 200, 400, 1000], k_values=[0] * 4)
    with pytest.raises(FitError, match="decade"):
        ct.k_asymptotic_fit(100.0, np.linspace(100, 500, 8), k_values=[0] * 8)
    with pytest.raises(FitError, match="ill-conditioned"):
        ct.k_asymptotic_fit(100.0, [100, 100.001, 100.002, 100.003, 100.004, 1001], k_values=[0] * 6)


# ---------------------------------------------------------------- indentation

def test_indentation_converges_to_half_residue():
    p = ct.ContourParams(50.0, 10.0)
    big, small, rich = ct.indentation_richardson(p, 1e-3)
    assert abs(rich + math.pi * 1j) < abs(small + math.pi * 1j) < abs(big + math.pi * 1j)
    assert abs(rich + math.pi * 1j) <= 1e-6
    with pytest.raises(GeometryError):
        ct.indentation_arc(p, 0.7)


# ---------------------------------------------------------------- pointwise bounds

def test_lemma26_examples():
    pt = ct.lemma26_pointwise(2.0, 0.01, theta=0.3, c=1.5)
    assert pt.region == "high"
    assert pt.a_val == pytest.approx(1.0, abs=1e-3)
    assert pt.b_val == pytest.approx(math.atan(0.02 / 0.9998), rel=1e-3)
    assert pt.b_val <= 0.01 / 0.3 and pt.bounds_ok

    pt = ct.lemma26_pointwise(0.5, 0.01, theta=0.3, c=1.5)
    assert pt.b_val == pytest.approx(math.pi - math.atan(0.005 / 0.5), abs=1e-6)
    assert pt.b_val <= math.pi - 0.35 * 0.5 * 0.01 and pt.bounds_ok


def test_lemma26_b_at_unit_x():
    # with v = x e^(i delta) the denominator vanishes at x = 1/cos delta, not at x = 1
    d = 0.01
    assert ct.lemma26_b(1 / math.cos(d), d) == pytest.approx(math.pi / 2, abs=1e-12)
    assert ct.lemma26_b(1.0, d) == pytest.approx(math.pi / 2 + d / 2, abs=1e-12)


@pytest.mark.xfail(strict=True, reason="b(1, delta) = pi/2 + delta/2; the right angle sits at x = 1/cos(delta)")
def test_lemma26_b_at_one_is_exactly_right_angle():
    assert ct.lemma26_b(1.0, 0.01) == math.pi / 2


def test_lemma26_edges_and_regime():
    theta = 0.3
    assert ct.lemma26_pointwise(1 - theta, 0.01, theta=theta).region == "edge"
    assert ct.lemma26_pointwise(1 - theta, 0.01, theta=theta).bounds_ok is None
    # outside the analysed regime nothing is asserted
    assert ct.lemma26_pointwise(2.0, 0.3, theta=0.3).bounds_ok is None
    assert ct.lemma26_pointwise(2.0, 0.01, theta=0.3, shift=0.9).bounds_ok is None
    with pytest.raises(DomainError):
        ct.lemma26_pointwise(-1.0, 0.01, theta=0.3)
    with pytest.raises(DomainError):
        ct.lemma26_pointwise(1.0, 0.01)


def test_lemma26_theta_from_params():
    p = ct.ContourParams(200.0, 0.0, beta=1.0, T=20.0)
    assert ct.lemma26_pointwise(1.01, 0.01, p).theta == pytest.approx(p.theta)


@pytest.mark.parametrize("theta", [0.1, 0.3, 0.5])
def test_lemma26_calibration_within_frozen_constants(theta):
    cal = ct.lemma26_calibrate(theta)
    K = ct.LEMMA26_CONSTANTS
    for name in ("A_LOW", "A_MID", "A_HIGH", "B_HIGH"):
        assert cal[name] <= K[name]
    for name in ("B_LOW", "B_MID"):
        assert cal[name] >= K[name]
    assert cal["b_over_delta_min"] > 1.0
    assert cal["points"] == 10_000


@settings(max_examples=200)
@given(st.floats(0.01, 0.5), st.floats(0.01, 6.0), st.floats(1e-5, 1.0), st.floats(1.01, 1.99))
def test_lemma26_bounds_hold_in_regime(theta, x, frac, c):
    pt = ct.lemma26_pointwise(x, frac * theta / 2, theta=theta, c=c)
    assert pt.bounds_ok in (True, None)
    if pt.region != "edge":
        assert pt.bounds_ok


# ---------------------------------------------------------------- W

def test_w_desk_example():
    w = ct.w_smallscale(ct.ContourParams(100.0, 75.0, c=1.5, T=50.0))
    assert math.isfinite(abs(w.value))
    assert w.tail_estimate >= 0 and w.nodes > 0


def test_w_converged_at_moderate_scale():
    w = ct.w_smallscale(ct.ContourParams(16.0, 6.0, c=1.5, T=4.0))
    assert not w.flagged
    assert w.quad_error <= 1e-8 * abs(w.value)


def test_w_budget_flag_and_domain():
    p = ct.ContourParams(16.0, 6.0, T=4.0)
    w = ct.w_smallscale(p, max_nodes=100_000)
    assert w.flagged and w.t_cut < 100
    with pytest.raises(DomainError):
        ct.w_smallscale(ct.ContourParams(300.0, 6.0, T=4.0))
    with pytest.raises(DomainError):
        ct.w_smallscale(p, t_cut=150.0)
    with pytest.raises(DomainError):
        ct.w_smallscale(ct.ContourParams(16.0, 6.0))


@pytest.fixture(scope="module")
def trend_rows():
    return {cos: ct.w_trend(with_cos=cos) for cos in (True, False)}


def test_w_trend_upper_band(trend_rows):
    for rows in trend_rows.values():
        assert ct.trend_bounded(rows)
        ws = [r.w_abs for r in rows]
        assert all(a > b for a, b in zip(ws, ws[1:]))


def test_w_doubling_without_cos(trend_rows):
    for T, obs, pred in ct.doubling_factors(trend_rows[False]):
        assert pred / 3 <= obs <= 3 * pred


def test_w_doubling_with_cos_first_pair(trend_rows):
    T, obs, pred = ct.doubling_factors(trend_rows[True])[0]
    assert T == 4.0 and pred / 3 <= obs <= 3 * pred


@pytest.mark.xfail(strict=True, reason="from T=6 to 12 |W| falls by 0.07 against a predicted 0.49: "
                                       "faster decay than the two-sided band, still inside the upper bound")
def test_w_doubling_with_cos_two_sided_band(trend_rows):
    for T, obs, pred in ct.doubling_factors(trend_rows[True]):
        assert pred / 3 <= obs <= 3 * pred
