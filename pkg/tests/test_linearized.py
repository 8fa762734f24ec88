import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neckglue import (BoundaryData, Field, NormSpec, ParameterError,
                      RadialBVP, RadialProfile, lambda_n, check_remainder_inequalities,
                      neck_radius_from_b, norm_weighted, picard_interior, potential,
                      q_crossing, q_remainder, q_remainder_n, q_remainder_quadrature,
                      radial_field, solve_mode_bvp)
from neckglue.linearized import _mode_grid


@pytest.fixture(scope="module")
def setup4(orbit_cache, budget4):
    orb = orbit_cache(4, 0.1)
    R = neck_radius_from_b(4, 0.1, 0.0)
    r = budget4.r_eps(0.1)
    return orb, R, r


def manufactured(orbit, r, degree, mper=3):
    """w* = rho^deg cos(c (rho - rho_in)) satisfies both solver BCs exactly."""
    t_probe = _mode_grid(orbit, r, 10, mper)
    rho_in = math.exp(-t_probe[-1])
    c = math.pi / (2 * (r - rho_in))

    def w(rho):
        return rho**degree * np.cos(c * (rho - rho_in))

    def wp(rho):
        return (degree * rho ** (degree - 1) * np.cos(c * (rho - rho_in))
                - c * rho**degree * np.sin(c * (rho - rho_in)))

    def wpp(rho):
        s, sn = np.cos(c * (rho - rho_in)), np.sin(c * (rho - rho_in))
        return (degree * (degree - 1) * rho ** (degree - 2) * s
                - 2 * degree * c * rho ** (degree - 1) * sn
                - c * c * rho**degree * s)

    return w, wp, wpp


def mode_rhs(orbit, R, degree, w, wp, wpp):
    n = orbit.dim.n
    lam = degree * (degree + n - 2)

    def f(rho):
        return (wpp(rho) + (n - 1) / rho * wp(rho) - lam / rho**2 * w(rho)
                + potential(orbit, R, rho) * w(rho))

    return f


def test_potential_window_bound(setup4, budget4):
    # in the window r^{1+lam} <= rho <= r the potential times rho^2 is O(r^2)
    orb, R, r = setup4
    lam = 0.2
    rho = np.geomspace(r ** (1 + lam), r, 200)
    vals = potential(orb, R, rho) * rho**2
    assert np.max(vals) < 50.0 * r**2


def test_potential_at_neck_scale(setup4):
    orb, R, _ = setup4
    # u(R) = R^{-1} v(0) = eps/R for n=4, so the potential is 6 (eps/R)^2
    val = potential(orb, R, R)
    assert val == pytest.approx(6.0 * (0.1 / R) ** 2, rel=1e-10)


def test_zero_rhs_gives_zero(setup4, budget4):
    orb, R, r = setup4
    bvp = RadialBVP(orbit=orb, R=R, degree=2, r=r,
                    rhs=lambda rho: np.zeros_like(rho), mu=budget4.mu, n_points=400)
    prof = solve_mode_bvp(bvp)
    assert np.max(np.abs(prof.w_values)) == 0.0


def test_mu_band_validation(setup4, budget4):
    orb, R, r = setup4
    with pytest.raises(ParameterError):
        RadialBVP(orbit=orb, R=R, degree=2, r=r, rhs=lambda rho: rho, mu=2.5)
    with pytest.raises(ParameterError):
        RadialBVP(orbit=orb, R=R, degree=0, r=r, rhs=lambda rho: rho, mu=0.5)
    # high modes allow mu in (-n, 2)
    RadialBVP(orbit=orb, R=R, degree=2, r=r, rhs=lambda rho: rho, mu=-3.0)


@pytest.mark.parametrize("degree", [1, 2, 3])
def test_manufactured_recovery(setup4, budget4, degree):
    orb, R, r = setup4
    w, wp, wpp = manufactured(orb, r, degree)
    bvp = RadialBVP(orbit=orb, R=R, degree=degree, r=r,
                    rhs=mode_rhs(orb, R, degree, w, wp, wpp),
                    mu=budget4.mu, n_points=1500)
    prof = solve_mode_bvp(bvp)
    err = RadialProfile(orbit=orb, degree=degree, r=r, t_grid=prof.t_grid,
                        w_values=prof.w_values - w(prof.rho_grid),
                        discrete_residual=0.0)
    err_f = radial_field(lambda rho: err(rho),
                         fp=lambda rho: err.derivatives(rho)[1],
                         fpp=lambda rho: err.derivatives(rho)[2])
    ref_f = radial_field(w, wp, wpp)
    spec = NormSpec(n=4, k=2, alpha=0.5, mu=budget4.mu, r=r, levels=5, samples=48)
    rel = norm_weighted(err_f, spec) / norm_weighted(ref_f, spec)
    assert rel < 1e-6


def test_mode0_decaying_recovery(setup4, budget4):
    # degree-0 variation of parameters recovers a fast-decaying solution
    orb, R, r = setup4

    def w(rho):
        return rho**2.5

    def wp(rho):
        return 2.5 * rho**1.5

    def wpp(rho):
        return 2.5 * 1.5 * rho**0.5

    bvp = RadialBVP(orbit=orb, R=R, degree=0, r=r,
                    rhs=mode_rhs(orb, R, 0, w, wp, wpp), mu=budget4.mu,
                    n_points=1500)
    prof = solve_mode_bvp(bvp)
    rho = prof.rho_grid
    sel = rho > r * 1e-4
    rel = np.max(np.abs(prof.w_values[sel] - w(rho[sel]))) / np.max(np.abs(w(rho)))
    assert rel < 1e-6


def test_linearity(setup4, budget4):
    orb, R, r = setup4
    w, wp, wpp = manufactured(orb, r, 2)
    f1 = mode_rhs(orb, R, 2, w, wp, wpp)

    def f2(rho):
        return np.sin(5 * rho) * rho ** (budget4.mu - 2)

    kw = dict(orbit=orb, R=R, degree=2, r=r, mu=budget4.mu, n_points=600)
    p1 = solve_mode_bvp(RadialBVP(rhs=f1, **kw))
    p2 = solve_mode_bvp(RadialBVP(rhs=f2, **kw))
    p12 = solve_mode_bvp(RadialBVP(rhs=lambda rho: f1(rho) + f2(rho), **kw))
    assert np.max(np.abs(p1.w_values + p2.w_values - p12.w_values)) < 1e-10


def test_right_inverse_property(setup4, budget4):
    # applying the operator discretely to the solution reproduces the data
    orb, R, r = setup4

    def f(rho):
        return np.exp(-((np.log(rho / r)) ** 2)) * rho ** (budget4.mu - 2)

    bvp = RadialBVP(orbit=orb, R=R, degree=2, r=r, rhs=f, mu=budget4.mu,
                    n_points=2000)
    prof = solve_mode_bvp(bvp)
    assert prof.discrete_residual < 1e-10
    # pointwise on the outer decades, where rho^{-2} amplification of the
    # spline derivatives stays below the data scale
    rho = prof.rho_grid[prof.rho_grid > r * 1e-2][25:]
    w, wp, wpp = prof.derivatives(rho)
    lam = 2 * (2 + 4 - 2)
    lhs = wpp + 3.0 / rho * wp - lam / rho**2 * w + potential(orb, R, rho) * w
    scale = np.max(np.abs(f(rho)))
    assert np.max(np.abs(lhs - f(rho))) < 1e-5 * scale
    # globally in the log-scaled form rho^2 (L w - f)
    rho_all = prof.rho_grid[25:-25]
    w, wp, wpp = prof.derivatives(rho_all)
    lhs_all = (wpp + 3.0 / rho_all * wp - lam / rho_all**2 * w
               + potential(orb, R, rho_all) * w)
    scaled = rho_all**2 * (lhs_all - f(rho_all))
    assert np.max(np.abs(scaled)) < 1e-5 * np.max(np.abs(rho_all**2 * f(rho_all)))


def test_inverse_norm_ratio_sweep(orbit_cache, budget4):
    ratios = []
    for eps in (0.05, 0.1, 0.2):
        orb = orbit_cache(4, eps)
        R = neck_radius_from_b(4, eps, 0.0)
        r = budget4.r_eps(eps)

        def f(rho, r=r):
            return rho ** (budget4.mu - 2) * np.exp(-(np.log(rho / r)) ** 2 / 8.0)

        prof = solve_mode_bvp(RadialBVP(orbit=orb, R=R, degree=2, r=r, rhs=f,
                                        mu=budget4.mu, n_points=1200))
        wf = radial_field(lambda rho: prof(rho),
                          fp=lambda rho: prof.derivatives(rho)[1],
                          fpp=lambda rho: prof.derivatives(rho)[2])
        s2 = NormSpec(n=4, k=2, alpha=0.5, mu=budget4.mu, r=r, levels=5, samples=48)
        s0 = NormSpec(n=4, k=0, alpha=0.5, mu=budget4.mu - 2, r=r, levels=5,
                      samples=48)
        ratios.append(norm_weighted(wf, s2) / norm_weighted(radial_field(f), s0))
    assert max(ratios) < 2.0 * min(ratios)


# ---------------------------------------------------------------------------
# quadratic remainder

def test_q_closed_forms():
    # n=6: Q(v) = 6 v^2 for any positive u0; n=4, u0=1: Q(v) = 6v^2 + 2v^3
    for u0 in (0.5, 1.0, 2.0):
        for v in (-0.3, 0.2, 0.9):
            assert q_remainder_n(6, u0, v) == pytest.approx(6 * v**2, rel=1e-12)
    for v in (-0.5, 0.3, 1.1):
        assert q_remainder_n(4, 1.0, v) == pytest.approx(6 * v**2 + 2 * v**3,
                                                         rel=1e-12)


def test_q_zero():
    assert q_remainder_n(5, 1.3, 0.0) == 0.0


def test_q_field_evaluator_form():
    u0 = Field(lambda x: np.ones(len(x)))
    v = Field(lambda x: 0.3 * np.ones(len(x)))
    val = q_remainder(u0, v, np.array([[1.0, 0, 0, 0]]))
    assert val == pytest.approx(6 * 0.09 + 2 * 0.027, rel=1e-12)


def test_q_crossing_flag():
    assert q_crossing(1.0, -1.5)
    assert not q_crossing(1.0, -0.5)


@given(st.integers(min_value=3, max_value=8),
       st.floats(min_value=0.2, max_value=3.0),
       st.floats(min_value=-1.5, max_value=1.5))
@settings(max_examples=30, deadline=None)
def test_q_quadrature_agreement(n, u0, v):
    closed = q_remainder_n(n, u0, v)
    integral = q_remainder_quadrature(n, u0, v)
    assert closed == pytest.approx(integral, rel=1e-9, abs=1e-10)


def test_q_rejects_nonpositive_base():
    with pytest.raises(ParameterError):
        q_remainder_n(4, 0.0, 0.1)
    with pytest.raises(ParameterError):
        q_remainder_quadrature(4, -1.0, 0.1)


def test_q_stable_at_large_base():
    # scaled evaluation avoids cancellation between the large powers
    val = q_remainder_n(4, 1e10, 1e-15)
    assert val == pytest.approx(6e-20, rel=1e-10)


# ---------------------------------------------------------------------------
# interior Picard

def test_picard_zero_data(setup4, budget4, basis4):
    orb, R, r = setup4
    phi = BoundaryData(basis4, r, {})
    res = picard_interior(orb, R, None, phi, budget4, n_radial=700, basis=basis4)
    assert res.weighted_norm == 0.0
    assert res.relative_residual < 1e-8
    assert res.converged


def test_picard_degree2(setup4, budget4, basis4):
    orb, R, r = setup4
    phi = BoundaryData(basis4, r, {(2, 0): 0.01})
    res = picard_interior(orb, R, None, phi, budget4, n_radial=900, basis=basis4,
                          monitor_residuals=True)
    assert res.converged and res.iterations <= 20
    assert all(c < 0.5 for c in res.contraction_factors[1:])
    assert res.relative_residual < 1e-6
    assert res.aliasing_fraction < 0.01
    assert res.positivity_constant > 0
    # residual history flat or decreasing after the first iterate (floor-gated)
    floor = 2.0 * res.residual_history[-1]
    for k in range(1, len(res.residual_history)):
        assert res.residual_history[k] <= max(
            1.01 * res.residual_history[k - 1], floor)
    # tau envelope reported
    assert np.isfinite(res.tau_reported) and res.tau_reported > 0


def test_picard_kappa_gate(setup4, budget4, basis4):
    orb, R, r = setup4
    phi = BoundaryData(basis4, r, {(2, 0): 5.0})
    with pytest.raises(ParameterError):
        picard_interior(orb, R, None, phi, budget4, basis=basis4)


def test_picard_lipschitz_in_phi(setup4, budget4, basis4):
    orb, R, r = setup4
    base = picard_interior(orb, R, None, BoundaryData(basis4, r, {(2, 0): 0.01}),
                           budget4, n_radial=500, basis=basis4)
    d1 = picard_interior(orb, R, None, BoundaryData(basis4, r, {(2, 0): 0.012}),
                         budget4, n_radial=500, basis=basis4)
    d2 = picard_interior(orb, R, None, BoundaryData(basis4, r, {(2, 0): 0.011}),
                         budget4, n_radial=500, basis=basis4)
    big = np.max(np.abs(d1.expansion.profiles - base.expansion.profiles))
    small = np.max(np.abs(d2.expansion.profiles - base.expansion.profiles))
    assert big / small == pytest.approx(2.0, rel=0.2)


def test_picard_translated_path(setup4, budget4, basis4):
    orb, R, r = setup4
    phi = BoundaryData(basis4, r, {(2, 0): 0.01})
    res = picard_interior(orb, R, [0.02, 0, 0, 0], phi, budget4, n_radial=500,
                          basis=basis4, quad_degree=16)
    assert res.converged
    # relative residual is only defined on the untranslated path
    assert res.relative_residual is None


def test_picard_translated_budget_gate(setup4, budget4, basis4):
    orb, R, r = setup4
    phi = BoundaryData(basis4, r, {(2, 0): 0.01})
    with pytest.raises(ParameterError):
        picard_interior(orb, R, [50.0, 0, 0, 0], phi, budget4, basis=basis4)


# ---------------------------------------------------------------------------
# quadratic-remainder inequality report

def test_remainder_inequality_report(setup4, budget4):
    orb, R, r = setup4

    def mk(c, p):
        return Field(lambda x: c * np.linalg.norm(x, axis=-1) ** p)

    w, v0, v1 = mk(0.05, 2.0), mk(0.001, 1.5), mk(0.002, 1.5)
    rep = check_remainder_inequalities(orb, R, None, w, v0, v1, budget4)
    assert rep.lambda_n == lambda_n(4) == 0.0
    assert np.isfinite(rep.constant_difference)
    assert np.isfinite(rep.constant_single)
    # v1 = v0 makes the left side vanish
    rep0 = check_remainder_inequalities(orb, R, None, w, v0, v0, budget4)
    assert rep0.lhs_difference == 0.0
    # halving the difference halves the left side (first order)
    vh = mk(0.0015, 1.5)
    reph = check_remainder_inequalities(orb, R, None, w, v0, vh, budget4)
    assert rep.lhs_difference / reph.lhs_difference == pytest.approx(2.0, rel=0.1)


def test_remainder_constants_bounded_in_eps(orbit_cache, budget4):
    def mk(c, p):
        return Field(lambda x: c * np.linalg.norm(x, axis=-1) ** p)

    consts = []
    for eps in (0.05, 0.1, 0.2):
        orb = orbit_cache(4, eps)
        R = neck_radius_from_b(4, eps, 0.0)
        rep = check_remainder_inequalities(orb, R, None, mk(0.05, 2.0), mk(0.001, 1.5),
                            mk(0.002, 1.5), budget4)
        consts.append(rep.constant_difference)
    assert max(consts) < 10.0 * min(consts)


def test_lambda_n_values():
    assert lambda_n(3) == 0.0
    assert lambda_n(6) == 0.0
    assert lambda_n(7) == pytest.approx(-0.2)
    assert lambda_n(8) == pytest.approx(-1.0 / 3.0)
