from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from odesemigroup.expr import Bindings, equivalent_on_domain, parse
from odesemigroup.expr.evaluate import compile_expr
from odesemigroup.lagrangian import (
    STANDARD_PATHS,
    VBAR,
    DegeneratePairError,
    GaugeFunction,
    TestPath as SmoothPath,
    VanishingAuxiliaryError,
    auxiliary_solution,
    closure_check,
    el_agreement,
    el_battery,
    el_identically_zero,
    el_on_solution,
    envelope_standard,
    euler_lagrange_residual,
    gauge_check,
    gauge_function,
    helmholtz_third_condition,
    independent_solution,
    lagrangian,
    nonstandard_lagrangian,
    null_lagrangian,
    ode_form,
    riccati_residual,
    riccati_solution,
    standard_lagrangian,
    weighted_ode_form,
)
from odesemigroup.ode_algebra import OdeOperator, Registry, catalog_get, general_bessel, integrate_across

ALPHA2 = general_bessel(2, 1)
NAMES = [e.name for e in Registry()]


def op(B: str, C: str, params=None, window=(0.5, 10.0)):
    return OdeOperator(parse(B), parse(C), params or {}, 0.0, window)


def same(e1, e2, o):
    return equivalent_on_domain(e1, parse(e2) if isinstance(e2, str) else e2, o.window, params=o.params)


# envelopes -------------------------------------------------------------------

def test_envelope_of_alpha_over_x_is_power():
    o = catalog_get("general-bessel").operator
    assert same(envelope_standard(o), "x^alpha", o)


def test_envelope_of_zero_is_one():
    o = catalog_get("harmonic").operator
    assert same(envelope_standard(o), "1", o)


def test_legendre_envelope_is_one_minus_x_squared():
    o = catalog_get("regular-legendre").operator
    e = compile_expr(envelope_standard(o))
    for x in np.linspace(-0.85, 0.85, 9):
        v = e(Bindings(o.defaults(), float(x)))
        assert v > 0
        assert v == pytest.approx(1 - x * x, rel=1e-9)


# standard and null Lagrangians -----------------------------------------------

def test_general_bessel_minimal_body():
    o = catalog_get("general-bessel").operator
    assert same(standard_lagrangian(o).body, "1/2*(y'^2 - (beta - mu^2/x^2)*y^2)*x^alpha", o)


@pytest.mark.parametrize("kind", ["minimal", "middle", "maximal"])
def test_identity_kinds_reduce_to_half_slope_squared(kind):
    o = catalog_get("identity").operator
    assert same(standard_lagrangian(o, kind, a2=0).body, "1/2*y'^2", o)


def test_general_bessel_maximal_adds_alpha_term():
    o = catalog_get("general-bessel").operator
    extra = "alpha/(2*x)*(y' + (alpha - 1)/(2*x)*y)*x^alpha*y"
    assert same(standard_lagrangian(o, "maximal").body, f"1/2*(y'^2 - (beta - mu^2/x^2)*y^2)*x^alpha + {extra}", o)
    assert same(null_lagrangian(o, "null_max").body, extra, o)


def test_null_mid_body():
    o = catalog_get("regular-bessel").operator
    assert same(null_lagrangian(o).body, "1/2*y'*y", o)


def test_null_max_vanishes_without_friction():
    o = catalog_get("harmonic").operator
    assert same(null_lagrangian(o, "null_max").body, "0", o)


def test_kind_and_a1_validated():
    o = catalog_get("harmonic").operator
    with pytest.raises(ValueError):
        standard_lagrangian(o, "null_mid")
    with pytest.raises(ValueError):
        standard_lagrangian(o, a1=0)
    with pytest.raises(ValueError):
        lagrangian(o, "largest")


@pytest.mark.parametrize("name", NAMES)
@pytest.mark.parametrize("kind", ["minimal", "middle", "maximal"])
def test_closure_constraints(name, kind):
    assert closure_check(standard_lagrangian(catalog_get(name).operator, kind)).passed


@pytest.mark.parametrize("name", NAMES)
def test_null_bodies_independent_of_c(name):
    o = catalog_get(name).operator
    shifted = OdeOperator(o.B, parse(f"({o.C}) + 7*x^2 + 3"), o.params, o.lam, o.window)
    for kind in ("null_mid", "null_max"):
        assert same(null_lagrangian(o, kind).body, null_lagrangian(shifted, kind).body, o)


@pytest.mark.parametrize("name", NAMES)
def test_standard_lagrangians_agree(name):
    o = catalog_get(name).operator
    specs = [standard_lagrangian(o, k) for k in ("minimal", "middle", "maximal")]
    assert el_agreement(specs).passed


# gauge functions -------------------------------------------------------------

def test_null_mid_gauge_is_quarter_y_squared():
    o = catalog_get("harmonic").operator
    g = gauge_function(null_lagrangian(o))
    assert same(g.phi, "y^2/4", o)


def test_null_max_gauge_for_general_bessel():
    o = catalog_get("general-bessel").operator
    g = gauge_function(null_lagrangian(o, "null_max"))
    assert same(g.phi, "alpha/4*x^(alpha - 1)*y^2", o)


def test_null_max_gauge_without_friction_is_zero():
    o = catalog_get("harmonic").operator
    assert same(gauge_function(null_lagrangian(o, "null_max")).phi, "0", o)


def test_gauge_check_examples():
    o = catalog_get("harmonic").operator
    spec = null_lagrangian(o)
    assert gauge_check(gauge_function(spec), spec, [SmoothPath.of("sin(x)")]).passed
    spec2 = null_lagrangian(ALPHA2, "null_max")
    assert gauge_check(gauge_function(spec2), spec2, [SmoothPath.of("x^2 + 1")]).passed


def test_gauge_check_detects_planted_offset():
    o = catalog_get("harmonic").operator
    planted = null_lagrangian(o)
    planted = type(planted)("null_mid", parse("1/2*y'*y + 1/100"), o)
    r = gauge_check(GaugeFunction(parse("y^2/4"), "mid-min"), planted, [SmoothPath.of("sin(x)")])
    assert not r.passed
    assert r.witness["offset"] == pytest.approx(-0.01, abs=1e-12)


def test_gauge_needs_null_kind():
    with pytest.raises(ValueError):
        gauge_function(standard_lagrangian(catalog_get("harmonic").operator))


@pytest.mark.parametrize("name", NAMES)
def test_gauge_holds_for_every_operator(name):
    o = catalog_get(name).operator
    for kind in ("null_mid", "null_max"):
        spec = null_lagrangian(o, kind)
        assert gauge_check(gauge_function(spec), spec).passed


# Euler-Lagrange --------------------------------------------------------------

def test_minimal_harmonic_off_solution():
    o = catalog_get("harmonic").operator
    spec = standard_lagrangian(o)
    assert euler_lagrange_residual(spec, SmoothPath.of("x^2"), 1.0) == pytest.approx(3.0, abs=1e-12)
    assert not el_identically_zero(spec)


def test_null_kinds_vanish_identically():
    assert el_identically_zero(null_lagrangian(catalog_get("harmonic").operator))
    assert el_identically_zero(null_lagrangian(ALPHA2, "null_max"))
    assert len(STANDARD_PATHS) >= 8


@pytest.mark.parametrize("name", NAMES)
def test_minimal_residual_is_envelope_times_equation(name):
    o = catalog_get(name).operator
    spec = standard_lagrangian(o)
    es = compile_expr(envelope_standard(o))
    eq = compile_expr(ode_form(o))
    vals = o.defaults()
    for p in STANDARD_PATHS[:4]:
        for x in np.linspace(*o.window, 7)[1:-1]:
            y, yp, ypp = (p.derivative(x, k) for k in range(3))
            expect = es(Bindings(vals, x)) * eq(Bindings(vals, x, y, yp, ypp))
            assert euler_lagrange_residual(spec, p, x) == pytest.approx(expect, rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("name", NAMES)
def test_minimal_residual_vanishes_on_solutions(name):
    o = catalog_get(name).operator
    traj = integrate_across(o, 1.0, 0.5)
    assert el_on_solution(standard_lagrangian(o), traj).passed


@given(st.floats(min_value=0.1, max_value=50))
@settings(max_examples=20, deadline=None)
def test_scaling_covariance(c):
    o = catalog_get("spherical-bessel").operator
    p = SmoothPath.of("x*sin(x)")
    r1 = euler_lagrange_residual(standard_lagrangian(o), p, 2.3)
    rc = euler_lagrange_residual(standard_lagrangian(o, a1=c), p, 2.3)
    assert rc == pytest.approx(c * r1, rel=1e-12)


# Helmholtz -------------------------------------------------------------------

def test_helmholtz_examples():
    o = catalog_get("regular-bessel").operator
    assert helmholtz_third_condition(weighted_ode_form(o), o.window, o.params).passed
    assert not helmholtz_third_condition(parse("y'' + 1/x*y' + y")).passed
    assert helmholtz_third_condition(parse("y'' + y")).passed


@pytest.mark.parametrize("name", NAMES)
def test_helmholtz_dichotomy(name):
    o = catalog_get(name).operator
    assert helmholtz_third_condition(weighted_ode_form(o), o.window, o.params).passed
    plain = helmholtz_third_condition(ode_form(o), o.window, o.params).passed
    assert plain == same(o.B, "0", o)


# Riccati ---------------------------------------------------------------------

UNIT = op("0", "1", window=(0.3, 3.0))


def test_riccati_cotangent_witness():
    for x in np.linspace(0.5, 2.5, 9):
        assert abs(riccati_residual(parse("3*cos(x)/sin(x)"), UNIT, x)) <= 1e-10
    assert riccati_residual(parse("cos(x)/sin(x)"), UNIT, 1.0) != pytest.approx(0, abs=1e-3)


def test_riccati_identity_zero():
    assert riccati_residual(parse("0"), catalog_get("identity").operator, 1.5) == 0


def test_riccati_solution_from_sine():
    r = riccati_solution(UNIT, SmoothPath.of("sin(x)"))
    assert r(1.0) == pytest.approx(3 / math.tan(1.0), rel=1e-12)
    assert r.check().passed


def test_riccati_solution_identity_constant():
    r = riccati_solution(catalog_get("identity").operator, SmoothPath.of("1"))
    assert r(2.0) == 0


def test_riccati_half_order_bessel():
    o = catalog_get("regular-bessel").operator.with_params(mu=0.5).with_window(1.0, 3.0)
    vbar = auxiliary_solution(o, initial=(math.sin(1.0), math.cos(1.0) - 0.5 * math.sin(1.0)))
    assert vbar.span == (1.0, 3.0)
    res = riccati_solution(o, vbar).check()
    assert res.passed and res.worst <= 1e-6


def test_riccati_rejects_zero_crossing():
    with pytest.raises(VanishingAuxiliaryError):
        riccati_solution(op("0", "1", window=(0.5, 4.0)), SmoothPath.of("sin(x)"))


@pytest.mark.parametrize("name", NAMES)
def test_riccati_property_on_catalog(name):
    o = catalog_get(name).operator
    assert riccati_solution(o, auxiliary_solution(o)).check().passed


# nonstandard -----------------------------------------------------------------

def test_nonstandard_general_bessel_body():
    o = catalog_get("general-bessel").operator
    vbar = SmoothPath.of("x")
    got = compile_expr(nonstandard_lagrangian(o, vbar).body)
    want = compile_expr(parse("x^(-2*alpha)/((y' - y/x)*x^3)"))
    for x in (0.7, 2.0, 5.5):
        b = Bindings(o.defaults(), x, 1.3, -0.4, aux={VBAR: vbar})
        assert got(b) == pytest.approx(want(b), rel=1e-12)


def test_nonstandard_sine_cosine_pair():
    vbar = SmoothPath.of("sin(x)")
    spec = nonstandard_lagrangian(UNIT, vbar)
    body = compile_expr(spec.body)
    for x in (0.5, 1.0, 2.5):
        # denominator (y' vbar - y vbar') vbar^2 with y = cos x is -sin^2 x
        b = Bindings({}, x, math.cos(x), -math.sin(x), aux={VBAR: vbar})
        assert body(b) == pytest.approx(-1 / math.sin(x) ** 2, rel=1e-12)
    r = el_battery(spec, [SmoothPath.of("cos(x)")], tol=1e-5)
    assert r.passed and r.worst <= 1e-10


def test_nonstandard_degenerate_pair():
    spec = nonstandard_lagrangian(UNIT, SmoothPath.of("sin(x)"))
    with pytest.raises(DegeneratePairError):
        euler_lagrange_residual(spec, SmoothPath.of("sin(x)"), 1.0)


def test_nonstandard_on_integrated_bessel():
    o = catalog_get("regular-bessel").operator
    vbar = auxiliary_solution(o)
    y = independent_solution(o, vbar)
    assert el_on_solution(nonstandard_lagrangian(o, vbar), y, tol=1e-5).passed


def test_nonstandard_needs_auxiliary():
    with pytest.raises(ValueError):
        nonstandard_lagrangian(UNIT, None)
