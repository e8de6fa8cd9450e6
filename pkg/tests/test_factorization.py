from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from odesemigroup.expr import Bindings, ParamRange, equivalent_on_domain, parse
from odesemigroup.factorization import (
    NOT_FACTORIZABLE,
    BesselDomainError,
    GridTooCoarse,
    LadderPair,
    SampledFunction,
    apply_ladder,
    bessel_j,
    bessel_j_derivative,
    bessel_residual,
    canonical_from_potential,
    classify_factorization,
    compose,
    composition_multiple,
    consistency_check,
    first_zero,
    jacobi_anger_coefficient,
    load_families,
    multiple_error,
    multiplier_positive,
    plane_wave,
    plane_wave_bessel_coefficients,
    plane_wave_irrep_check,
    potential_check,
    ratio_spread,
    reconstruction_error,
    to_second_canonical,
    transformation_check,
    transformed_expressions,
    z_second_derivative_fd,
)
from odesemigroup.expr.evaluate import compile_expr
from odesemigroup.lagrangian import el_identically_zero, null_lagrangian
from odesemigroup.ode_algebra import BESSEL_ROWS, OdeOperator, Registry, catalog_get, integrate_across

NAMES = [e.name for e in Registry()]
LO, HI = 0.95, 8.05


def free(B: str, C: str, window=(0.5, 10.0), lam=0.0, params=None):
    return OdeOperator(parse(B), parse(C), params or {}, lam, window)


def bessel_ladder() -> LadderPair:
    cf = to_second_canonical(catalog_get("regular-bessel").operator.eigen_form())
    v = classify_factorization(cf)
    assert v.factorizable and v.family == "inverse-square"
    return v.ladder


def weighted(mu: float) -> SampledFunction:
    return SampledFunction.from_function(lambda x: math.sqrt(x) * bessel_j(mu, x), LO, HI)


# canonical form --------------------------------------------------------------

def test_bessel_eigen_form_potential():
    cf = to_second_canonical(free("1/x", "-mu^2/x^2", lam=1.0, params={"mu": ParamRange.interval(0, 4, 1)}))
    assert equivalent_on_domain(cf.r, parse("-(mu^2 - 1/4)/x^2"), cf.window, params=cf.params)
    assert cf.lam == 1.0


def test_frictionless_operator_is_already_canonical():
    o = free("0", "exp(-x) + 2")
    cf = to_second_canonical(o)
    assert equivalent_on_domain(cf.r, o.C, o.window)
    assert equivalent_on_domain(cf.multiplier, parse("1"), o.window)
    z, _ = transformed_expressions(cf)
    assert equivalent_on_domain(z, parse("y"), o.window)


def test_general_bessel_potential():
    o = catalog_get("general-bessel").operator
    cf = to_second_canonical(o)
    assert equivalent_on_domain(cf.r, parse("beta - (mu^2 + alpha^2/4 - alpha/2)/x^2"), o.window, params=o.params)


@pytest.mark.parametrize("name", NAMES)
def test_canonical_form_invariants(name):
    cf = to_second_canonical(catalog_get(name).operator)
    assert potential_check(cf).passed
    assert multiplier_positive(cf)


@pytest.mark.parametrize("name", NAMES)
def test_reduction_end_to_end(name):
    o = catalog_get(name).operator
    assert transformation_check(to_second_canonical(o), integrate_across(o, 1.0, 0.5)).passed


def test_reduction_against_finite_differences():
    o = catalog_get("spherical-bessel").operator
    traj = integrate_across(o, 1.0, 0.0)
    cf = to_second_canonical(o)
    z_expr, _ = transformed_expressions(cf)
    fz, fr = compile_expr(z_expr), compile_expr(cf.r)
    vals = o.defaults()

    def z(x):
        return fz(Bindings(vals, x, traj.value(x), traj.slope(x)))

    for x in (1.5, 3.0, 6.0, 9.0):
        zpp = z_second_derivative_fd(z, x)
        assert abs(zpp + fr(Bindings(vals, x)) * z(x)) <= 1e-6 * (1 + abs(zpp))


def test_canonical_operator_has_no_null_max_term():
    o = to_second_canonical(catalog_get("spherical-bessel").operator)
    flat = free("0", str(o.r), params=o.params)
    assert el_identically_zero(null_lagrangian(flat, "null_max"))


# classification --------------------------------------------------------------

def test_families_file_lists_three_families():
    assert [f.tag for f in load_families()] == ["constant", "inverse-square", "quadratic"]


def test_inverse_square_with_constant_shift():
    m = {"m": ParamRange.interval(0, 4, 1)}
    v = classify_factorization(canonical_from_potential(parse("-(m^2 - 1/4)/x^2 + 1"), (0.5, 10), m, "m"))
    assert v.factorizable and v.family == "inverse-square"
    assert equivalent_on_domain(v.ladder.k, parse("(m - 1/2)/x"), (0.5, 10), params=m)
    assert v.ladder.chi_at(3) == 0
    assert v.ladder.shift_value == 1
    assert v.consistency.passed


def test_non_factorizable_potential():
    v = classify_factorization(canonical_from_potential(parse("exp(x)/x"), (0.5, 10)))
    assert not v.factorizable
    assert v.reason == NOT_FACTORIZABLE
    assert v.ladder is None


def test_constant_potential():
    v = classify_factorization(canonical_from_potential(parse("5"), (0.5, 10)))
    assert v.factorizable and v.family == "constant"


def test_quadratic_potential():
    m = {"m": ParamRange.interval(0, 4, 1)}
    v = classify_factorization(canonical_from_potential(parse("-4*x^2 + 2*(2*m + 1)"), (-3, 3), m, "m"))
    assert v.factorizable and v.family == "quadratic"
    assert equivalent_on_domain(v.ladder.k, parse("2*x"), (-3, 3))


@pytest.mark.parametrize("row", BESSEL_ROWS, ids=lambda r: r.name)
def test_catalog_bessel_rows_are_inverse_square(row):
    v = classify_factorization(to_second_canonical(catalog_get(row.name).operator.eigen_form()))
    assert v.factorizable and v.family == "inverse-square"


@given(st.sampled_from(["exp(x)/x", "sin(x)", "x^3", "5", "-(m^2 - 1/4)/x^2 + 2", "-9*x^2 + 3*(2*m + 1)",
                        "ln(x)*x", "3/x", "-(m^2 - 1/4)/x^2"]))
@settings(max_examples=20, deadline=None)
def test_factorizable_verdicts_carry_consistent_ladders(text):
    m = {"m": ParamRange.interval(0, 4, 1)}
    r = parse(text)
    window = (0.5, 3.0)
    v = classify_factorization(canonical_from_potential(r, window, m if "m" in text else None, "m" if "m" in text else None))
    if v.factorizable:
        assert v.ladder is not None
        assert consistency_check(v.ladder, window).passed


def test_consistency_identity_rejects_wrong_chi():
    lp = LadderPair(parse("(m - 1/2)/x"), parse("1"), "inverse-square", r=parse("-(m^2 - 1/4)/x^2"))
    assert not consistency_check(lp, (0.5, 10)).passed
    good = LadderPair(parse("(m - 1/2)/x"), parse("0"), "inverse-square", r=parse("-(m^2 - 1/4)/x^2"))
    assert consistency_check(good, (0.5, 10)).passed


# ladder operators ------------------------------------------------------------

@pytest.mark.parametrize("mu", [0, 1, 2])
def test_ladder_raises_weighted_bessel(mu):
    lp = bessel_ladder()
    up = apply_ladder(lp, weighted(mu), mu, "up")
    stats = ratio_spread(up, lambda x: math.sqrt(x) * bessel_j(mu + 1, x), 1.0, 8.0)
    assert stats.spread <= 1e-5
    assert stats.mean == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("mu", [1, 2])
def test_ladder_lowers_weighted_bessel(mu):
    lp = bessel_ladder()
    down = apply_ladder(lp, weighted(mu), mu, "down")
    stats = ratio_spread(down, lambda x: math.sqrt(x) * bessel_j(mu - 1, x), 1.0, 8.0)
    assert stats.spread <= 1e-5


@pytest.mark.parametrize("first", ["up", "down"])
def test_ladder_compositions_are_scalar(first):
    lp = bessel_ladder()
    z = weighted(2)
    expected = composition_multiple(lp, 1.0, 2, first)
    err, _ = multiple_error(compose(lp, z, 2, first), z, expected)
    assert err <= 1e-5


def test_bare_bessel_is_not_a_ladder_image():
    lp = bessel_ladder()
    bare = SampledFunction.from_function(lambda x: bessel_j(1, x), LO, HI)
    stats = ratio_spread(apply_ladder(lp, bare, 1, "up"), lambda x: bessel_j(2, x), 1.0, 8.0)
    assert stats.spread > 1e-2


def test_zero_ladder_differentiates_sine():
    lp = LadderPair(parse("0"), parse("0"), "constant", r=parse("1"))
    z = SampledFunction.from_function(math.sin, 0.0, 3.0)
    up = apply_ladder(lp, z, 0, "up")
    assert np.max(np.abs(up.values + np.cos(up.grid))) <= 1e-7
    stats = ratio_spread(up, math.cos)
    assert stats.spread <= 1e-6


def test_coarse_grid_is_rejected():
    lp = LadderPair(parse("0"), parse("0"), "constant", r=parse("1"))
    z = SampledFunction.from_function(lambda x: math.sin(5 * x), 0.0, 6.0, n=40)
    with pytest.raises(GridTooCoarse):
        apply_ladder(lp, z, 0, "up")


def test_direction_validated():
    lp = LadderPair(parse("0"), parse("0"), "constant", r=parse("1"))
    with pytest.raises(ValueError):
        apply_ladder(lp, weighted(0), 0, "sideways")


# Bessel oracle ---------------------------------------------------------------

def test_bessel_small_argument_limit():
    assert bessel_j(0, 1e-9) == pytest.approx(1.0, abs=1e-15)
    assert abs(bessel_j(1, 1e-9)) <= 1e-9


@pytest.mark.parametrize("x", [1.0, 2.0, 3.0])
def test_bessel_half_order(x):
    assert abs(bessel_j(0.5, x) - math.sqrt(2 / (math.pi * x)) * math.sin(x)) <= 1e-10


def test_bessel_residual_small():
    assert abs(bessel_residual(1, 2.0)) <= 1e-9


def test_bessel_first_zero_of_j0():
    z = first_zero(0, 2.0, 3.0)
    assert z == pytest.approx(2.404825557695773, abs=1e-12)


def test_bessel_domain_limits():
    with pytest.raises(BesselDomainError):
        bessel_j(0, 13.0)
    with pytest.raises(BesselDomainError):
        bessel_j(5.5, 1.0)
    assert bessel_j(12, 10.0) == pytest.approx(0.0633702549701560, abs=1e-12)


@given(st.sampled_from([0, 0.5, 1, 1.5, 2, 3.25, 5]), st.floats(min_value=0.2, max_value=12))
@settings(max_examples=60, deadline=None)
def test_bessel_series_solves_equation(mu, x):
    scale = 1 + abs(bessel_j_derivative(mu, x, 2))
    assert abs(bessel_residual(mu, x)) <= 1e-9 * scale


def test_negative_integer_order_reflection():
    assert bessel_j(-3, 2.0) == pytest.approx(-bessel_j(3, 2.0), rel=1e-15)


# plane waves -----------------------------------------------------------------

def test_plane_wave_half_period():
    k, r = (1.0, 0.0), (0.3, 0.7)
    shifted = plane_wave(k, (r[0] + math.pi, r[1]))
    base = plane_wave(k, r)
    assert shifted[0] == pytest.approx(-base[0], abs=1e-15)
    assert shifted[1] == pytest.approx(-base[1], abs=1e-15)
    assert plane_wave_irrep_check(k, (math.pi, 0.0)).passed


def test_plane_wave_identities_at_sample_points():
    rep = plane_wave_irrep_check((2.0, 1.0), (0.3, -0.2))
    assert rep.passed
    assert len(rep.points) == 64
    assert rep.translation.worst <= 1e-10 and rep.gradient.worst <= 1e-10
    assert rep.convention == "-i grad phi = k phi"


def test_plane_wave_zero_wavevector():
    assert plane_wave((0.0, 0.0), (1.7, -2.0)) == (1.0, 0.0)
    assert plane_wave_irrep_check((0.0, 0.0), (1.0, 1.0)).passed


# Jacobi-Anger ----------------------------------------------------------------

def test_jacobi_anger_coefficient_at_one():
    assert jacobi_anger_coefficient(1.0, 0) == pytest.approx(0.7651976866, abs=1e-10)


def test_jacobi_anger_small_argument():
    c = plane_wave_bessel_coefficients(1e-9, 3)
    assert c[0] == pytest.approx(1.0, abs=1e-15)
    assert all(abs(v) <= 1e-9 for v in c[1:])


def test_jacobi_anger_first_zero():
    assert abs(jacobi_anger_coefficient(2.404825557695773, 0)) <= 1e-8


@pytest.mark.parametrize("x", [0.5, 1.0, 2.5, 4.0, 7.5, 12.0])
def test_jacobi_anger_matches_series(x):
    for n, c in enumerate(plane_wave_bessel_coefficients(x, 8)):
        assert abs(c - bessel_j(n, x)) <= 1e-8


def test_jacobi_anger_order_limit():
    with pytest.raises(ValueError):
        plane_wave_bessel_coefficients(1.0, 13)
    with pytest.raises(ValueError):
        jacobi_anger_coefficient(0.0, 0)


@pytest.mark.parametrize("x", [1.0, 2.0, 3.0, 4.0])
def test_reconstruction_bounded_by_truncation_tail(x):
    tail = 2 * sum(abs(bessel_j(n, x)) for n in range(9, 13))
    assert reconstruction_error(x) <= tail * (1 + 1e-6) + 1e-12



@pytest.mark.parametrize("x", [1.0, 2.0, 3.0, 4.0])
def test_reconstruction_within_desk_tolerance(x):
    # seventeen terms cannot reach 1e-6 past x = 2; see the truncation-tail test above
    assert reconstruction_error(x) <= 1e-6
