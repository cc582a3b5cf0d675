import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from chaplygin import (
    ChaplyginEos,
    DomainError,
    ShapeState,
    VariantId,
    exponents_for,
    pressure,
    reconstruct_fields,
)

admissible_n = st.floats(min_value=-1.0, max_value=1.0, exclude_min=True,
                         allow_nan=False)
variants = st.sampled_from(list(VariantId))


@pytest.mark.parametrize("A, n, rho, expected", [
    (1.0, 1.0, 1.0, -1.0),
    (1.0, 0.0, 5.0, -1.0),
    (2.0, 0.5, 4.0, -1.0),
])
def test_pressure_examples(A, n, rho, expected):
    assert pressure(ChaplyginEos(A, n), rho) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("rho", [0.0, -1.0])
def test_pressure_needs_positive_density(rho):
    with pytest.raises(DomainError):
        pressure(ChaplyginEos(1.0, 1.0), rho)


@given(n=st.one_of(st.just(0.0), st.floats(-0.999, -1e-3), st.floats(1e-3, 1.0)),
       rho=st.floats(0.01, 100.0), factor=st.floats(1.01, 10.0))
def test_pressure_monotonicity_follows_sign_of_n(n, rho, factor):
    eos = ChaplyginEos(1.5, n)
    p0, p1 = pressure(eos, rho), pressure(eos, rho * factor)
    assert p0 < 0 and p1 < 0
    if n > 0:
        assert p1 > p0
    elif n < 0:
        assert p1 < p0
    else:
        assert p1 == p0


@pytest.mark.parametrize("A, n", [(0.0, 1.0), (-1.0, 0.5), (1.0, -1.0), (1.0, 1.5),
                                  (1.0, -2.0), (math.nan, 0.5)])
def test_eos_rejects_out_of_range(A, n):
    with pytest.raises(DomainError):
        ChaplyginEos(A, n)


def test_eos_accepts_closed_upper_bound():
    assert ChaplyginEos(1.0, 1.0).n == 1.0


def test_exponent_examples():
    e = exponents_for("I", 1)
    assert (e.alpha, e.beta, e.gamma, e.delta) == (Fraction(1, 2), Fraction(1, 2),
                                                   Fraction(-1, 2), 1)
    e = exponents_for(VariantId.III, 0.3)
    assert (e.alpha, e.beta, e.gamma, e.delta) == (0, 1, 0, 0)
    e = exponents_for("I", 0)
    assert e.gamma == -1
    assert e.variant is VariantId.I


@pytest.mark.parametrize("n", [-1.0, -1.5, 1.0000001, math.inf])
def test_exponents_reject_bad_n(n):
    with pytest.raises(DomainError):
        exponents_for("I", n)


def test_exponents_are_exact_for_decimal_n():
    # gamma = -1/(n+1) for n = 0.1 is exactly -10/11
    assert exponents_for("I", 0.1).gamma == Fraction(-10, 11)


@given(variant=variants, n=admissible_n)
def test_alpha_plus_beta_is_one(variant, n):
    e = exponents_for(variant, n)
    assert e.alpha + e.beta == 1


def test_unknown_variant():
    with pytest.raises(DomainError):
        VariantId.parse("IV")


def test_reconstruct_examples():
    iii = exponents_for("III", 1.0)
    assert reconstruct_fields(ShapeState(2.0, 3.0, 1.0, 0.0, 0.0), iii, 1.0) == (3, 1, 0, 2)
    ii = exponents_for("II", 0.5)
    u, rho, phi, r = reconstruct_fields(ShapeState(1.0, 1.0, 1.0, 1.0, 0.0), ii, 2.0)
    assert (u, rho, phi, r) == (0.5, 2.0, 0.25, 1.0)
    for v in VariantId:
        e = exponents_for(v, 0.5)
        u, rho, phi, r = reconstruct_fields(ShapeState(1.0, 0.0, 0.0, 0.0, 0.0), e, 5.0)
        assert (u, rho, phi) == (0, 0, 0)
        assert r == pytest.approx(5.0 ** float(e.beta), rel=1e-15)


def test_reconstruct_needs_positive_time():
    with pytest.raises(DomainError):
        reconstruct_fields(ShapeState(1.0, 0.0, 1.0), exponents_for("III", 1.0), 0.0)


def test_reconstruct_reports_overflow_as_domain_error():
    e = exponents_for("I", -0.9999)             # gamma = -10000
    with pytest.raises(DomainError):
        reconstruct_fields(ShapeState(1.0, 0.0, 1.0), e, 10.0)


def test_shape_state_needs_positive_eta():
    with pytest.raises(DomainError):
        ShapeState(0.0, 0.0, 1.0)


@given(variant=variants, n=admissible_n, eta=st.floats(1e-3, 1e3),
       f=st.floats(-5, 5), g=st.floats(0.01, 5), h=st.floats(-5, 5))
def test_reconstruct_at_unit_time_is_identity(variant, n, eta, f, g, h):
    u, rho, phi, r = reconstruct_fields(ShapeState(eta, f, g, h), exponents_for(variant, n), 1.0)
    assert (u, rho, phi, r) == (f, g, h, eta)


@given(variant=variants, n=st.floats(-0.9, 1.0), eta=st.floats(1e-3, 1e3),
       t=st.floats(1e-2, 1e2))
def test_eta_round_trip(variant, n, eta, t):
    e = exponents_for(variant, n)
    _, _, _, r = reconstruct_fields(ShapeState(eta, 0.0, 1.0), e, t)
    back = r * t ** (-float(e.beta))
    assert back == pytest.approx(eta, rel=1e-14)
