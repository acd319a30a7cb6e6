from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from strategies import polynomials
from weylsos import fock
from weylsos.polyparse import (
    Gen,
    ParseError,
    Prod,
    builtin_quartic,
    dagger_ast,
    harmonic,
    lower,
    parse,
    parse_poly,
    schmudgen,
)
from weylsos.weyl import WeylPolynomial, adjoint, degree

W = WeylPolynomial
N = W.number()


def test_juxtaposed_product_keeps_order():
    ast = parse("a*ad", 1)
    assert ast.root == Prod((Gen("a", 1), Gen("ad", 1)))


def test_quartic_family_parses_with_binding():
    ast = parse("0.5*p^2 + m*x^2 + x^4", 1, {"m": -1})
    assert lower(ast) == builtin_quartic(-1)


def test_schmudgen_source():
    p = parse_poly("(ad*a - 1)*(a*ad - 2)")
    assert p == (N - 1) * (N - 1)
    assert schmudgen() == (N - 1) * (N - 2)


def test_position_squared():
    x2 = parse_poly("x^2")
    assert x2 == Fraction(1, 2) + N + (W.a() ** 2 + W.ad() ** 2).scale(Fraction(1, 2))


def test_harmonic_identity():
    assert parse_poly("0.5*p^2 + 0.5*x^2") == N + Fraction(1, 2)
    assert harmonic() == N + Fraction(1, 2)


def test_number_operator_is_unchanged():
    assert parse_poly("ad*a") == N


def test_precedence_power_over_juxtaposition_over_sum():
    assert parse_poly("2 a^2 + 1") == W.a() ** 2 * 2 + 1
    assert parse_poly("-a ad") == -(1 + N)


def test_modes_and_imaginary_literals():
    p = parse_poly("1.5i * ad[2] a[1]", 2)
    assert p.coefficient((0, 1), (1, 0)) == parse_poly("3i/2", 2).constant_term


@pytest.mark.parametrize("src", ["a[3]", "a^-1", "a^1.5", "a $ b", "(a", "a +"])
def test_rejects_bad_input(src):
    with pytest.raises(ParseError) as info:
        parse(src, 2)
    assert info.value.position >= 0


def test_lex_error_reports_position():
    with pytest.raises(ParseError) as info:
        parse("ad*a + $", 1)
    assert info.value.position == 7


def test_non_commutativity():
    assert parse_poly("a*ad") - parse_poly("ad*a") == W.one()


@pytest.mark.parametrize("m", [0, 1, -1, 0.25])
def test_quartic_family(m):
    e = builtin_quartic(m)
    assert e.is_hermitian() and e.is_real and degree(e) == 4
    assert e == parse_poly("0.5*p^2 + x^4") + parse_poly("x^2").scale(Fraction(str(m)))


def test_quartic_matches_position_matrix():
    # oracle: build x from ladder matrices and form p^2/2 - x^2 + x^4 numerically
    cut = fock.FockCutoff(1, 30)
    a = fock.ladder(1, False, cut)
    x = (a + a.T) / 2**0.5
    p = (a - a.T) / (1j * 2**0.5)
    h = 0.5 * p @ p - x @ x + x @ x @ x @ x
    keep = slice(0, 26)
    assert abs(fock.represent(builtin_quartic(-1), cut).matrix[keep, keep] - h[keep, keep]).max() < 1e-9


@given(polynomials(n=2, complex_coeffs=True))
def test_serialization_round_trip(p):
    assert parse_poly(p.to_text(), 2) == p


exprs = st.recursive(
    st.sampled_from(["a", "ad", "x", "p", "a[2]", "ad[2]", "2", "0.5i", "3"]),
    lambda inner: st.one_of(
        st.tuples(inner, inner).map(lambda t: f"({t[0]} + {t[1]})"),
        st.tuples(inner, inner).map(lambda t: f"({t[0]} - {t[1]})"),
        st.tuples(inner, inner).map(lambda t: f"{t[0]}*{t[1]}"),
        st.tuples(inner, st.integers(0, 2)).map(lambda t: f"({t[0]})^{t[1]}"),
    ),
    max_leaves=6,
)


@given(exprs)
def test_lowering_commutes_with_adjoint(src):
    ast = parse(src, 2)
    assert lower(dagger_ast(ast)) == adjoint(lower(ast))


@given(exprs)
def test_hermitian_generators_give_hermitian_symmetrization(src):
    p = parse_poly(src, 2)
    assert (p + adjoint(p)).is_hermitian()
