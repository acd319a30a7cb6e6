"""Hypothesis strategies shared across test modules."""


from hypothesis import strategies as st

from weylsos.scalars import I, to_scalar
from weylsos.weyl import Letter, Word, WeylPolynomial

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=6)


def words(max_modes=2, max_len=8):
    @st.composite
    def build(draw):
        n = draw(st.integers(1, max_modes))
        letters = draw(st.lists(st.builds(Letter, st.integers(1, n), st.booleans()), max_size=max_len))
        return n, Word(tuple(letters))

    return build()


def exponents(n, max_exp=2):
    return st.tuples(*[st.integers(0, max_exp)] * n)


def polynomials(n=1, max_terms=4, max_exp=2, complex_coeffs=False):
    coeff = rationals
    if complex_coeffs:
        coeff = st.builds(lambda re, im: to_scalar(re) + to_scalar(im) * I, rationals, rationals)
    return st.dictionaries(st.tuples(exponents(n, max_exp), exponents(n, max_exp)), coeff, max_size=max_terms).map(
        lambda d: WeylPolynomial(n, d)
    )


def hermitian_polynomials(n=1, max_terms=3, max_exp=2):
    return polynomials(n, max_terms, max_exp, complex_coeffs=True).map(lambda p: p + p.adjoint())
