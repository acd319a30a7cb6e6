import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from strategies import polynomials, words
from weylsos import fock
from weylsos.polyparse import builtin_quartic
from weylsos.scalars import I, to_scalar
from weylsos.weyl import (
    Letter,
    ModeError,
    Word,
    WeylPolynomial,
    ZeroPolynomialError,
    adjoint,
    antinormal_order,
    commute_block,
    degree,
    eval_coherent,
    l1_norm,
    multiply,
    normal_form,
)

W = WeylPolynomial
N = W.number()
a, ad = W.a(), W.ad()


def two(s, t, c=1):
    return W.monomial(s, t, c)


class TestNormalForm:
    def test_single_swap(self):
        assert normal_form(Word.parse("a1 ad1"), 1) == 1 + N

    def test_already_normal_is_fixed(self):
        assert normal_form(Word.parse("ad1 a1"), 1) == N

    def test_two_mode_sandwich(self):
        got = normal_form(Word.parse("a1 a2 ad2 ad1"), 2)
        want = 1 + two((1, 0), (1, 0)) + two((0, 1), (0, 1)) + two((1, 1), (1, 1))
        assert got == want
        assert fock.oracle_equal(got, want)

    def test_square_block(self):
        assert normal_form(Word.parse("a1 a1 ad1 ad1"), 1) == 2 + 4 * N + two((2,), (2,))

    def test_mode_out_of_range(self):
        with pytest.raises(ModeError):
            normal_form(Word.parse("a3"), 2)

    @given(words())
    def test_word_coefficients_are_nonnegative_integers(self, nw):
        n, w = nw
        for _, c in normal_form(w, n).items():
            assert c == to_scalar(int(complex(c).real)) and complex(c).real > 0

    @given(words())
    def test_matches_truncated_ladder_products(self, nw):
        n, w = nw
        cut = fock.FockCutoff(n, len(w) + 2)
        direct = fock.represent_word(w, cut)
        nf = fock.represent(normal_form(w, n), cut)
        mask = fock.exact_block_mask(cut, direct.exact_block)
        assert np.allclose(direct.matrix[np.ix_(mask, mask)], nf.matrix[np.ix_(mask, mask)], atol=1e-9)

    @given(polynomials(n=2, complex_coeffs=True))
    def test_idempotent_on_normal_polynomials(self, p):
        rebuilt = W.zero(2)
        for (s, t), c in p.items():
            letters = [Letter(i + 1, True) for i in range(2) for _ in range(s[i])]
            letters += [Letter(i + 1, False) for i in range(2) for _ in range(t[i])]
            rebuilt = rebuilt + normal_form(Word(tuple(letters)), 2).scale(c)
        assert rebuilt == p


class TestCommuteBlock:
    def test_examples(self):
        assert commute_block((1,), (1,)) == 1 + N
        assert commute_block((0,), (3,)) == two((3,), (0,))
        assert commute_block((2,), (2,)) == normal_form(Word.parse("a a ad ad"), 1)

    @pytest.mark.parametrize("k", range(9))
    def test_closed_form_coefficients(self, k):
        block = commute_block((k,), (k,))
        for m in range(k + 1):
            want = Fraction(math.factorial(k) ** 2, math.factorial(m) ** 2 * math.factorial(k - m))
            assert block.coefficient((m,), (m,)) == want
        assert l1_norm(block) <= 2**k * math.factorial(k)

    @given(st.tuples(st.integers(0, 3), st.integers(0, 3)), st.tuples(st.integers(0, 3), st.integers(0, 3)))
    def test_agrees_with_rewriting(self, s, u):
        letters = [Letter(i + 1, False) for i in range(2) for _ in range(s[i])]
        letters += [Letter(i + 1, True) for i in range(2) for _ in range(u[i])]
        assert commute_block(s, u) == normal_form(Word(tuple(letters)), 2)

    def test_large_integers_do_not_overflow(self):
        assert commute_block((25,), (25,)).constant_term == math.factorial(25)


class TestMultiply:
    def test_examples(self):
        assert multiply(N, W.one()) == N
        assert multiply(a, ad) == 1 + N
        assert multiply(N, N) == N + two((2,), (2,))

    def test_mode_mismatch(self):
        with pytest.raises(ValueError):
            multiply(W.one(1), W.one(2))

    @given(polynomials(n=2, max_terms=3), polynomials(n=2, max_terms=3), polynomials(n=2, max_terms=3))
    def test_associative(self, p, q, r):
        assert (p * q) * r == p * (q * r)

    @given(polynomials(n=1, complex_coeffs=True), polynomials(n=1, complex_coeffs=True), polynomials(n=1))
    def test_bilinear(self, p, q, r):
        assert (p + q) * r == p * r + q * r
        assert r * (p + q) == r * p + r * q

    @given(polynomials(n=1, complex_coeffs=True), polynomials(n=1, complex_coeffs=True))
    def test_agrees_with_matrix_product(self, p, q):
        cut = fock.FockCutoff(1, 10)
        d = 4  # each polynomial raises or lowers by at most 4 levels
        pm, qm = fock.represent(p, cut).matrix, fock.represent(q, cut).matrix
        pq = fock.represent(p * q, cut).matrix
        keep = slice(0, cut.levels - d)
        assert np.allclose((pm @ qm)[keep, keep], pq[keep, keep], atol=1e-8)


class TestAdjoint:
    def test_examples(self):
        assert adjoint(a) == ad
        assert adjoint(1 + N) == 1 + N
        assert adjoint(two((0,), (2,), to_scalar(2) + 3 * I)) == two((2,), (0,), to_scalar(2) - 3 * I)

    @given(polynomials(n=2, complex_coeffs=True))
    def test_involution(self, p):
        assert adjoint(adjoint(p)) == p

    @given(polynomials(n=2, complex_coeffs=True, max_terms=3), polynomials(n=2, complex_coeffs=True, max_terms=3))
    def test_reverses_products(self, p, q):
        assert adjoint(p * q) == adjoint(q) * adjoint(p)

    @given(polynomials(n=1, complex_coeffs=True))
    def test_hermitian_part(self, p):
        assert (p + adjoint(p)).is_hermitian()

    @given(polynomials(n=1, complex_coeffs=True))
    def test_becomes_conjugate_transpose(self, p):
        cut = fock.FockCutoff(1, 6)
        assert np.allclose(fock.represent(adjoint(p), cut).matrix, fock.represent(p, cut).matrix.conj().T)


class TestDegreeAndNorm:
    def test_degree(self):
        assert degree(W.one()) == 0
        assert degree(N) == 2
        assert degree(builtin_quartic(-1)) == 4

    def test_zero_has_no_degree(self):
        with pytest.raises(ZeroPolynomialError):
            degree(W.zero())

    def test_l1(self):
        assert l1_norm(W.zero()) == 0
        assert l1_norm(1 + N) == 2
        g = Fraction(4, 3) + N.scale(Fraction(1, 3))
        assert l1_norm(g) == Fraction(5, 3)

    @given(polynomials(n=2, complex_coeffs=True), polynomials(n=2, complex_coeffs=True))
    def test_triangle_inequality(self, p, q):
        assert l1_norm(p + q) <= l1_norm(p) + l1_norm(q) + 1e-12


class TestAntinormalOrder:
    def test_examples(self):
        assert antinormal_order(Word.parse("ad2 ad1 ad1 a1")) == Word.parse("a1 ad1 ad1 ad2")
        assert antinormal_order(Word.parse("a")) == Word.parse("a")
        assert antinormal_order(Word.parse("ad a")) == Word.parse("a ad")

    @given(words())
    def test_permutes_letters_into_blocks(self, nw):
        _, w = nw
        out = antinormal_order(w)
        assert sorted(map(str, out)) == sorted(map(str, w))
        flags = [l.daggered for l in out]
        assert flags == sorted(flags)


class TestCoherent:
    def test_examples(self):
        assert eval_coherent(N, [2]) == pytest.approx(4)
        assert eval_coherent(W.one(), [0.3 - 2j]) == pytest.approx(1)
        assert eval_coherent(1 + N, [1 + 1j]) == pytest.approx(3)

    @given(polynomials(n=2, complex_coeffs=True), polynomials(n=2, complex_coeffs=True))
    def test_distinguishes_polynomials(self, p, q):
        rng = np.random.default_rng(1)
        pts = rng.normal(size=(12, 2)) + 1j * rng.normal(size=(12, 2))
        same = all(abs(eval_coherent(p - q, z)) < 1e-9 for z in pts)
        assert same == (p == q)

    @given(polynomials(n=1, complex_coeffs=True))
    def test_hermitian_values_are_real(self, p):
        h = p + adjoint(p)
        assert abs(eval_coherent(h, [0.7 - 1.3j]).imag) < 1e-9


def test_text_is_graded_lex():
    assert (1 + N + a * a).to_text() == "1 + a^2 + ad*a"
