import numpy as np
import pytest
from hypothesis import given, strategies as st

from strategies import hermitian_polynomials, polynomials
from weylsos import fock
from weylsos.fock import FockCutoff, represent, represent_word, variational_upper_bound
from weylsos.polyparse import builtin_quartic, harmonic, schmudgen
from weylsos.weyl import Word, WeylPolynomial, adjoint, degree, normal_form

W = WeylPolynomial
N = W.number()


def test_number_operator_is_diagonal():
    assert np.array_equal(represent(N, FockCutoff(1, 3)).matrix, np.diag([0, 1, 2, 3]).astype(complex))


def test_annihilation_superdiagonal():
    m = represent(W.a(), FockCutoff(1, 2)).matrix
    assert np.allclose(m, np.diag([1, np.sqrt(2)], 1))


def test_word_truncation_block():
    op = represent_word(Word.parse("a ad"), FockCutoff(1, 3))
    assert op.exact_block == 3
    assert np.allclose(np.diag(op.block()), [1, 2, 3])
    assert op.matrix[3, 3] == 0  # the top level loses its partner


def test_polynomial_representation_is_exact_compression():
    op = represent(1 + N, FockCutoff(1, 3))
    assert op.exact_block == 4
    assert np.allclose(np.diag(op.matrix), [1, 2, 3, 4])


def test_dimension_guard():
    with pytest.raises(fock.DimensionError):
        represent(N, FockCutoff(1, 10), max_dim=5)


def test_mode_mismatch():
    with pytest.raises(ValueError):
        represent(N, FockCutoff(2, 2))


class TestVariational:
    @pytest.mark.parametrize("M", [0, 1, 5, 20])
    def test_harmonic_ground_state(self, M):
        assert abs(variational_upper_bound(harmonic(), M) - 0.5) < 1e-10

    def test_shifted_number_square(self):
        p = (N - 1) * (W.a() * W.ad() - 2)
        for M in (1, 4, 12):
            assert abs(variational_upper_bound(p, M)) < 1e-10

    def test_anharmonic_converges(self):
        vals = [variational_upper_bound(builtin_quartic(1), M) for M in (30, 40, 60, 80)]
        assert abs(vals[1] - vals[-1]) < 1e-8
        assert all(x >= y - 1e-12 for x, y in zip(vals, vals[1:]))

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            variational_upper_bound(W.a(), 3)

    @given(hermitian_polynomials(n=1), st.integers(0, 6))
    def test_non_increasing_in_cutoff(self, p, M):
        if not p:
            return
        assert variational_upper_bound(p, M + 1) <= variational_upper_bound(p, M) + 1e-9

    def test_is_a_ritz_value(self):
        # the returned number is <phi|p|phi> for an explicit state, computed at a much larger cutoff
        p = schmudgen() + W.a() ** 2 + W.ad() ** 2
        M = 5
        small = represent(p, FockCutoff(1, M)).matrix
        w, v = np.linalg.eigh(small)
        phi = np.zeros(40, dtype=complex)
        phi[: M + 1] = v[:, 0]
        big = represent(p, FockCutoff(1, 39)).matrix
        assert abs((phi.conj() @ big @ phi).real - variational_upper_bound(p, M)) < 1e-9


class TestOracle:
    def test_examples(self):
        aad = W.a() * W.ad()
        assert fock.oracle_equal(aad, 1 + N)
        assert not fock.oracle_equal(N, aad)
        lhs = normal_form(Word.parse("a a ad ad"), 1)
        assert fock.oracle_equal(lhs, 2 + 4 * N + W.monomial((2,), (2,)))

    @given(polynomials(n=2, complex_coeffs=True), polynomials(n=2, complex_coeffs=True))
    def test_agrees_with_coefficient_equality(self, p, q):
        assert fock.oracle_equal(p, q) == (p == q)


class TestPerturbationBound:
    @pytest.mark.parametrize("r,c,M", [(2, 3, 1), (0, 3, 4), (4, 2, 2)])
    def test_examples(self, r, c, M):
        assert fock.g_expectation_bound_check(r, c, M, trials=100)

    def test_rejects_small_c(self):
        with pytest.raises(ValueError):
            fock.g_expectation_bound_check(1, 1, 1)


@given(polynomials(n=1, complex_coeffs=True), st.integers(2, 6), st.integers(1, 4))
def test_exact_block_stable_under_larger_cutoff(p, M, extra):
    if not p:
        return
    keep = max(M + 1 - degree(p), 0)
    small = represent(p, FockCutoff(1, M)).matrix[:keep, :keep]
    big = represent(p, FockCutoff(1, M + extra)).matrix[:keep, :keep]
    assert np.array_equal(small, big)


@given(polynomials(n=2, complex_coeffs=True))
def test_adjoint_maps_to_conjugate_transpose(p):
    cut = FockCutoff(2, 3)
    assert np.allclose(represent(adjoint(p), cut).matrix, represent(p, cut).matrix.conj().T)


@given(hermitian_polynomials(n=2))
def test_hermitian_input_gives_hermitian_matrix(p):
    m = represent(p, FockCutoff(2, 3)).matrix
    assert np.allclose(m, m.conj().T)
