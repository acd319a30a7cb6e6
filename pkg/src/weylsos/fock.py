"""Truncated Schrödinger (Fock) representation.

The number basis of each mode is cut at occupancy ``M``.  A normal-ordered
monomial ``(a*)^s a^t`` never visits a level above ``max(m, m')`` on its way
from ``|m>`` to ``|m'>``, so representing a polynomial term by term from its
normal form gives the exact compression ``P_M pi(p) P_M``.  Words, on the other
hand, are represented as products of truncated ladder matrices, where levels
near the cutoff are corrupted; ``exact_block`` records how much survives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .weyl import Word, WeylPolynomial, degree, eval_coherent

__all__ = [
    "FockCutoff",
    "TruncatedOperator",
    "DimensionError",
    "represent",
    "represent_word",
    "ladder",
    "variational_upper_bound",
    "oracle_equal",
    "g_expectation_bound_check",
    "exact_block_mask",
    "MAX_DIM",
]

MAX_DIM = 4096


class DimensionError(ValueError):
    """Truncated space would exceed the configured dimension cap."""


@dataclass(frozen=True)
class FockCutoff:
    n_modes: int
    M: int

    def __post_init__(self):
        if self.M < 0:
            raise ValueError("cutoff M must be >= 0")
        if self.n_modes < 1:
            raise ValueError("n_modes must be positive")

    @property
    def levels(self) -> int:
        return self.M + 1

    @property
    def dim(self) -> int:
        return self.levels**self.n_modes


@dataclass(frozen=True)
class TruncatedOperator:
    cutoff: FockCutoff
    matrix: np.ndarray
    exact_block: int

    def block(self) -> np.ndarray:
        """Sub-matrix on basis states with every occupancy below ``exact_block``."""
        mask = exact_block_mask(self.cutoff, self.exact_block)
        return self.matrix[np.ix_(mask, mask)]


def _guard(cutoff: FockCutoff, max_dim: int) -> None:
    if cutoff.dim > max_dim:
        raise DimensionError(f"Fock dimension {cutoff.dim} exceeds cap {max_dim}")


def exact_block_mask(cutoff: FockCutoff, block: int) -> np.ndarray:
    """Boolean mask of basis states ``|m_1..m_n>`` with all ``m_i < block``.

    Basis ordering is ``kron`` order, mode 1 most significant.
    """
    occ = np.indices((cutoff.levels,) * cutoff.n_modes).reshape(cutoff.n_modes, -1)
    return np.all(occ < block, axis=0)


@lru_cache(maxsize=256)
def _mode_term(s: int, t: int, M: int) -> np.ndarray:
    """Matrix of (a*)^s a^t on one mode, levels 0..M; exact compression."""
    out = np.zeros((M + 1, M + 1))
    for m in range(t, M + 1):
        mp = m - t + s
        if mp > M:
            break
        out[mp, m] = math.sqrt(math.perm(m, t) * math.perm(mp, s))
    out.setflags(write=False)
    return out


def _kron_all(mats) -> np.ndarray:
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def represent(p: WeylPolynomial, cutoff: FockCutoff, max_dim: int = MAX_DIM) -> TruncatedOperator:
    """Matrix of ``P_M pi(p) P_M`` in the number basis.

    Built term by term from the normal form, so every retained entry equals the
    untruncated matrix element and ``exact_block`` is the whole space.
    """
    if p.n_modes != cutoff.n_modes:
        raise ValueError("mode-count mismatch between polynomial and cutoff")
    _guard(cutoff, max_dim)
    dim = cutoff.dim
    mat = np.zeros((dim, dim), dtype=complex)
    for (s, t), c in p.terms.items():
        mat += complex(c) * _kron_all([_mode_term(si, ti, cutoff.M) for si, ti in zip(s, t)])
    return TruncatedOperator(cutoff, mat, cutoff.levels)


def ladder(mode: int, daggered: bool, cutoff: FockCutoff) -> np.ndarray:
    """Truncated ``a_mode`` (or its adjoint) on the full tensor space."""
    lvl = cutoff.levels
    single = np.diag(np.sqrt(np.arange(1, lvl, dtype=float)), 1)
    if daggered:
        single = single.T
    mats = [np.eye(lvl)] * cutoff.n_modes
    mats = list(mats)
    mats[mode - 1] = single
    return _kron_all(mats)


def _max_rise(word: Word) -> int:
    # operators act right to left; track the highest excursion above the start level, per mode
    worst = 0
    for mode in {l.mode for l in word}:
        level = peak = 0
        for letter in reversed(word.letters):
            if letter.mode != mode:
                continue
            level += 1 if letter.daggered else -1
            peak = max(peak, level)
        worst = max(worst, peak)
    return worst


def represent_word(word: Word, cutoff: FockCutoff, max_dim: int = MAX_DIM) -> TruncatedOperator:
    """Product of truncated ladder matrices; exact only on the leading block."""
    _guard(cutoff, max_dim)
    mat = np.eye(cutoff.dim, dtype=complex)
    for letter in word:
        if letter.mode > cutoff.n_modes:
            raise ValueError(f"mode {letter.mode} outside 1..{cutoff.n_modes}")
        mat = mat @ ladder(letter.mode, letter.daggered, cutoff)
    block = max(cutoff.levels - _max_rise(word), 0)
    return TruncatedOperator(cutoff, mat, block)


def variational_upper_bound(p: WeylPolynomial, M: int, max_dim: int = MAX_DIM) -> float:
    """Lowest Ritz value of ``p`` on states with every occupancy <= M.

    This is the expectation of ``pi(p)`` in a genuine normalized state, hence an
    upper bound on the ground energy, and it can only decrease as M grows.
    """
    if not p.is_hermitian(tol=1e-12):
        raise ValueError("variational bound needs a hermitian polynomial")
    d = degree(p) if p else 0
    # build with headroom and compress; identical to the direct compression, kept as a guard
    big = represent(p, FockCutoff(p.n_modes, M + d), max_dim=max(max_dim, (M + d + 1) ** p.n_modes))
    mask = exact_block_mask(big.cutoff, M + 1)
    h = big.matrix[np.ix_(mask, mask)]
    h = 0.5 * (h + h.conj().T)
    return float(np.linalg.eigvalsh(h)[0])


def oracle_equal(p: WeylPolynomial, q: WeylPolynomial, points: int = 20, seed: int = 0, rtol: float = 1e-10) -> bool:
    """Independent equality check via matrix elements and coherent-state values."""
    if p.n_modes != q.n_modes:
        raise ValueError("mode-count mismatch")
    diff = p - q
    d = max(degree(p) if p else 0, degree(q) if q else 0)
    cutoff = FockCutoff(p.n_modes, d + 6)
    op = represent(diff, cutoff, max_dim=max(MAX_DIM, cutoff.dim))
    scale = max(1.0, float(np.abs(represent(p, cutoff, max_dim=max(MAX_DIM, cutoff.dim)).matrix).max(initial=0.0)))
    if np.abs(op.block()).max(initial=0.0) > rtol * scale:
        return False
    rng = np.random.default_rng(seed)
    for _ in range(points):
        alpha = rng.normal(size=p.n_modes) + 1j * rng.normal(size=p.n_modes)
        vp, vq = eval_coherent(p, alpha), eval_coherent(q, alpha)
        if abs(vp - vq) > rtol * max(1.0, abs(vp), abs(vq)):
            return False
    return True


def g_expectation_bound_check(r: int, c: float, M: int, trials: int = 100, n_modes: int = 1, seed: int = 0) -> bool:
    """Check ``<Phi|g^r_c|Phi> <= (c/(c-1))^(M+1)`` on random states with occupancies <= M."""
    from .moments import perturbation_polynomial

    if c <= 1:
        raise ValueError("c must exceed 1")
    g = perturbation_polynomial(r, c, n_modes)
    cutoff = FockCutoff(n_modes, M)
    mat = represent(g, cutoff).matrix
    bound = (c / (c - 1)) ** (M + 1)
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        phi = rng.normal(size=cutoff.dim) + 1j * rng.normal(size=cutoff.dim)
        phi /= np.linalg.norm(phi)
        if (phi.conj() @ mat @ phi).real > bound + 1e-9:
            return False
    return True
