"""Exact arithmetic in the Weyl algebra W_n.

Polynomials are stored in normal form: a sparse map from ``(sbar, tbar)``
exponent pairs to coefficients, each key standing for the monomial
``(a*)^sbar a^tbar``.  Words (raw products of generators) are brought to
normal form with the canonical commutation relations ``[a_i, a*_j] = delta_ij``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

from .scalars import Exact, Scalar, fmt_scalar, is_exact, to_scalar

__all__ = [
    "Letter",
    "Word",
    "NormalIndex",
    "WeylPolynomial",
    "ModeError",
    "ZeroPolynomialError",
    "normal_form",
    "commute_block",
    "multiply",
    "adjoint",
    "degree",
    "l1_norm",
    "antinormal_order",
    "eval_coherent",
    "term_order_key",
]

FLOAT_PRUNE = 1e-14


class ModeError(ValueError):
    """Mode index outside 1..n, or mode-count mismatch."""


class ZeroPolynomialError(ValueError):
    """Raised when an operation is undefined on the zero polynomial."""


@dataclass(frozen=True, order=True)
class Letter:
    mode: int
    daggered: bool

    def __str__(self) -> str:
        return f"{'ad' if self.daggered else 'a'}{self.mode}"


@dataclass(frozen=True)
class Word:
    """A product of generators, read left to right."""

    letters: tuple[Letter, ...] = ()

    @classmethod
    def parse(cls, text: str) -> "Word":
        """Build from whitespace separated tokens such as ``"a1 ad2 ad1"``.

        A bare ``a`` / ``ad`` means mode 1.
        """
        letters = []
        for tok in text.split():
            if tok.startswith("ad"):
                mode = tok[2:] or "1"
                letters.append(Letter(int(mode), True))
            elif tok.startswith("a"):
                mode = tok[1:] or "1"
                letters.append(Letter(int(mode), False))
            else:
                raise ValueError(f"bad generator token {tok!r}")
        return cls(tuple(letters))

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self) -> Iterator[Letter]:
        return iter(self.letters)

    def __add__(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters)

    def adjoint(self) -> "Word":
        return Word(tuple(Letter(l.mode, not l.daggered) for l in reversed(self.letters)))

    def __str__(self) -> str:
        return " ".join(map(str, self.letters)) or "1"


class NormalIndex(NamedTuple):
    sbar: tuple[int, ...]
    tbar: tuple[int, ...]

    @property
    def degree(self) -> int:
        return sum(self.sbar) + sum(self.tbar)


def term_order_key(key: tuple[tuple[int, ...], tuple[int, ...]]):
    """Graded lexicographic order on ``(|s|+|t|, sbar, tbar)``."""
    s, t = key
    return (sum(s) + sum(t), s, t)


class WeylPolynomial:
    """Element of W_n in normal form.  Treat instances as immutable."""

    __slots__ = ("n_modes", "_terms")

    def __init__(self, n_modes: int, terms: Mapping | Iterable = ()):
        if n_modes < 1:
            raise ModeError("n_modes must be positive")
        self.n_modes = n_modes
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[NormalIndex, Scalar] = {}
        for key, coeff in items:
            s, t = (tuple(int(v) for v in part) for part in key)
            if len(s) != n_modes or len(t) != n_modes:
                raise ModeError(f"exponent vectors must have length {n_modes}")
            if min(s + t, default=0) < 0:
                raise ValueError("exponents must be non-negative")
            k = NormalIndex(s, t)
            c = to_scalar(coeff)
            acc[k] = acc[k] + c if k in acc else c
        self._terms = _prune(acc)

    # -- construction helpers -------------------------------------------
    @classmethod
    def _raw(cls, n_modes: int, terms: dict) -> "WeylPolynomial":
        obj = cls.__new__(cls)
        obj.n_modes = n_modes
        obj._terms = _prune(terms)
        return obj

    @classmethod
    def zero(cls, n_modes: int = 1) -> "WeylPolynomial":
        return cls._raw(n_modes, {})

    @classmethod
    def constant(cls, value, n_modes: int = 1) -> "WeylPolynomial":
        z = (0,) * n_modes
        return cls._raw(n_modes, {NormalIndex(z, z): to_scalar(value)})

    @classmethod
    def one(cls, n_modes: int = 1) -> "WeylPolynomial":
        return cls.constant(1, n_modes)

    @classmethod
    def monomial(cls, sbar: Sequence[int], tbar: Sequence[int], coeff=1) -> "WeylPolynomial":
        n = len(sbar)
        return cls(n, {(tuple(sbar), tuple(tbar)): coeff})

    @classmethod
    def a(cls, mode: int = 1, n_modes: int = 1) -> "WeylPolynomial":
        _check_mode(mode, n_modes)
        t = tuple(int(i == mode - 1) for i in range(n_modes))
        return cls._raw(n_modes, {NormalIndex((0,) * n_modes, t): Exact(1)})

    @classmethod
    def ad(cls, mode: int = 1, n_modes: int = 1) -> "WeylPolynomial":
        _check_mode(mode, n_modes)
        s = tuple(int(i == mode - 1) for i in range(n_modes))
        return cls._raw(n_modes, {NormalIndex(s, (0,) * n_modes): Exact(1)})

    @classmethod
    def number(cls, mode: int = 1, n_modes: int = 1) -> "WeylPolynomial":
        return cls.ad(mode, n_modes) * cls.a(mode, n_modes)

    # -- accessors -------------------------------------------------------
    @property
    def terms(self) -> Mapping[NormalIndex, Scalar]:
        return dict(self._terms)

    def items(self) -> list[tuple[NormalIndex, Scalar]]:
        """Terms in canonical graded-lex order."""
        return sorted(self._terms.items(), key=lambda kv: term_order_key(kv[0]))

    def coefficient(self, sbar, tbar) -> Scalar:
        return self._terms.get(NormalIndex(tuple(sbar), tuple(tbar)), Exact(0))

    @property
    def constant_term(self) -> Scalar:
        z = (0,) * self.n_modes
        return self.coefficient(z, z)

    @property
    def is_exact(self) -> bool:
        return all(is_exact(c) for c in self._terms.values())

    @property
    def is_real(self) -> bool:
        """All normal-form coefficients real."""
        for c in self._terms.values():
            if is_exact(c):
                if not c.is_real:
                    return False
            elif complex(c).imag != 0:
                return False
        return True

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    # -- arithmetic ------------------------------------------------------
    def _check(self, other: "WeylPolynomial") -> None:
        if other.n_modes != self.n_modes:
            raise ModeError(f"mode-count mismatch: {self.n_modes} vs {other.n_modes}")

    def _coerce(self, other) -> "WeylPolynomial | None":
        if isinstance(other, WeylPolynomial):
            self._check(other)
            return other
        try:
            return WeylPolynomial.constant(other, self.n_modes)
        except TypeError:
            return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        acc = dict(self._terms)
        for k, c in o._terms.items():
            acc[k] = acc[k] + c if k in acc else c
        return WeylPolynomial._raw(self.n_modes, acc)

    __radd__ = __add__

    def __neg__(self):
        return WeylPolynomial._raw(self.n_modes, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, factor) -> "WeylPolynomial":
        f = to_scalar(factor)
        return WeylPolynomial._raw(self.n_modes, {k: c * f for k, c in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, WeylPolynomial):
            return multiply(self, other)
        try:
            return self.scale(other)
        except TypeError:
            return NotImplemented

    def __rmul__(self, other):
        # scalars commute with everything
        return self.scale(other)

    def __truediv__(self, other):
        f = to_scalar(other)
        return self.scale(1 / f if not is_exact(f) else Exact(1) / f)

    def __pow__(self, k: int) -> "WeylPolynomial":
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers")
        out = WeylPolynomial.one(self.n_modes)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        if isinstance(other, WeylPolynomial):
            return self.n_modes == other.n_modes and self._terms == other._terms
        try:
            return self == WeylPolynomial.constant(other, self.n_modes)
        except TypeError:
            return NotImplemented

    def __hash__(self) -> int:
        return hash((self.n_modes, frozenset(self._terms.items())))

    # -- algebra ---------------------------------------------------------
    def adjoint(self) -> "WeylPolynomial":
        return adjoint(self)

    @property
    def dagger(self) -> "WeylPolynomial":
        return adjoint(self)

    def is_hermitian(self, tol: float = 0.0) -> bool:
        diff = self - adjoint(self)
        if tol == 0.0:
            return not diff
        return float(l1_norm(diff)) <= tol

    def degree(self) -> int:
        return degree(self)

    def l1_norm(self):
        return l1_norm(self)

    def eval_coherent(self, alpha) -> complex:
        return eval_coherent(self, alpha)

    def to_text(self) -> str:
        return to_text(self)

    def __str__(self) -> str:
        return to_text(self)

    def __repr__(self) -> str:
        return f"WeylPolynomial({self.n_modes}, {to_text(self)!r})"


def _prune(terms: dict) -> dict:
    out = {k: c for k, c in terms.items() if c}
    floats = [abs(c) for c in out.values() if not is_exact(c)]
    if floats:
        l1 = sum(float(abs(c)) for c in out.values())
        cut = FLOAT_PRUNE * l1
        out = {k: c for k, c in out.items() if is_exact(c) or abs(c) >= cut}
    return out


def _check_mode(mode: int, n: int) -> None:
    if not 1 <= mode <= n:
        raise ModeError(f"mode index {mode} outside 1..{n}")


# ---------------------------------------------------------------------------
# word rewriting
# ---------------------------------------------------------------------------


@lru_cache(maxsize=1 << 16)
def _rewrite(letters: tuple[tuple[int, bool], ...]) -> tuple[tuple[tuple[int, ...], tuple[int, ...], int], ...]:
    # rightmost a_i a*_j  ->  a*_j a_i + delta_ij
    for pos in range(len(letters) - 2, -1, -1):
        (m1, d1), (m2, d2) = letters[pos], letters[pos + 1]
        if not d1 and d2:
            swapped = letters[:pos] + (letters[pos + 1], letters[pos]) + letters[pos + 2 :]
            acc: dict = {}
            for s, t, c in _rewrite(swapped):
                acc[(s, t)] = acc.get((s, t), 0) + c
            if m1 == m2:
                for s, t, c in _rewrite(letters[:pos] + letters[pos + 2 :]):
                    acc[(s, t)] = acc.get((s, t), 0) + c
            return tuple((s, t, c) for (s, t), c in acc.items() if c)
    # already normal: creations then annihilations
    n = max((m for m, _ in letters), default=0)
    s = [0] * n
    t = [0] * n
    for m, d in letters:
        (s if d else t)[m - 1] += 1
    return ((tuple(s), tuple(t), 1),)


def normal_form(word: Word, n: int) -> WeylPolynomial:
    """Normal form of a word via CCR rewriting; coefficients are non-negative integers."""
    for letter in word:
        _check_mode(letter.mode, n)
    raw = _rewrite(tuple((l.mode, l.daggered) for l in word.letters))
    terms = {}
    for s, t, c in raw:
        pad = n - len(s)
        key = NormalIndex(s + (0,) * pad, t + (0,) * pad)
        terms[key] = terms.get(key, 0) + c
    return WeylPolynomial(n, terms)


@lru_cache(maxsize=None)
def _block_1d(s: int, u: int) -> tuple[tuple[int, int], ...]:
    """a^s (a*)^u = sum_j C(s,j) C(u,j) j! (a*)^(u-j) a^(s-j)."""
    return tuple((j, math.comb(s, j) * math.comb(u, j) * math.factorial(j)) for j in range(min(s, u) + 1))


def _block_terms(s: Sequence[int], u: Sequence[int]):
    """Yield ``(j_vector, integer coefficient)`` for the multi-mode block a^s (a*)^u."""
    per_mode = [_block_1d(si, ui) for si, ui in zip(s, u)]
    for combo in itertools.product(*per_mode):
        coef = 1
        for _, c in combo:
            coef *= c
        yield tuple(j for j, _ in combo), coef


def commute_block(s: Sequence[int], u: Sequence[int]) -> WeylPolynomial:
    """Normal form of ``a^s (a*)^u`` (per-mode closed form, exact integers)."""
    if len(s) != len(u):
        raise ModeError("s and u must have equal length")
    if min(tuple(s) + tuple(u), default=0) < 0:
        raise ValueError("powers must be non-negative")
    n = len(s)
    terms = {}
    for j, coef in _block_terms(s, u):
        key = NormalIndex(tuple(ui - ji for ui, ji in zip(u, j)), tuple(si - ji for si, ji in zip(s, j)))
        terms[key] = coef
    return WeylPolynomial(n, terms)


def multiply(p: WeylPolynomial, q: WeylPolynomial) -> WeylPolynomial:
    """Normal form of the product ``p q``."""
    p._check(q)
    acc: dict = {}
    for (s1, t1), c1 in p._terms.items():
        for (s2, t2), c2 in q._terms.items():
            c12 = c1 * c2
            # (a*)^s1 [a^t1 (a*)^s2] a^t2
            for j, coef in _block_terms(t1, s2):
                key = NormalIndex(
                    tuple(a + b - c for a, b, c in zip(s1, s2, j)),
                    tuple(a - c + b for a, b, c in zip(t1, t2, j)),
                )
                val = c12 * coef
                acc[key] = acc[key] + val if key in acc else val
    return WeylPolynomial._raw(p.n_modes, acc)


def adjoint(p: WeylPolynomial) -> WeylPolynomial:
    return WeylPolynomial._raw(p.n_modes, {NormalIndex(t, s): c.conjugate() for (s, t), c in p._terms.items()})


def degree(p: WeylPolynomial) -> int:
    if not p._terms:
        raise ZeroPolynomialError("zero polynomial has no degree")
    return max(k.degree for k in p._terms)


def l1_norm(p: WeylPolynomial):
    """Sum of absolute normal-form coefficients; exact Fraction when all coefficients are real rationals."""
    total = 0
    for c in p._terms.values():
        total = total + abs(c)
    return total


def antinormal_order(word: Word) -> Word:
    """Annihilators first, then creators; modes ascending within each block."""
    ann = sorted(l for l in word if not l.daggered)
    cre = sorted(l for l in word if l.daggered)
    return Word(tuple(ann + cre))


def eval_coherent(p: WeylPolynomial, alpha) -> complex:
    """``<alpha| pi(p) |alpha> = sum p_{s,t} conj(alpha)^s alpha^t``."""
    alpha = [complex(x) for x in (alpha if hasattr(alpha, "__len__") else [alpha])]
    if len(alpha) != p.n_modes:
        raise ModeError("coherent point dimension mismatch")
    total = 0j
    for (s, t), c in p._terms.items():
        v = complex(c)
        for ai, si, ti in zip(alpha, s, t):
            v *= ai.conjugate() ** si * ai**ti
        total += v
    return total


# ---------------------------------------------------------------------------
# text serialization
# ---------------------------------------------------------------------------


def _fmt_monomial(s: Sequence[int], t: Sequence[int], n: int) -> str:
    parts = []
    for kind, exps in (("ad", s), ("a", t)):
        for i, e in enumerate(exps):
            if not e:
                continue
            g = kind if n == 1 else f"{kind}[{i + 1}]"
            parts.append(g if e == 1 else f"{g}^{e}")
    return "*".join(parts)


def to_text(p: WeylPolynomial) -> str:
    """Canonical serialization: graded-lex terms, ``coeff*ad[i]^s*...*a[j]^t``."""
    if not p._terms:
        return "0"
    out = []
    for (s, t), c in p.items():
        mono = _fmt_monomial(s, t, p.n_modes)
        cs = fmt_scalar(c)
        neg = cs.startswith("-")
        mag = cs[1:] if neg else cs
        if mono:
            body = mono if mag == "1" else f"{mag}*{mono}"
        else:
            body = mag
        if not out:
            out.append(("-" if neg else "") + body)
        else:
            out.append((" - " if neg else " + ") + body)
    return "".join(out)
