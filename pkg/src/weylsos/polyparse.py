"""Parsing of Hamiltonian expressions in the generators ``a``, ``ad``, ``x``, ``p``.

Grammar (whitespace insignificant)::

    expr   := ["-"] term { ("+" | "-") term }
    term   := factor { ["*" | "/"] factor }        juxtaposition multiplies
    factor := base [ "^" uint ]
    base   := number | gen | "m" | "sqrt2" | "(" expr ")"
    gen    := ("a" | "ad" | "x" | "p") [ "[" uint "]" ]
    number := decimal [ "i" ]

``/`` only accepts a right operand that lowers to a non-zero scalar, which is
what the canonical serializer needs for rationals such as ``3/2`` or ``3i/2``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .scalars import SQRT2, Exact, I, to_scalar
from .weyl import WeylPolynomial, degree

__all__ = [
    "ParseError",
    "ExprAst",
    "Num",
    "Gen",
    "Param",
    "Neg",
    "Sum",
    "Diff",
    "Prod",
    "Quot",
    "Pow",
    "parse",
    "lower",
    "parse_poly",
    "dagger_ast",
    "builtin_quartic",
    "harmonic",
    "schmudgen",
    "QUARTIC_SRC",
]


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


# -- AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: Exact | complex


@dataclass(frozen=True)
class Gen:
    kind: str  # a | ad | x | p
    mode: int


@dataclass(frozen=True)
class Param:
    name: str
    value: Exact | complex


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class Sum:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Diff:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Prod:
    factors: tuple["Node", ...]


@dataclass(frozen=True)
class Quot:
    numerator: "Node"
    denominator: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


Node = Union[Num, Gen, Param, Neg, Sum, Diff, Prod, Quot, Pow]


@dataclass(frozen=True)
class ExprAst:
    root: Node
    n_modes: int


# -- lexer -------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?i?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()\[\]])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def _lex(src: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), pos))
        pos = m.end()
    toks.append(_Tok("eof", "", len(src)))
    return toks


def _number(text: str) -> Exact | complex:
    imag = text.endswith("i")
    body = text[:-1] if imag else text
    try:
        val = to_scalar(Fraction(body))
    except ValueError:
        val = complex(float(body))
    return val * I if imag else val


# -- parser ------------------------------------------------------------------

_GENERATORS = ("a", "ad", "x", "p")


class _Parser:
    def __init__(self, src: str, n: int, params: dict):
        self.toks = _lex(src)
        self.i = 0
        self.n = n
        self.params = params

    @property
    def cur(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> _Tok:
        if self.cur.text != text:
            found = self.cur.text or "end of input"
            raise ParseError(f"expected {text!r}, found {found!r}", self.cur.pos)
        return self.take()

    def expr(self) -> Node:
        if self.cur.text == "-":
            self.take()
            node: Node = Neg(self.term())
        else:
            node = self.term()
        while self.cur.text in ("+", "-"):
            op = self.take().text
            rhs = self.term()
            node = Sum(node, rhs) if op == "+" else Diff(node, rhs)
        return node

    def _starts_base(self) -> bool:
        return self.cur.kind in ("num", "ident") or self.cur.text == "("

    def term(self) -> Node:
        factors = [self.factor()]
        while True:
            if self.cur.text == "*":
                self.take()
                factors.append(self.factor())
            elif self.cur.text == "/":
                self.take()
                den = self.factor()
                num = factors[0] if len(factors) == 1 else Prod(tuple(factors))
                factors = [Quot(num, den)]
            elif self._starts_base():
                factors.append(self.factor())
            else:
                break
        return factors[0] if len(factors) == 1 else Prod(tuple(factors))

    def factor(self) -> Node:
        base = self.base()
        if self.cur.text == "^":
            self.take()
            tok = self.cur
            if tok.text == "-":
                raise ParseError("negative exponent", tok.pos)
            if tok.kind != "num":
                raise ParseError("exponent must be a non-negative integer", tok.pos)
            if not tok.text.isdigit():
                raise ParseError(f"fractional or non-integer exponent {tok.text!r}", tok.pos)
            self.take()
            return Pow(base, int(tok.text))
        return base

    def base(self) -> Node:
        tok = self.cur
        if tok.kind == "num":
            self.take()
            return Num(_number(tok.text))
        if tok.text == "(":
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "ident":
            self.take()
            if tok.text in _GENERATORS:
                mode = 1
                if self.cur.text == "[":
                    self.take()
                    idx = self.cur
                    if idx.kind != "num" or not idx.text.isdigit():
                        raise ParseError("mode index must be a positive integer", idx.pos)
                    self.take()
                    self.expect("]")
                    mode = int(idx.text)
                    if mode < 1 or mode > self.n:
                        raise ParseError(f"mode index {mode} outside 1..{self.n}", idx.pos)
                return Gen(tok.text, mode)
            if tok.text == "sqrt2":
                return Num(SQRT2)
            if tok.text in self.params:
                return Param(tok.text, to_scalar(self.params[tok.text]))
            raise ParseError(f"unknown identifier {tok.text!r}", tok.pos)
        found = tok.text or "end of input"
        raise ParseError(f"unexpected {found!r}", tok.pos)


def _param_value(v):
    if isinstance(v, float):
        # keep the decimal the user meant (-0.25 -> -1/4)
        return Fraction(repr(v))
    return v


def parse(src: str, n: int = 1, params: dict | None = None) -> ExprAst:
    """Parse ``src`` into an AST over ``n`` modes; ``params`` binds the scalar ``m``."""
    bound = {k: _param_value(v) for k, v in (params or {}).items()}
    parser = _Parser(src, n, bound)
    root = parser.expr()
    if parser.cur.kind != "eof":
        raise ParseError(f"unexpected {parser.cur.text!r}", parser.cur.pos)
    return ExprAst(root, n)


# -- lowering ----------------------------------------------------------------

_HALF_SQRT2 = SQRT2 / 2


def _gen_poly(g: Gen, n: int) -> WeylPolynomial:
    a = WeylPolynomial.a(g.mode, n)
    ad = WeylPolynomial.ad(g.mode, n)
    if g.kind == "a":
        return a
    if g.kind == "ad":
        return ad
    if g.kind == "x":
        return (a + ad).scale(_HALF_SQRT2)
    # p = (a - a*)/(i sqrt2) = i (a* - a) sqrt2/2
    return (ad - a).scale(I * _HALF_SQRT2)


def _lower(node: Node, n: int) -> WeylPolynomial:
    if isinstance(node, Num):
        return WeylPolynomial.constant(node.value, n)
    if isinstance(node, Param):
        return WeylPolynomial.constant(node.value, n)
    if isinstance(node, Gen):
        return _gen_poly(node, n)
    if isinstance(node, Neg):
        return -_lower(node.operand, n)
    if isinstance(node, Sum):
        return _lower(node.left, n) + _lower(node.right, n)
    if isinstance(node, Diff):
        return _lower(node.left, n) - _lower(node.right, n)
    if isinstance(node, Prod):
        out = _lower(node.factors[0], n)
        for f in node.factors[1:]:
            out = out * _lower(f, n)
        return out
    if isinstance(node, Quot):
        den = _lower(node.denominator, n)
        if not den or degree(den) != 0:
            raise ValueError("division only by non-zero scalars")
        return _lower(node.numerator, n) / den.constant_term
    if isinstance(node, Pow):
        return _lower(node.base, n) ** node.exponent
    raise TypeError(f"unknown node {node!r}")


def lower(ast: ExprAst) -> WeylPolynomial:
    """Substitute x, p by ladder operators and expand into normal form."""
    return _lower(ast.root, ast.n_modes)


def parse_poly(src: str, n: int = 1, params: dict | None = None) -> WeylPolynomial:
    return lower(parse(src, n, params))


def _dagger(node: Node) -> Node:
    if isinstance(node, Num):
        return Num(node.value.conjugate())
    if isinstance(node, Param):
        return Param(node.name, node.value.conjugate())
    if isinstance(node, Gen):
        swap = {"a": "ad", "ad": "a"}
        return Gen(swap.get(node.kind, node.kind), node.mode)
    if isinstance(node, Neg):
        return Neg(_dagger(node.operand))
    if isinstance(node, Sum):
        return Sum(_dagger(node.left), _dagger(node.right))
    if isinstance(node, Diff):
        return Diff(_dagger(node.left), _dagger(node.right))
    if isinstance(node, Prod):
        return Prod(tuple(_dagger(f) for f in reversed(node.factors)))
    if isinstance(node, Quot):
        return Quot(_dagger(node.numerator), _dagger(node.denominator))
    if isinstance(node, Pow):
        return Pow(_dagger(node.base), node.exponent)
    raise TypeError(f"unknown node {node!r}")


def dagger_ast(ast: ExprAst) -> ExprAst:
    """Formal adjoint of an expression tree (reverse products, conjugate scalars)."""
    return ExprAst(_dagger(ast.root), ast.n_modes)


# -- built-in families -------------------------------------------------------

QUARTIC_SRC = "0.5*p^2 + m*x^2 + x^4"


def builtin_quartic(m) -> WeylPolynomial:
    """Normal form of ``p^2/2 + m x^2 + x^4``; ``m < 0`` gives the double well."""
    return parse_poly(QUARTIC_SRC, 1, {"m": m})


def harmonic() -> WeylPolynomial:
    """``a*a + 1/2`` (= p^2/2 + x^2/2)."""
    return parse_poly("ad*a + 0.5")


def schmudgen(eps=0) -> WeylPolynomial:
    """``(N - 1)(N - 2) + eps`` with ``N = a*a``: positive on Fock space, not SOS for eps < 1/4."""
    return parse_poly("(ad*a - 1)*(ad*a - 2)") + to_scalar(_param_value(eps))
