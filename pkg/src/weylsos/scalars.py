"""Scalar coefficients for Weyl polynomials.

Exact coefficients live in Q(i, sqrt2) and are stored as four Fractions
``(a, b, c, d)`` meaning ``a + b*sqrt2 + i*(c + d*sqrt2)``.  Anything that is
not exactly representable (Python floats, complex numbers, mpmath values)
falls back to ordinary floating arithmetic; mixing the two degrades to
floating.
"""

from __future__ import annotations

import math
import numbers
from fractions import Fraction
from typing import Union

__all__ = ["Exact", "SQRT2", "I", "Scalar", "to_scalar", "is_exact", "conj", "abs_value", "is_zero", "to_complex", "fmt_scalar"]


class Exact:
    """Element of Q(i, sqrt2); immutable and hashable."""

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a=0, b=0, c=0, d=0):
        object.__setattr__(self, "a", Fraction(a))
        object.__setattr__(self, "b", Fraction(b))
        object.__setattr__(self, "c", Fraction(c))
        object.__setattr__(self, "d", Fraction(d))

    def __setattr__(self, name, value):
        raise AttributeError("Exact scalars are immutable")

    # -- coercion -------------------------------------------------------
    @staticmethod
    def _lift(other):
        if isinstance(other, Exact):
            return other
        if isinstance(other, (int, Fraction)):
            return Exact(other)
        return None

    def __complex__(self) -> complex:
        r2 = math.sqrt(2.0)
        return complex(float(self.a) + float(self.b) * r2, float(self.c) + float(self.d) * r2)

    def __float__(self) -> float:
        if self.c or self.d:
            raise TypeError("complex Exact scalar has no float value")
        return float(self.a) + float(self.b) * math.sqrt(2.0)

    @property
    def is_rational(self) -> bool:
        return not (self.b or self.c or self.d)

    @property
    def is_real(self) -> bool:
        return not (self.c or self.d)

    # -- arithmetic -----------------------------------------------------
    def __add__(self, other):
        o = Exact._lift(other)
        if o is None:
            return complex(self) + other
        return Exact(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)

    __radd__ = __add__

    def __neg__(self):
        return Exact(-self.a, -self.b, -self.c, -self.d)

    def __pos__(self):
        return self

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = Exact._lift(other)
        if o is None:
            return complex(self) * other
        # real parts x = a + b r, y = c + d r with r^2 = 2
        a1, b1, c1, d1 = self.a, self.b, self.c, self.d
        a2, b2, c2, d2 = o.a, o.b, o.c, o.d
        re_a = a1 * a2 + 2 * b1 * b2 - (c1 * c2 + 2 * d1 * d2)
        re_b = a1 * b2 + b1 * a2 - (c1 * d2 + d1 * c2)
        im_a = a1 * c2 + 2 * b1 * d2 + c1 * a2 + 2 * d1 * b2
        im_b = a1 * d2 + b1 * c2 + c1 * b2 + d1 * a2
        return Exact(re_a, re_b, im_a, im_b)

    __rmul__ = __mul__

    def _inverse(self) -> "Exact":
        # 1/z = conj(z) / |z|^2 ; |z|^2 = u + v r is in Q(sqrt2), invert via (u - v r)
        zz = self * self.conjugate()
        u, v = zz.a, zz.b
        den = u * u - 2 * v * v
        if den == 0:
            raise ZeroDivisionError("division by zero Exact scalar")
        inv_norm = Exact(u / den, -v / den)
        return self.conjugate() * inv_norm

    def __truediv__(self, other):
        o = Exact._lift(other)
        if o is None:
            return complex(self) / other
        return self * o._inverse()

    def __rtruediv__(self, other):
        o = Exact._lift(other)
        if o is None:
            return other / complex(self)
        return o * self._inverse()

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return complex(self) ** k
        out, base = Exact(1), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conjugate(self) -> "Exact":
        return Exact(self.a, self.b, -self.c, -self.d)

    def __abs__(self):
        if self.is_real and not self.b:
            return abs(self.a)
        return abs(complex(self))

    def __bool__(self) -> bool:
        return bool(self.a or self.b or self.c or self.d)

    def __eq__(self, other) -> bool:
        o = Exact._lift(other)
        if o is None:
            if isinstance(other, numbers.Number):
                return complex(self) == other
            return NotImplemented
        return (self.a, self.b, self.c, self.d) == (o.a, o.b, o.c, o.d)

    def __hash__(self) -> int:
        if not (self.b or self.c or self.d):
            return hash(self.a)
        return hash((self.a, self.b, self.c, self.d))

    def __repr__(self) -> str:
        return f"Exact({fmt_scalar(self)})"


SQRT2 = Exact(0, 1)
I = Exact(0, 0, 1)

Scalar = Union[Exact, complex, float]


def to_scalar(x) -> Scalar:
    """Normalise a user value: ints/Fractions become exact, everything else floating."""
    if isinstance(x, Exact):
        return x
    if isinstance(x, (bool, int, Fraction)):
        return Exact(x)
    if isinstance(x, numbers.Real):
        return complex(float(x))
    if isinstance(x, numbers.Complex):
        return complex(x)
    # mpmath and friends: keep as-is if they behave like numbers
    return x


def is_exact(x) -> bool:
    return isinstance(x, Exact)


def conj(x):
    return x.conjugate()


def abs_value(x):
    return abs(x)


def is_zero(x) -> bool:
    return not x


def to_complex(x) -> complex:
    return complex(x)


def _fmt_part(q_rat: Fraction, q_r2: Fraction, imag: bool) -> list[str]:
    parts = []
    i_tag = "i" if imag else ""
    for q, r2 in ((q_rat, ""), (q_r2, "*sqrt2")):
        if not q:
            continue
        num, den = q.numerator, q.denominator
        sign = "-" if num < 0 else ""
        num = abs(num)
        body = f"{num}{i_tag}"
        if body == "1" and r2:
            body, r2 = "sqrt2", ""
        s = f"{sign}{body}{r2}"
        if den != 1:
            s += f"/{den}"
        parts.append(s)
    return parts


def fmt_scalar(x) -> str:
    """Render a scalar in the parser's literal syntax (``3/2``, ``3i/2``, ``sqrt2/2``)."""
    if isinstance(x, Exact):
        parts = _fmt_part(x.a, x.b, False) + _fmt_part(x.c, x.d, True)
        if not parts:
            return "0"
        if len(parts) == 1:
            return parts[0]
        out = parts[0]
        for p in parts[1:]:
            out += (" - " + p[1:]) if p.startswith("-") else (" + " + p)
        return f"({out})"
    z = complex(x)
    if z.imag == 0:
        return repr(z.real)
    if z.real == 0:
        return f"{z.imag!r}i"
    sign = "-" if z.imag < 0 else "+"
    return f"({z.real!r} {sign} {abs(z.imag)!r}i)"
