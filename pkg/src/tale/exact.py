"""Exact arithmetic in Q and in real quadratic fields Q(sqrt d).

Lattices such as the hexagonal one need sqrt(3); everything the short-basis
construction does (inner products, projections, slab tests, floors) stays
inside the field, so no rounding ever enters a decision.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence, Union

import sympy

Scalar = Union[int, Fraction, "QSqrt"]


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    raise TypeError(f"not a rational: {x!r}")


class QSqrt:
    """The number ``a + b*sqrt(d)`` with rational ``a, b`` and squarefree ``d > 1``."""

    __slots__ = ("a", "b", "d")

    def __init__(self, a, b=0, d: int = 3):
        self.a = _frac(a)
        self.b = _frac(b)
        self.d = int(d)
        if self.d < 2:
            raise ValueError("d must be a squarefree integer > 1")

    # coercion
    def _lift(self, other) -> "QSqrt":
        if isinstance(other, QSqrt):
            if other.d != self.d and other.b != 0 and self.b != 0:
                raise ValueError("mixing different quadratic fields")
            return other
        return QSqrt(_frac(other), 0, self.d)

    def _field(self, other: "QSqrt") -> int:
        if self.b == 0 and isinstance(other, QSqrt):
            return other.d
        return self.d

    def __add__(self, other):
        if not isinstance(other, (QSqrt, int, Fraction)):
            return NotImplemented
        o = self._lift(other)
        return QSqrt(self.a + o.a, self.b + o.b, self._field(o))

    __radd__ = __add__

    def __neg__(self):
        return QSqrt(-self.a, -self.b, self.d)

    def __pos__(self):
        return self

    def __sub__(self, other):
        if not isinstance(other, (QSqrt, int, Fraction)):
            return NotImplemented
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, (QSqrt, int, Fraction)):
            return NotImplemented
        o = self._lift(other)
        d = self._field(o)
        return QSqrt(self.a * o.a + self.b * o.b * d, self.a * o.b + self.b * o.a, d)

    __rmul__ = __mul__

    def conjugate(self) -> "QSqrt":
        return QSqrt(self.a, -self.b, self.d)

    def field_norm(self) -> Fraction:
        return self.a * self.a - self.b * self.b * self.d

    def __truediv__(self, other):
        if not isinstance(other, (QSqrt, int, Fraction)):
            return NotImplemented
        o = self._lift(other)
        if o.b == 0:
            if o.a == 0:
                raise ZeroDivisionError("division by zero in Q(sqrt d)")
            return QSqrt(self.a / o.a, self.b / o.a, self.d)
        n = o.field_norm()
        if n == 0:
            raise ZeroDivisionError("division by zero in Q(sqrt d)")
        c = o.conjugate()
        num = self * c
        return QSqrt(num.a / n, num.b / n, num.d)

    def __rtruediv__(self, other):
        return self._lift(other) / self

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return QSqrt(1, 0, self.d) / (self ** (-k))
        out = QSqrt(1, 0, self.d)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def sign(self) -> int:
        sa = (self.a > 0) - (self.a < 0)
        sb = (self.b > 0) - (self.b < 0)
        if sb == 0:
            return sa
        if sa == 0 or sa == sb:
            return sb
        # opposite signs: compare a^2 with b^2 d
        lhs, rhs = self.a * self.a, self.b * self.b * self.d
        if lhs == rhs:
            return 0
        return sa if lhs > rhs else sb

    def _cmp(self, other) -> int:
        return (self - other).sign()

    def __eq__(self, other):
        if isinstance(other, (QSqrt, int, Fraction)):
            return self._cmp(other) == 0
        if isinstance(other, float):
            return float(self) == other
        return NotImplemented

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __hash__(self):
        if self.b == 0:
            return hash(self.a)
        return hash((self.a, self.b, self.d))

    def __float__(self):
        return float(self.a) + float(self.b) * math.sqrt(self.d)

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __floor__(self):
        guess = math.floor(float(self))
        # correct the float estimate exactly
        while QSqrt(guess, 0, self.d) > self:
            guess -= 1
        while QSqrt(guess + 1, 0, self.d) <= self:
            guess += 1
        return guess

    def __ceil__(self):
        return -math.floor(-self)

    def is_rational(self) -> bool:
        return self.b == 0

    def __repr__(self):
        if self.b == 0:
            return f"QSqrt({self.a})"
        return f"QSqrt({self.a} + {self.b}*sqrt({self.d}))"

    def __str__(self):
        if self.b == 0:
            return str(self.a)
        b = abs(self.b)
        root = f"sqrt({self.d})" if b == 1 else f"{b}*sqrt({self.d})"
        sign = "-" if self.b < 0 else "+"
        if self.a == 0:
            return root if self.b > 0 else f"-{root}"
        return f"{self.a}{sign}{root}"


def floor_exact(x: Scalar) -> int:
    return math.floor(x)


def sign(x: Scalar) -> int:
    if isinstance(x, QSqrt):
        return x.sign()
    return (x > 0) - (x < 0)


def dot(u: Sequence[Scalar], v: Sequence[Scalar]) -> Scalar:
    total: Scalar = Fraction(0)
    for x, y in zip(u, v):
        total = total + x * y
    return total


def norm2(u: Sequence[Scalar]) -> Scalar:
    return dot(u, u)


def vadd(u, v) -> tuple:
    return tuple(x + y for x, y in zip(u, v))


def vsub(u, v) -> tuple:
    return tuple(x - y for x, y in zip(u, v))


def vscale(c, u) -> tuple:
    return tuple(c * x for x in u)


def to_float(u: Iterable[Scalar]) -> list[float]:
    return [float(x) for x in u]


def simplify_scalar(x: Scalar) -> Scalar:
    if isinstance(x, QSqrt) and x.b == 0:
        return x.a
    return x


def parse_exact(value) -> Scalar:
    """Parse an int, Fraction or expression string like ``"sqrt(3)/2"``."""
    if isinstance(value, (Fraction, QSqrt)):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        f = Fraction(value)
        if float(f) != value:
            raise ValueError(f"cannot represent {value!r} exactly")
        return f
    expr = sympy.nsimplify(sympy.sympify(str(value), rational=True))
    expr = sympy.expand(sympy.radsimp(expr))
    if expr.is_Rational:
        return Fraction(int(expr.p), int(expr.q))
    const, rest = expr.as_independent(sympy.Pow, sympy.Mul, as_Add=True)
    if not const.is_Rational:
        raise ValueError(f"unsupported exact value {value!r}")
    terms = sympy.Add.make_args(rest)
    d_found = None
    b_total = sympy.Rational(0)
    for term in terms:
        coeff, radical = term.as_coeff_Mul()
        if not (radical.is_Pow and radical.exp == sympy.Rational(1, 2) and radical.base.is_Integer):
            raise ValueError(f"unsupported exact value {value!r}")
        d = int(radical.base)
        if d_found is not None and d != d_found:
            raise ValueError(f"value {value!r} mixes quadratic fields")
        d_found = d
        b_total += coeff
    return QSqrt(Fraction(int(const.p), int(const.q)), Fraction(int(b_total.p), int(b_total.q)), d_found)
