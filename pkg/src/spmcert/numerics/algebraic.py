"""Exact arithmetic in the biquadratic field Q(sqrt2, sqrt3).

Elements are stored as four rationals (q0, q1, q2, q3) standing for
``q0 + q1*sqrt(2) + q2*sqrt(3) + q3*sqrt(6)``.  Since 1, sqrt2, sqrt3, sqrt6 are
linearly independent over Q, equality and zero tests are exact.
"""

from __future__ import annotations

import re
from fractions import Fraction
from numbers import Rational
from typing import Union

__all__ = ["AlgebraicScalar", "SQRT2", "SQRT3", "SQRT6"]

_Num = Union[int, Fraction, "AlgebraicScalar"]

# product table for basis elements (index 0..3 = 1, sqrt2, sqrt3, sqrt6):
# e_a * e_b = coeff * e_c
_BASIS_MUL = {
    (0, 0): (1, 0), (0, 1): (1, 1), (0, 2): (1, 2), (0, 3): (1, 3),
    (1, 0): (1, 1), (1, 1): (2, 0), (1, 2): (1, 3), (1, 3): (2, 2),
    (2, 0): (1, 2), (2, 1): (1, 3), (2, 2): (3, 0), (2, 3): (3, 1),
    (3, 0): (1, 3), (3, 1): (2, 2), (3, 2): (3, 1), (3, 3): (6, 0),
}
_BASIS_NAMES = ("", "sqrt(2)", "sqrt(3)", "sqrt(6)")


class AlgebraicScalar:
    """Immutable element of Q(sqrt2, sqrt3)."""

    __slots__ = ("_q",)

    def __init__(self, q0=0, q1=0, q2=0, q3=0):
        self._q = (Fraction(q0), Fraction(q1), Fraction(q2), Fraction(q3))

    @classmethod
    def _from_tuple(cls, q) -> AlgebraicScalar:
        obj = object.__new__(cls)
        obj._q = tuple(q)
        return obj

    @staticmethod
    def coerce(x) -> AlgebraicScalar:
        if isinstance(x, AlgebraicScalar):
            return x
        if isinstance(x, (int, Rational)):
            return AlgebraicScalar(Fraction(x))
        raise TypeError(f"cannot convert {type(x).__name__} to AlgebraicScalar")

    @property
    def coeffs(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        return self._q

    q0 = property(lambda self: self._q[0])
    q1 = property(lambda self: self._q[1])
    q2 = property(lambda self: self._q[2])
    q3 = property(lambda self: self._q[3])

    def is_zero(self) -> bool:
        return not any(self._q)

    def is_rational(self) -> bool:
        return not any(self._q[1:])

    def __bool__(self) -> bool:
        return not self.is_zero()

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        try:
            o = AlgebraicScalar.coerce(other)
        except TypeError:
            return NotImplemented
        return AlgebraicScalar._from_tuple(a + b for a, b in zip(self._q, o._q))

    __radd__ = __add__

    def __neg__(self):
        return AlgebraicScalar._from_tuple(-a for a in self._q)

    def __pos__(self):
        return self

    def __sub__(self, other):
        try:
            o = AlgebraicScalar.coerce(other)
        except TypeError:
            return NotImplemented
        return AlgebraicScalar._from_tuple(a - b for a, b in zip(self._q, o._q))

    def __rsub__(self, other):
        try:
            o = AlgebraicScalar.coerce(other)
        except TypeError:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        if isinstance(other, (int, Rational)):
            f = Fraction(other)
            return AlgebraicScalar._from_tuple(a * f for a in self._q)
        if not isinstance(other, AlgebraicScalar):
            return NotImplemented
        out = [Fraction(0)] * 4
        for i, a in enumerate(self._q):
            if not a:
                continue
            for k, b in enumerate(other._q):
                if not b:
                    continue
                c, idx = _BASIS_MUL[i, k]
                out[idx] += c * a * b
        return AlgebraicScalar._from_tuple(out)

    __rmul__ = __mul__

    def conjugate2(self) -> AlgebraicScalar:
        """Image under sqrt2 -> -sqrt2."""
        q0, q1, q2, q3 = self._q
        return AlgebraicScalar._from_tuple((q0, -q1, q2, -q3))

    def conjugate3(self) -> AlgebraicScalar:
        """Image under sqrt3 -> -sqrt3."""
        q0, q1, q2, q3 = self._q
        return AlgebraicScalar._from_tuple((q0, q1, -q2, -q3))

    def inverse(self) -> AlgebraicScalar:
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero in Q(sqrt2, sqrt3)")
        # x * conj3(x) lies in Q(sqrt2); times its sqrt2-conjugate lies in Q
        c3 = self.conjugate3()
        y = self * c3
        c2 = y.conjugate2()
        norm = (y * c2).q0
        return (c3 * c2) * (1 / norm)

    def __truediv__(self, other):
        if isinstance(other, (int, Rational)):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            return self * (1 / Fraction(other))
        if not isinstance(other, AlgebraicScalar):
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        try:
            o = AlgebraicScalar.coerce(other)
        except TypeError:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result = AlgebraicScalar(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def sqrt(self) -> AlgebraicScalar:
        """Exact square root when it lies in the field, for rational values only.

        Covers q = s^2 * k with k in {1, 2, 3, 6}; anything else raises
        ValueError (use a Ball instead).
        """
        if not self.is_rational():
            raise ValueError("exact sqrt is only supported for rational elements")
        q = self._q[0]
        if q < 0:
            raise ValueError("sqrt of a negative number")
        if q == 0:
            return AlgebraicScalar(0)
        for k, idx in ((1, 0), (2, 1), (3, 2), (6, 3)):
            r = _rational_sqrt(q / k)
            if r is not None:
                out = [Fraction(0)] * 4
                out[idx] = r
                return AlgebraicScalar._from_tuple(out)
        raise ValueError(f"sqrt({q}) is not in Q(sqrt2, sqrt3)")

    # -- comparison / hashing ----------------------------------------------

    def __eq__(self, other):
        try:
            o = AlgebraicScalar.coerce(other)
        except TypeError:
            return NotImplemented
        return self._q == o._q

    def __hash__(self):
        if self.is_rational():
            return hash(self._q[0])
        return hash(self._q)

    def sign(self) -> int:
        """Exact sign, refined by interval evaluation at growing precision."""
        if self.is_zero():
            return 0
        prec = 64
        while True:
            b = self.to_ball(prec)
            if b.lower() > 0:
                return 1
            if b.upper() < 0:
                return -1
            prec *= 2

    def __float__(self) -> float:
        return float(self.to_ball(80).mid)

    def to_ball(self, prec: int = 53):
        """Ball enclosing the exact real value."""
        from .ball import Ball

        total = Ball(self._q[0], prec=prec)
        for q, k in zip(self._q[1:], (2, 3, 6)):
            if q:
                total = total + Ball(q, prec=prec) * Ball(k, prec=prec).sqrt()
        return total

    # -- text ---------------------------------------------------------------

    def __str__(self) -> str:
        parts = []
        for q, name in zip(self._q, _BASIS_NAMES):
            if not q:
                continue
            if not name:
                parts.append(str(q))
            elif q == 1:
                parts.append(name)
            elif q == -1:
                parts.append("-" + name)
            else:
                parts.append(f"{q}*{name}")
        if not parts:
            return "0"
        text = parts[0]
        for p in parts[1:]:
            text += " - " + p[1:] if p.startswith("-") else " + " + p
        return text

    def __repr__(self) -> str:
        return f"AlgebraicScalar({self})"

    _TERM = re.compile(r"^([+-]?\s*[0-9/]*)\s*\*?\s*(sqrt\((?:2|3|6)\))?$")

    @classmethod
    def parse(cls, text: str) -> AlgebraicScalar:
        """Inverse of ``str``: e.g. ``"1/2 - 3*sqrt(2) + sqrt(6)"``."""
        s = text.replace(" ", "")
        if not s:
            raise ValueError("empty algebraic literal")
        # split on +/- that are not at the start
        terms = re.findall(r"[+-]?[^+-]+", s)
        q = [Fraction(0)] * 4
        for term in terms:
            m = cls._TERM.match(term)
            if m is None:
                raise ValueError(f"bad algebraic term {term!r} in {text!r}")
            num, root = m.group(1), m.group(2)
            if num in ("", "+"):
                coeff = Fraction(1)
            elif num == "-":
                coeff = Fraction(-1)
            else:
                coeff = Fraction(num)
            idx = 0 if root is None else {"sqrt(2)": 1, "sqrt(3)": 2, "sqrt(6)": 3}[root]
            q[idx] += coeff
        return cls._from_tuple(q)


SQRT2 = AlgebraicScalar(0, 1)
SQRT3 = AlgebraicScalar(0, 0, 1)
SQRT6 = AlgebraicScalar(0, 0, 0, 1)


def _rational_sqrt(q: Fraction):
    from math import isqrt

    n, d = q.numerator, q.denominator
    rn, rd = isqrt(n), isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None
