"""Midpoint-radius real intervals ("balls") with outward rounding.

A :class:`Ball` ``[m +/- r]`` stores its midpoint as an MPFR number at the
ball's working precision and its radius as a Python float that is always an
upper bound of the true error.  Every operation computes the midpoint with
round-to-nearest and folds the rounding error into the radius, so the result
encloses the exact image of every point of the operands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Rational

import gmpy2
from gmpy2 import mpfr

__all__ = [
    "Ball",
    "BallError",
    "PrecisionSpec",
    "boxed",
    "DEFAULT_PREC",
    "rad_up",
    "parse_rational",
]

DEFAULT_PREC = 53

# Radius bookkeeping: a radius expression of at most ~16 round-to-nearest
# float operations on non-negative terms is an upper bound once multiplied by
# _UP; _TINY absorbs subnormal underflow.
_UP = 1.0 + 2.0**-48
_TINY = 2.0**-1060


def rad_up(x: float) -> float:
    """Inflate a float radius so that it bounds the exact expression."""
    return x * _UP + _TINY


class BallError(ArithmeticError):
    """Raised on division by a ball containing zero, sqrt of a negative ball, ..."""


@lru_cache(maxsize=None)
def _ctx(prec: int, rnd: str = "n"):
    mode = {
        "n": gmpy2.RoundToNearest,
        "u": gmpy2.RoundUp,
        "d": gmpy2.RoundDown,
    }[rnd]
    return gmpy2.context(precision=prec, round=mode)


def _exact_op(name: str, p: int, a, b):
    """Round-to-nearest a op b at p bits and the bound on its rounding error (0 when exact)."""
    ctx = _ctx(p)
    ctx.clear_flags()
    m = getattr(ctx, name)(a, b)
    return m, (float(abs(m)) * 2.0**-p + _TINY if ctx.inexact else 0.0)


def _grow(r: float, nonzero: bool = False) -> float:
    """rad_up, keeping an exact zero radius exact.

    ``nonzero`` flags a radius that is positive in exact arithmetic but may
    have underflowed to 0.
    """
    if r:
        return rad_up(r)
    return _TINY if nonzero else 0.0


def _f_up(x) -> float:
    """Float upper bound of a non-negative mpfr."""
    f = float(x)
    if f < x:
        f = math.nextafter(f, math.inf)
    return f


def parse_rational(text) -> Fraction:
    """Parse ``"p/q"``, a decimal string, an int, or a Fraction exactly."""
    if isinstance(text, (int, Rational)):
        return Fraction(text)
    if isinstance(text, float):
        return Fraction(text)
    return Fraction(str(text).strip())


def _exact_mpfr(x, prec: int):
    """Round ``x`` to nearest at ``prec`` bits; return (mid, error bound)."""
    ctx = _ctx(prec)
    if isinstance(x, type(mpfr(0))):
        m = ctx.plus(x)
        if m == x:
            return m, 0.0
        return m, _f_up(abs(_ctx(prec + 64).sub(m, x))) * _UP + _TINY
    if isinstance(x, float):
        if prec >= 53:
            return mpfr(x, prec), 0.0
        m = ctx.plus(mpfr(x, 53))
        return m, rad_up(abs(float(m) - x) if math.isfinite(x) else math.inf)
    if isinstance(x, int):
        m = mpfr(gmpy2.mpz(x), prec)
        if m == x:
            return m, 0.0
        return m, rad_up(float(abs(gmpy2.mpq(x) - gmpy2.mpq(m))))
    if isinstance(x, Rational):
        q = gmpy2.mpq(x.numerator, x.denominator)
        m = mpfr(q, prec)
        err = abs(q - gmpy2.mpq(m))
        if err == 0:
            return m, 0.0
        return m, rad_up(float(err))
    raise TypeError(f"cannot make a Ball from {type(x).__name__}")


class Ball:
    """Real ball ``[mid +/- rad]`` at a fixed binary working precision."""

    __slots__ = ("mid", "rad", "prec")

    def __init__(self, mid=0, rad=0.0, prec: int = DEFAULT_PREC):
        if isinstance(mid, str):
            mid = parse_rational(mid)
        m, err = _exact_mpfr(mid, prec)
        r = float(rad) if not isinstance(rad, (Rational, str)) else float(parse_rational(rad))
        if isinstance(rad, (Rational, str)):
            exact = parse_rational(rad)
            if Fraction(r) < exact:
                r = math.nextafter(r, math.inf)
        if r < 0 or math.isnan(r):
            raise ValueError("ball radius must be >= 0")
        self.mid = m
        self.rad = r + err if err else r
        if err:
            self.rad = rad_up(self.rad)
        self.prec = prec

    @classmethod
    def _raw(cls, mid, rad: float, prec: int) -> Ball:
        b = object.__new__(cls)
        b.mid = mid
        b.rad = rad
        b.prec = prec
        return b

    @classmethod
    def from_endpoints(cls, lo, hi, prec: int = DEFAULT_PREC) -> Ball:
        """Smallest-ish ball containing the exact interval [lo, hi]."""
        lo = lo if isinstance(lo, type(mpfr(0))) else mpfr(gmpy2.mpq(*Fraction(lo).as_integer_ratio()) if not isinstance(lo, float) else lo, max(prec, 53) + 64)
        hi = hi if isinstance(hi, type(mpfr(0))) else mpfr(gmpy2.mpq(*Fraction(hi).as_integer_ratio()) if not isinstance(hi, float) else hi, max(prec, 53) + 64)
        if hi < lo:
            raise ValueError("empty interval")
        m = _ctx(prec).div(_ctx(prec + 2).add(lo, hi), 2)
        up = _ctx(53, "u")
        r = max(up.sub(hi, m), up.sub(m, lo))
        return cls._raw(m, _f_up(r), prec)

    @classmethod
    def pi(cls, prec: int = DEFAULT_PREC) -> Ball:
        lo = _ctx(prec + 10, "d").const_pi()
        hi = _ctx(prec + 10, "u").const_pi()
        return cls.from_endpoints(lo, hi, prec)

    @staticmethod
    def coerce(x, prec: int = DEFAULT_PREC) -> Ball:
        if isinstance(x, Ball):
            return x
        from .algebraic import AlgebraicScalar

        if isinstance(x, AlgebraicScalar):
            return x.to_ball(prec)
        return Ball(x, 0.0, prec)

    # -- accessors ----------------------------------------------------------

    def lower(self):
        return _ctx(self.prec + 8, "d").sub(self.mid, mpfr(self.rad))

    def upper(self):
        return _ctx(self.prec + 8, "u").add(self.mid, mpfr(self.rad))

    def width(self):
        return 2 * mpfr(self.rad)

    def midpoint(self):
        return self.mid

    def magnitude(self):
        """max(|lower|, |upper|), rounded up."""
        return _ctx(self.prec + 8, "u").add(abs(self.mid), mpfr(self.rad))

    def mignitude(self):
        """min(|lower|, |upper|) if 0 is excluded, else 0; rounded down."""
        v = _ctx(self.prec + 8, "d").sub(abs(self.mid), mpfr(self.rad))
        return v if v > 0 else mpfr(0)

    def contains(self, x) -> bool:
        if isinstance(x, Ball):
            return self.lower() <= x.lower() and x.upper() <= self.upper()
        q = gmpy2.mpq(*Fraction(x).as_integer_ratio()) if not isinstance(x, type(mpfr(0))) else x
        return self.lower() <= q <= self.upper()

    def contains_zero(self) -> bool:
        return abs(self.mid) <= self.rad

    def excludes_zero(self) -> bool:
        return not self.contains_zero()

    def overlaps(self, other: Ball) -> bool:
        return self.lower() <= other.upper() and other.lower() <= self.upper()

    def intersect(self, other: Ball) -> Ball:
        lo = max(self.lower(), other.lower())
        hi = min(self.upper(), other.upper())
        if hi < lo:
            raise BallError("disjoint balls")
        return Ball.from_endpoints(lo, hi, max(self.prec, other.prec))

    def union(self, other: Ball) -> Ball:
        return Ball.from_endpoints(min(self.lower(), other.lower()),
                                   max(self.upper(), other.upper()),
                                   max(self.prec, other.prec))

    def with_prec(self, prec: int) -> Ball:
        m, err = _exact_mpfr(self.mid, prec)
        return Ball._raw(m, rad_up(self.rad + err) if err else self.rad, prec)

    def to_floats(self) -> tuple[float, float]:
        """(mid, rad) as doubles with rad still an upper bound."""
        m = float(self.mid)
        diff = abs(_ctx(self.prec + 64).sub(self.mid, m))
        r = self.rad if diff == 0 else rad_up(self.rad + _f_up(diff))
        return m, r

    def __float__(self) -> float:
        return float(self.mid)

    # -- arithmetic ---------------------------------------------------------

    def _other(self, y) -> Ball:
        if isinstance(y, Ball):
            return y
        return Ball.coerce(y, self.prec)

    def __add__(self, y):
        try:
            y = self._other(y)
        except TypeError:
            return NotImplemented
        p = max(self.prec, y.prec)
        m, err = _exact_op("add", p, self.mid, y.mid)
        return Ball._raw(m, _grow(self.rad + y.rad + err), p)

    __radd__ = __add__

    def __neg__(self):
        return Ball._raw(-self.mid, self.rad, self.prec)

    def __pos__(self):
        return self

    def __sub__(self, y):
        try:
            y = self._other(y)
        except TypeError:
            return NotImplemented
        p = max(self.prec, y.prec)
        m, err = _exact_op("sub", p, self.mid, y.mid)
        return Ball._raw(m, _grow(self.rad + y.rad + err), p)

    def __rsub__(self, y):
        try:
            y = self._other(y)
        except TypeError:
            return NotImplemented
        return y - self

    def __mul__(self, y):
        try:
            y = self._other(y)
        except TypeError:
            return NotImplemented
        p = max(self.prec, y.prec)
        m, err = _exact_op("mul", p, self.mid, y.mid)
        am = float(abs(self.mid))
        bm = float(abs(y.mid))
        r = am * y.rad + bm * self.rad + self.rad * y.rad + err
        return Ball._raw(m, _grow(r, bool((am or self.rad) and (bm or y.rad) and (self.rad or y.rad))), p)

    __rmul__ = __mul__

    def sqr(self) -> Ball:
        m, err = _exact_op("mul", self.prec, self.mid, self.mid)
        am = float(abs(self.mid))
        r = 2.0 * am * self.rad + self.rad * self.rad + err
        return Ball._raw(m, _grow(r, bool(self.rad)), self.prec)

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            return NotImplemented
        result = Ball(1, 0.0, self.prec)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def inverse(self) -> Ball:
        if self.contains_zero():
            raise BallError("division by a ball containing zero")
        p = self.prec
        lo, hi = self.lower(), self.upper()
        if lo > 0:
            a = _ctx(p + 8, "d").div(1, hi)
            b = _ctx(p + 8, "u").div(1, lo)
        else:
            a = _ctx(p + 8, "d").div(1, hi)
            b = _ctx(p + 8, "u").div(1, lo)
            a, b = min(a, b), max(a, b)
        return Ball.from_endpoints(a, b, p)

    def __truediv__(self, y):
        if isinstance(y, (int, Rational)) and not isinstance(y, bool):
            if y == 0:
                raise BallError("division by zero")
        try:
            y = self._other(y)
        except TypeError:
            return NotImplemented
        if y.rad == 0 and self.rad == 0:
            # point quotient: one correctly rounded division
            if y.mid == 0:
                raise BallError("division by zero")
            p = max(self.prec, y.prec)
            m, err = _exact_op("div", p, self.mid, y.mid)
            return Ball._raw(m, _grow(err), p)
        return self * y.inverse()

    def __rtruediv__(self, y):
        try:
            y = self._other(y)
        except TypeError:
            return NotImplemented
        return y / self

    def sqrt(self) -> Ball:
        lo = self.lower()
        if lo < 0:
            raise BallError("sqrt of a ball with a negative part")
        p = self.prec
        a = _ctx(p + 8, "d").sqrt(lo)
        b = _ctx(p + 8, "u").sqrt(self.upper())
        return Ball.from_endpoints(a, b, p)

    def _mean_value(self, fn, dfn) -> Ball:
        # f(m + t) in f(m) +/- r * max|f'| with max|f'| <= |f'(m)| + r (f' is 1-Lipschitz)
        p = self.prec
        m = getattr(_ctx(p), fn)(self.mid)
        err = float(abs(m)) * 2.0**-p + 2.0**-p
        if self.rad == 0:
            return Ball._raw(m, rad_up(err), p)
        slope = min(1.0, rad_up(abs(float(getattr(_ctx(53), dfn)(self.mid))) + 2.0**-50 + self.rad))
        r = min(self.rad * slope, 2.0)
        return Ball._raw(m, rad_up(rad_up(r) + err), p)

    def sin(self) -> Ball:
        return self._mean_value("sin", "cos")

    def cos(self) -> Ball:
        return self._mean_value("cos", "sin")

    def atan(self) -> Ball:
        p = self.prec
        m = _ctx(p).atan(self.mid)
        r = min(self.rad, 4.0) + float(abs(m)) * 2.0**-p + 2.0**-p
        return Ball._raw(m, rad_up(r), p)

    def tan(self) -> Ball:
        lo, hi = self.lower(), self.upper()
        half_pi = _ctx(self.prec + 10, "d").const_pi() / 2
        if not (-half_pi < lo and hi < half_pi):
            raise BallError("tan of a ball reaching a pole")
        a = _ctx(self.prec + 8, "d").tan(lo)
        b = _ctx(self.prec + 8, "u").tan(hi)
        return Ball.from_endpoints(a, b, self.prec)

    def __abs__(self):
        if self.contains_zero():
            return Ball.from_endpoints(mpfr(0), self.magnitude(), self.prec)
        return -self if self.mid < 0 else self

    # -- comparisons are structural; use lower()/upper() for order -----------

    def __eq__(self, other):
        if not isinstance(other, Ball):
            return NotImplemented
        return self.mid == other.mid and self.rad == other.rad

    def __hash__(self):
        return hash((float(self.mid), self.rad))

    def __repr__(self) -> str:
        return f"[{float(self.mid):.17g} +/- {self.rad:.3g}]"

    def to_json(self) -> dict:
        """{"m": decimal-string, "r": decimal-string}; m exact, r an upper bound."""
        m = gmpy2.mpq(self.mid)
        return {"m": _mpq_to_decimal(m, self.prec), "r": repr(self.rad)}

    @classmethod
    def from_json(cls, data: dict, prec: int = DEFAULT_PREC) -> Ball:
        return cls(Fraction(data["m"]), Fraction(data["r"]), prec)


def _mpq_to_decimal(q, prec: int) -> str:
    """Exact decimal expansion of a dyadic rational."""
    num, den = int(q.numerator), int(q.denominator)
    if den == 1:
        return str(num)
    k = den.bit_length() - 1  # den == 2**k
    digits = num * 5**k
    sign = "-" if digits < 0 else ""
    s = str(abs(digits)).rjust(k + 1, "0")
    return f"{sign}{s[:-k]}.{s[-k:]}".rstrip("0")


@dataclass(frozen=True)
class PrecisionSpec:
    """Binary system precision: boxed values have width exactly 2**-sigma."""

    sigma: int

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be a positive integer")

    @property
    def width(self) -> Fraction:
        return Fraction(1, 2**self.sigma)


def boxed(value, spec: PrecisionSpec | int, prec: int = DEFAULT_PREC) -> Ball:
    """The box ``[value]_sigma``: centre on the 2**-sigma grid, radius 2**-(sigma+1)."""
    sigma = spec.sigma if isinstance(spec, PrecisionSpec) else int(spec)
    q = parse_rational(value)
    scale = 2**sigma
    centre = Fraction(round(q * scale), scale)
    return Ball(centre, Fraction(1, 2 * scale), max(prec, sigma + 2))
