"""Vectorised double-precision balls and first-order dual numbers over them.

Used by the parameter-space branch and bound, which evaluates thousands of
boxes at once.  Products and sums follow the same error model as the ball
kernel.  sin and cos rely on the platform libm being accurate to one ulp; an
extra 2**-50 absolute slack is added on top of that.
"""

from __future__ import annotations

import numpy as np

__all__ = ["BallVec", "Dual"]

_EPS = 2.0**-53
_UP = 1.0 + 2.0**-48
_TINY = 2.0**-1060
_LIBM = 2.0**-50


def _up(x):
    return x * _UP + _TINY


class BallVec:
    """Arrays of balls [m +/- r]."""

    __slots__ = ("m", "r")

    def __init__(self, m, r=None):
        self.m = np.asarray(m, dtype=np.float64)
        self.r = np.zeros_like(self.m) if r is None else np.asarray(r, dtype=np.float64)

    @staticmethod
    def _c(y):
        if isinstance(y, BallVec):
            return y
        return BallVec(np.float64(y), np.float64(0.0))

    def __add__(self, y):
        y = self._c(y)
        m = self.m + y.m
        return BallVec(m, _up((self.r + y.r) + np.abs(m) * _EPS))

    __radd__ = __add__

    def __neg__(self):
        return BallVec(-self.m, self.r)

    def __sub__(self, y):
        return self + (-self._c(y))

    def __rsub__(self, y):
        return self._c(y) + (-self)

    def __mul__(self, y):
        y = self._c(y)
        m = self.m * y.m
        r = ((np.abs(self.m) * y.r + np.abs(y.m) * self.r) + self.r * y.r) + np.abs(m) * _EPS
        return BallVec(m, _up(r))

    __rmul__ = __mul__

    def inv(self):
        """1/x; entries whose ball contains 0 get mid nan (check ``excludes_zero`` first)."""
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            m = 1.0 / self.m
            a = np.abs(self.m)
            gap = np.nextafter(a - self.r, -np.inf)
            denom = np.nextafter(a * gap, -np.inf)
            r = _up(_up(self.r / denom) + np.abs(m) * _EPS)
        bad = ~(gap > 0)
        m = np.where(bad, np.nan, m)
        r = np.where(bad, np.inf, r)
        return BallVec(m, r)

    def excludes_zero(self):
        return np.abs(self.m) > self.r * _UP + _TINY

    def sin(self):
        m = np.sin(self.m)
        slope = np.minimum(1.0, np.abs(np.cos(self.m)) + self.r + _LIBM)
        r = np.minimum(self.r * slope, 2.0) + np.abs(m) * 2 * _EPS + _LIBM
        return BallVec(m, _up(r))

    def cos(self):
        m = np.cos(self.m)
        slope = np.minimum(1.0, np.abs(np.sin(self.m)) + self.r + _LIBM)
        r = np.minimum(self.r * slope, 2.0) + np.abs(m) * 2 * _EPS + _LIBM
        return BallVec(m, _up(r))

    def lower(self):
        return np.nextafter(self.m - self.r, -np.inf)

    def upper(self):
        return np.nextafter(self.m + self.r, np.inf)

    def mag(self):
        return np.nextafter(np.abs(self.m) + self.r, np.inf)


class Dual:
    """Value ball plus gradient balls with respect to d box coordinates."""

    __slots__ = ("v", "g")

    def __init__(self, v: BallVec, g: list):
        self.v = v
        self.g = g

    @classmethod
    def variable(cls, m, r, k: int, d: int) -> Dual:
        v = BallVec(m, r)
        zero = BallVec(np.zeros_like(v.m))
        one = BallVec(np.ones_like(v.m))
        return cls(v, [one if t == k else zero for t in range(d)])

    @staticmethod
    def _c(y):
        if isinstance(y, Dual):
            return y
        return Dual(BallVec._c(y), None)

    def __add__(self, y):
        y = self._c(y)
        if self.g is None or y.g is None:
            g = self.g if y.g is None else y.g
        else:
            g = [a + b for a, b in zip(self.g, y.g)]
        return Dual(self.v + y.v, g)

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.v, None if self.g is None else [-a for a in self.g])

    def __sub__(self, y):
        return self + (-self._c(y))

    def __rsub__(self, y):
        return self._c(y) + (-self)

    def __mul__(self, y):
        y = self._c(y)
        if self.g is None and y.g is None:
            g = None
        elif self.g is None:
            g = [self.v * b for b in y.g]
        elif y.g is None:
            g = [a * y.v for a in self.g]
        else:
            g = [a * y.v + self.v * b for a, b in zip(self.g, y.g)]
        return Dual(self.v * y.v, g)

    __rmul__ = __mul__

    def sin(self):
        c = self.v.cos()
        return Dual(self.v.sin(), None if self.g is None else [c * a for a in self.g])

    def cos(self):
        s = self.v.sin()
        return Dual(self.v.cos(), None if self.g is None else [-(s * a) for a in self.g])
