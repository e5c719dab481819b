import random
from fractions import Fraction

import gmpy2
import pytest
from gmpy2 import mpfr
from hypothesis import given
from hypothesis import strategies as st

from spmcert.numerics import Ball, BallError, PrecisionSpec, boxed

fin = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False)
rad = st.floats(min_value=0, max_value=10, allow_nan=False)


def _points(b, k=20, rng=random.Random(7)):
    lo, hi = float(b.lower()), float(b.upper())
    pts = [lo, hi, float(b.mid)] + [rng.uniform(lo, hi) for _ in range(k)]
    return [p for p in pts if b.contains(p)]


def test_point_sum():
    s = Ball(1) + Ball(1)
    assert s.mid == 2 and s.rad == 0


def test_sqrt_endpoints():
    b = Ball(4, 0.01).sqrt()
    with gmpy2.context(gmpy2.get_context(), precision=300):
        assert b.lower() <= gmpy2.sqrt(mpfr("3.99")) and gmpy2.sqrt(mpfr("4.01")) <= b.upper()


def test_errors():
    with pytest.raises(BallError):
        Ball(1) / Ball(0, 1)
    with pytest.raises(BallError):
        Ball(-1, 0.5).sqrt()
    with pytest.raises(ValueError):
        Ball(0, -1)


def test_measures():
    b = Ball(-3, 1)
    assert b.width() == 2
    assert b.magnitude() == 4 and b.mignitude() == 2
    assert Ball(0, 1).mignitude() == 0


@pytest.mark.parametrize("value,sigma", [(1, 9), (0, 9), ("177/1000", 20)])
def test_boxed(value, sigma):
    b = boxed(value, PrecisionSpec(sigma))
    assert Fraction(*b.width().as_integer_ratio()) == Fraction(1, 2**sigma)
    assert b.contains(Fraction(value))
    assert abs(Fraction(*b.mid.as_integer_ratio()) - Fraction(value)) <= Fraction(1, 2 ** (sigma + 1))


def test_boxed_one():
    b = boxed(1, 9)
    assert b.mid == 1 and b.rad == 1 / 1024


def test_precision_spec_rejects():
    with pytest.raises(ValueError):
        PrecisionSpec(0)


def test_json_roundtrip():
    b = Ball("1/3", 1e-10, prec=100)
    c = Ball.from_json(b.to_json(), prec=100)
    assert c.mid == b.mid and c.rad == b.rad


def test_rational_midpoint_rounding_counted():
    b = Ball("1/3", prec=60)
    assert b.rad > 0 and b.contains(Fraction(1, 3))


@given(fin, rad, fin, rad, st.sampled_from(["add", "sub", "mul", "div"]))
def test_inclusion(xm, xr, ym, yr, op):
    x, y = Ball(xm, xr), Ball(ym, yr)
    fn = {"add": lambda a, b: a + b, "sub": lambda a, b: a - b,
          "mul": lambda a, b: a * b, "div": lambda a, b: a / b}[op]
    if op == "div" and y.contains_zero():
        with pytest.raises(BallError):
            fn(x, y)
        return
    z = fn(x, y)
    for p in _points(x, 5):
        for q in _points(y, 5):
            exact = fn(Fraction(p), Fraction(q))
            assert z.contains(exact)


@given(st.floats(min_value=-20, max_value=20), st.floats(min_value=0, max_value=3))
def test_sin_cos_inclusion(m, r):
    x = Ball(m, r, prec=80)
    s, c = x.sin(), x.cos()
    for p in _points(x, 10):
        with gmpy2.context(gmpy2.get_context(), precision=200):
            assert s.contains(gmpy2.sin(mpfr(p)))
            assert c.contains(gmpy2.cos(mpfr(p)))


@given(st.floats(min_value=0, max_value=1e4), st.floats(min_value=0, max_value=1))
def test_sqrt_inclusion(m, r):
    x = Ball(m + r, r)
    y = x.sqrt()
    for p in _points(x, 10):
        with gmpy2.context(gmpy2.get_context(), precision=200):
            assert y.contains(gmpy2.sqrt(mpfr(p)))


@given(st.floats(min_value=-5, max_value=5), st.floats(min_value=0, max_value=2))
def test_atan_inclusion(m, r):
    x = Ball(m, r)
    y = x.atan()
    for p in _points(x, 10):
        with gmpy2.context(gmpy2.get_context(), precision=200):
            assert y.contains(gmpy2.atan(mpfr(p)))


def test_precision_knob():
    a = Ball("1/3", prec=200)
    assert a.rad < 1e-59
    b = Ball("1/3", prec=30)
    assert b.rad > 1e-11


def test_pi_encloses():
    p = Ball.pi(100)
    with gmpy2.context(gmpy2.get_context(), precision=300):
        assert p.lower() <= gmpy2.const_pi() <= p.upper()
