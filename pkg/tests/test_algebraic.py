from fractions import Fraction

import gmpy2
import pytest
from gmpy2 import mpfr
from hypothesis import given
from hypothesis import strategies as st

from spmcert.numerics import SQRT2, SQRT3, SQRT6, AlgebraicScalar

rat = st.fractions(min_value=-50, max_value=50, max_denominator=40)
alg = st.builds(AlgebraicScalar, rat, rat, rat, rat)
nonzero = alg.filter(lambda a: not a.is_zero())


def test_basis_product():
    assert SQRT2 * SQRT3 == SQRT6
    assert SQRT2 * SQRT6 == 2 * SQRT3
    assert SQRT3 * SQRT6 == 3 * SQRT2
    assert SQRT6 * SQRT6 == 6


def test_conjugate_identity():
    assert (1 + SQRT2) * (1 - SQRT2) == -1


def test_printed_constant_term():
    assert AlgebraicScalar(2) * SQRT2 == AlgebraicScalar(0, 2)


def test_division_by_zero():
    with pytest.raises(ZeroDivisionError):
        SQRT2 / AlgebraicScalar(0)
    with pytest.raises(ZeroDivisionError):
        AlgebraicScalar(0).inverse()


@given(alg, nonzero)
def test_div_roundtrip(a, b):
    assert a * b / b == a


@given(alg, alg, alg)
def test_ring_laws(a, b, c):
    assert (a + b) * c == a * c + b * c
    assert (a * b) * c == a * (b * c)
    assert a - a == 0


@given(alg)
def test_text_roundtrip(a):
    assert AlgebraicScalar.parse(str(a)) == a


@given(alg)
def test_ball_enclosure_sound(a):
    b = a.to_ball(64)
    with gmpy2.context(gmpy2.get_context(), precision=400):
        v = mpfr(0)
        for q, k in zip(a.coeffs, (1, 2, 3, 6)):
            v = v + mpfr(q.numerator) / q.denominator * gmpy2.sqrt(mpfr(k))
    assert b.lower() <= v <= b.upper()


@given(nonzero)
def test_sign_matches_float(a):
    s = a.sign()
    assert s in (-1, 1)
    f = float(a)
    if abs(f) > 1e-9:
        assert (f > 0) == (s > 0)


@pytest.mark.parametrize("q,expected", [
    (8, AlgebraicScalar(0, 2)),
    (32, AlgebraicScalar(0, 4)),
    (Fraction(27, 4), AlgebraicScalar(0, 0, Fraction(3, 2))),
    (24, AlgebraicScalar(0, 0, 0, 2)),
    (9, AlgebraicScalar(3)),
    (0, AlgebraicScalar(0)),
])
def test_exact_sqrt(q, expected):
    assert AlgebraicScalar(q).sqrt() == expected


def test_exact_sqrt_outside_field():
    with pytest.raises(ValueError):
        AlgebraicScalar(5).sqrt()
    with pytest.raises(ValueError):
        AlgebraicScalar(-4).sqrt()
