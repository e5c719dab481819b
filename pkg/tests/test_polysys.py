import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spmcert.geometry import DesignParams, constraint_f
from spmcert.numerics import SQRT2, AlgebraicScalar, Ball
from spmcert.polysys import (
    VARS,
    Poly,
    build_system,
    canonical_system,
    dump_system,
    leg_coefficients,
    leg_quadratic,
    normalize_poly,
    parse_system,
    propagate_uncertainty,
    reference_system,
)

half = st.floats(min_value=-1.4, max_value=1.4)


def test_vars_order():
    assert VARS == ("j1", "j2", "j3", "o1", "o2", "o3")


def test_poly_arithmetic():
    x, y = Poly.var("o1"), Poly.var("o2")
    p = (x + y) * (x - y)
    assert p == x * x - y * y
    assert p.degree("o1") == 2 and not p.depends_on("j1")
    assert p.diff("o1") == 2 * x
    assert p.subs({"o1": 3})(( 0, 0, 0, 0, 2, 0)) == 5
    assert (p - p).is_zero()


def test_canonical_matches_reference():
    ref = reference_system()
    can = canonical_system()
    assert len(list(ref)) == 3
    for i in range(3):
        assert can[i] == ref[i]


def test_reference_text_round_trip():
    ref = reference_system()
    again = parse_system(dump_system(ref))
    assert all(again[i] == ref[i] for i in range(3))
    with pytest.raises(ValueError):
        parse_system("1 : (1, 2)\n")


def test_structure():
    sys_ = canonical_system()
    for i in range(3):
        p = sys_[i]
        assert p.degree(f"j{i + 1}") == 2
        for k in range(3):
            if k != i:
                assert not p.depends_on(f"j{k + 1}")
        for v in ("o1", "o2", "o3"):
            assert p.degree(v) <= 2


def test_normalize_idempotent():
    p = build_system(kind="exact")[0]
    n, _ = normalize_poly(p)
    n2, s2 = normalize_poly(n)
    assert n2 == n


@given(half, half, half, half, half, half)
def test_substitution(t1, t2, t3, c1, c2, c3):
    """Polynomials at tangent half-angles equal f (1 + j_i^2) prod (1 + o_k^2)."""
    th = (t1 + 1.6, t2 + 1.6, t3 + 1.6)
    chi = (c1 * 0.5, c2 * 0.5, c3)
    j = [math.tan(t / 2) for t in th]
    o = [math.tan(c / 2) for c in chi]
    sys_ = build_system(kind="float")
    f = constraint_f(th, chi)
    d = (1 + o[0] ** 2) * (1 + o[1] ** 2) * (1 + o[2] ** 2)
    for i in range(3):
        want = f[i] * (1 + j[i] ** 2) * d
        got = sys_[i](tuple(j) + tuple(o))
        assert abs(got - want) <= 1e-12 * max(1.0, abs(want), d * (1 + j[i] ** 2))


def test_exact_build_ratio_at_rational_point():
    """Normalization removes a positive factor that depends on o only."""
    raw = build_system(kind="exact")
    can = canonical_system()
    o = (Fraction(1, 11), Fraction(-1, 13), Fraction(1, 17))
    j1 = (Fraction(1, 3), Fraction(-2, 5), Fraction(1, 7))
    j2 = (Fraction(-3, 2), Fraction(5, 4), Fraction(2, 9))
    for i in range(3):
        r = raw[i](j1 + o) / can[i](j1 + o)
        assert r.sign() == 1
        assert r == raw[i](j2 + o) / can[i](j2 + o)


def test_leg_quadratic_equilibrium():
    q = leg_quadratic(1, (0, 0, 0))
    assert q.a == -SQRT2 and q.b == 0 and q.c == SQRT2
    assert q(1) == 0 and q(-1) == 0
    assert q.discriminant == 8
    with pytest.raises(ValueError):
        leg_coefficients(4)


def test_leg_quadratic_ball():
    o = (Ball(0.1, 1e-3), Ball(-0.05, 1e-3), Ball(0.0))
    q = leg_quadratic(2, o, kind="exact")
    qf = leg_quadratic(2, (0.1, -0.05, 0.0), kind="float")
    # the float system is the raw one, so compare normalized roots rather than coefficients
    jb = (-q.b - q.discriminant.sqrt()) / (2 * q.a)
    jf = (-qf.b - math.sqrt(qf.discriminant)) / (2 * qf.a)
    assert jb.contains(jf)


def test_propagation_encloses_perturbed_designs():
    r = 1e-5
    sys_, rmax = propagate_uncertainty(r=r)
    assert 0 < rmax < 1e-3
    naive, rnaive = propagate_uncertainty(r=r, method="naive")
    assert rmax <= rnaive
    rng = np.random.default_rng(2)
    base = DesignParams()
    for _ in range(5):
        p = base
        for name in ("alpha1", "alpha2", "beta2", "eta1", "eta2", "eta3"):
            p = p.with_angle(name, p.angle(name).k + Fraction(float(rng.uniform(-r, r)) / math.pi).limit_denominator(10**12))
        pf = build_system(p, "float")
        for i in range(3):
            for e, c in pf[i].sorted_terms():
                assert sys_[i].terms.get(e, Ball(0)).contains(c)


def test_propagation_zero_radius_is_tight():
    sys_, rmax = propagate_uncertainty(r=0.0)
    assert rmax < 1e-12
    with pytest.raises(ValueError):
        propagate_uncertainty(r=-1.0)


def test_non_table_angle_needs_ball():
    p = DesignParams().with_angle("alpha2", Fraction(1, 5))
    assert build_system(p).kind != "exact"
    with pytest.raises(Exception):
        build_system(p, "exact")
