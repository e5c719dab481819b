import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spmcert.geometry import (
    DesignParams,
    ExactAngleError,
    JointVector,
    Orientation,
    PiAngle,
    base_vector,
    constraint_f,
    dot,
    intermediate_vector,
    jacobians,
    matmul,
    platform_vector,
    rot,
)
from spmcert.numerics import SQRT2, Ball

ang = st.floats(min_value=-3.0, max_value=3.0)
CANON = DesignParams()


def _norm(v):
    return math.sqrt(sum(float(x) ** 2 for x in v))


def test_rot_identity_and_axis():
    r = rot("z", PiAngle(0))
    assert r == ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    v = [sum(rot("x", PiAngle(Fraction(1, 2)))[i][k] * (0, 0, 1)[k] for k in range(3)) for i in range(3)]
    assert v == [0, -1, 0]
    t = rot("z", PiAngle(Fraction(2, 3)))
    assert t[0][0] + t[1][1] + t[2][2] == 0
    with pytest.raises(ValueError):
        rot("w", 0.1)


@given(ang)
def test_rot_orthonormal(a):
    for axis in "xyz":
        r = np.array(rot(axis, a), dtype=float)
        assert np.allclose(r.T @ r, np.eye(3), atol=1e-14)


def test_exact_rot_orthonormal():
    r = rot("x", PiAngle(Fraction(1, 4)))
    rt = tuple(zip(*r))
    assert matmul(rt, r) == ((1, 0, 0), (0, 1, 0), (0, 0, 1))


def test_exact_table_rejects():
    with pytest.raises(ExactAngleError):
        PiAngle(Fraction(1, 5)).exact_sincos()


def test_base_vector():
    for i in (1, 2, 3):
        assert base_vector(i) == (0, 0, -1)
    p = CANON.with_angle("beta1", "1/2")
    u = base_vector(1, p)
    assert u == (0, 1, 0)
    with pytest.raises(ValueError):
        base_vector(4)


@given(ang, ang)
def test_base_vector_unit(b1, eta):
    p = CANON.with_angle("beta1", Fraction(b1).limit_denominator(1000)).with_angle(
        "eta1", Fraction(eta).limit_denominator(1000))
    assert abs(_norm(base_vector(1, p, kind="float")) - 1) < 1e-12


def test_intermediate_vector_example():
    w = intermediate_vector(1, PiAngle(Fraction(1, 2)))
    assert w == (SQRT2 / 2, 0, -SQRT2 / 2)


@given(ang, st.sampled_from([1, 2, 3]))
def test_intermediate_vector_props(t, i):
    w = intermediate_vector(i, t)
    u = base_vector(i, kind="float")
    assert abs(_norm(w) - 1) < 1e-12
    assert abs(math.acos(max(-1.0, min(1.0, float(dot(w, u))))) - math.pi / 4) < 1e-7


def test_platform_vector_example():
    assert platform_vector(1, (PiAngle(0),) * 3) == (0, 1, 0)


@given(ang, ang, ang, st.floats(min_value=-3, max_value=3))
def test_platform_vector_props(c1, c2, c3, g):
    v = platform_vector(2, (c1, c2, c3))
    assert abs(_norm(v) - 1) < 1e-12
    vz0 = platform_vector(2, (0.0, 0.0, 0.0))[2]
    assert abs(platform_vector(2, (0.0, 0.0, g))[2] - vz0) < 1e-14


def test_constraint_equilibrium_exact():
    f = constraint_f((PiAngle(Fraction(1, 2)),) * 3, (PiAngle(0),) * 3)
    assert f == (0, 0, 0)


@given(ang, ang, ang, ang, ang, ang)
def test_constraint_direct(t1, t2, t3, c1, c2, c3):
    th, chi = (t1, t2, t3), (c1, c2, c3)
    f = constraint_f(th, chi)
    for i in (1, 2, 3):
        w = intermediate_vector(i, th[i - 1])
        v = platform_vector(i, chi)
        assert abs(f[i - 1] - (dot(w, v) - math.cos(math.pi / 2))) < 1e-14
        assert abs(f[i - 1] - dot(w, v)) < 1e-15


def test_ball_encloses_float():
    th = tuple(Ball(x, 1e-6) for x in (1.4, 1.6, 1.5))
    chi = tuple(Ball(x, 1e-6) for x in (0.1, -0.2, 0.3))
    fb = constraint_f(th, chi)
    ff = constraint_f(tuple(float(x.mid) for x in th), tuple(float(x.mid) for x in chi))
    for b, x in zip(fb, ff):
        assert b.contains(x)


def _fd(th, chi, h=1e-7):
    a = np.zeros((3, 3))
    b = np.zeros((3, 3))
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        a[:, k] = (np.array(constraint_f(th, chi + e)) - np.array(constraint_f(th, chi - e))) / (2 * h)
        b[:, k] = (np.array(constraint_f(th + e, chi)) - np.array(constraint_f(th - e, chi))) / (2 * h)
    return a, b


def test_jacobians_fd_100():
    rng = np.random.default_rng(11)
    for _ in range(100):
        th = rng.uniform(-3, 3, 3)
        chi = rng.uniform(-1, 1, 3)
        a, b = (np.array(m, dtype=float) for m in jacobians(tuple(th), tuple(chi)))
        fa, fb = _fd(th, chi)
        assert np.max(np.abs(a - fa)) <= 1e-6
        assert np.max(np.abs(b - fb)) <= 1e-6
        assert np.all(b[~np.eye(3, dtype=bool)] == 0)


def test_jacobians_equilibrium_regular():
    a, b = (np.array(m, dtype=float) for m in jacobians((math.pi / 2,) * 3, (0.0, 0.0, 0.0)))
    assert abs(np.linalg.det(a)) > 1e-3 and abs(np.linalg.det(b)) > 1e-3


def test_orientation_and_joints():
    o = Orientation.from_degrees(20, -10, 5)
    assert np.allclose(Orientation.from_tan(o.o).chi, o.chi)
    j = JointVector.from_degrees(90, 60, 120)
    assert np.allclose(JointVector.from_tan(j.j).theta, j.theta)
    with pytest.raises(ValueError):
        Orientation((math.pi, 0.0, 0.0)).o


def test_design_params_text():
    p = DesignParams.from_text("# comment\nalpha2 = 1/3\nr_alpha1 = 1e-5\n")
    assert p.alpha2 == PiAngle(Fraction(1, 3))
    assert p.radius("alpha1") == 1e-5
    assert DesignParams.from_text("") == DesignParams()
    assert DesignParams.from_text(p.to_text()) == p
    with pytest.raises(ValueError):
        DesignParams.from_text("gamma = 1")
    u = DesignParams().with_uncertainty(1e-5)
    assert u.radius("beta1") == 0 and u.radius("eta2") == 1e-5
    assert not u.is_exact() and DesignParams().is_exact()
