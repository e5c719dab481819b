import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spmcert.geometry import DesignParams, Orientation, constraint_f
from spmcert.igm import (
    LABELS,
    REFERENCE_STOPS,
    NoRealModeError,
    in_Q0star,
    in_Qstar,
    joint_stop_degrees,
    pave_prescribed_workspace,
    plus_leaf,
    solve_igm,
)
from spmcert.numerics import SQRT2, Ball

deg = st.floats(min_value=-20, max_value=20)


@pytest.fixture(scope="module")
def paving():
    return pave_prescribed_workspace()


def test_equilibrium_exact():
    m = solve_igm((0, 0, 0))
    assert m.count == 8 and len(LABELS) == 8
    assert m["+++"] == (1, 1, 1)
    assert m["---"] == (-1, -1, -1)
    assert m.theta_degrees("+++") == (90.0, 90.0, 90.0)


def test_double_root_counts_once():
    m = solve_igm((SQRT2 - 1, 0, 0))
    assert m.double_legs == (1,)
    assert m.count == 4
    assert m["+--"][0] == m["---"][0]


def test_no_real_mode():
    with pytest.raises(NoRealModeError):
        solve_igm((Fraction(3, 5), 0, 0))
    with pytest.raises(NoRealModeError):
        plus_leaf((0.6, 0.0, 0.0))
    with pytest.raises(ValueError):
        solve_igm((0, 0))


@given(deg, deg, st.floats(min_value=-60, max_value=60))
def test_all_modes_satisfy_closure(c1, c2, c3):
    o = Orientation.from_degrees(c1, c2, c3)
    m = solve_igm(o.o)
    for lab in LABELS:
        f = constraint_f(m.theta[lab], o.chi)
        assert max(abs(x) for x in f) < 1e-12


@given(deg, deg)
def test_plus_leaf_matches_solver(c1, c2):
    o = Orientation.from_degrees(c1, c2, 0).o
    assert np.allclose(plus_leaf(o), solve_igm(o)["+++"], rtol=0, atol=1e-14)


def test_ball_modes_enclose_float():
    ob = (Ball(0.1, 1e-6), Ball(-0.05, 1e-6), Ball(0.02, 1e-6))
    mb = solve_igm(ob)
    mf = solve_igm((0.1, -0.05, 0.02))
    for lab in ("+++", "-+-"):
        for b, x in zip(mb[lab], mf[lab]):
            assert b.contains(x)


def test_exact_params_with_radii_fall_back_to_balls():
    p = DesignParams().with_uncertainty(1e-6)
    m = solve_igm((0, 0, 0), p)
    assert all(isinstance(x, Ball) for x in m["+++"])
    assert all(b.contains(1) for b in m["+++"])


def test_paving_stops(paving):
    assert joint_stop_degrees(paving.stops) == REFERENCE_STOPS
    assert all(d > 0 for d in paving.stops.min_delta)
    for lo, hi in zip(paving.stops.j_min, paving.stops.j_max):
        assert 0 < lo < 1 < hi


def test_paving_encloses_samples(paving):
    rng = np.random.default_rng(7)
    half = 0.177
    for _ in range(200):
        o = (rng.uniform(-half, half), rng.uniform(-half, half), 0.0)
        j = plus_leaf(o)
        for i in range(3):
            assert paving.stops.j_min[i] <= j[i] <= paving.stops.j_max[i]


def test_paving_outputs(paving):
    csv = paving.stops.to_csv()
    assert csv.startswith("# joint stops v1")
    assert len(csv.strip().splitlines()) == 5
    log = json.loads(paving.cell_log())
    assert len(log["cells"]) == 35 * 35


def test_stop_rounding_is_outward():
    class S:
        j_min = tuple(math.tan(math.radians(x) / 2) for x in (67.0, 61.999999, 50.5))
        j_max = tuple(math.tan(math.radians(x) / 2) for x in (113.0, 130.000001, 119.2))
    lo_hi = joint_stop_degrees(S)
    assert lo_hi[1] == (61, 131)
    assert lo_hi[2] == (50, 120)


def test_q0star():
    assert in_Q0star((90, 90, 90), 0.0, degrees=True)
    assert not in_Q0star((140, 90, 90), 0.0, degrees=True)
    assert in_Q0star((100, 100, 100), 10.0, degrees=True)
    r = [math.radians(x) for x in (90, 90, 90)]
    assert in_Q0star(r, 0.0)


def test_qstar():
    assert in_Qstar(tuple(math.radians(x) for x in (90, 90, 90)))
    o = Orientation.from_degrees(20, 20, 0).o
    th = solve_igm(o).theta["+++"]
    assert in_Qstar(th)
    o = Orientation.from_degrees(25, 0, 0).o
    th = solve_igm(o).theta["+++"]
    assert not in_Qstar(th)
