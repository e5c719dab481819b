"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line (printed in the terminal summary and,
when run as a script, directly).  Tolerances are fixed; nothing here is
relaxed to make a criterion pass.
"""

import math
import os
import random
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from spmcert.geometry import DesignParams, Orientation
from spmcert.gci import gci
from spmcert.igm import REFERENCE_STOPS, joint_stop_degrees, pave_prescribed_workspace, plus_leaf, solve_igm
from spmcert.kantorovich import FGMSystem, certified_fgm, certify_workspace_scan, kantorovich_test
from spmcert.numerics import SQRT2, Ball, boxed
from spmcert.polysys import build_system, normalize_system, propagate_uncertainty, reference_system
from spmcert.variety import eval_wc, margin_search, scan_workspace

RESULTS = []


def report(n: int, name: str, ok: bool, detail: str):
    line = f"criterion {n:2d} [{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    RESULTS.append(line)
    if __name__ == "__main__":
        print(line)
    return ok


def _rel(x, ref):
    return abs(x - ref) / abs(ref)


def test_c01_equilibrium_exact():
    t = time.perf_counter()
    m = solve_igm((0, 0, 0))
    dt = time.perf_counter() - t
    ok = m.count == 8 and m["+++"] == (1, 1, 1) and dt < 1.0
    assert report(1, "equilibrium exactness", ok,
                  f"{m.count} modes, (+++) = {tuple(str(x) for x in m['+++'])}, {dt:.3f} s (< 1 s)")


def test_c02_reference_system():
    t = time.perf_counter()
    sys_ = normalize_system(build_system(DesignParams(), "exact"))
    ref = reference_system()
    same = [sys_[i] == ref[i] for i in range(3)]
    dt = time.perf_counter() - t
    ok = all(same) and dt < 10.0
    assert report(2, "reference system match", ok, f"per-equation exact equality {same}, {dt:.2f} s (< 10 s)")


def test_c03_type1_locus():
    roots = (-1 + SQRT2, -1 - SQRT2, 1 + SQRT2, 1 - SQRT2)
    zeros = [eval_wc((o1, 0, 0))[0] == 0 for o1 in roots]
    rep = scan_workspace(n=35)
    mig = rep.min_delta_mig()
    ok = all(zeros) and rep.clear and bool(np.all(mig > 0))
    assert report(3, "type-1 locus", ok,
                  f"W_c[0] exact zero at 4 roots {zeros}; 35x35 scan {rep.verdict}, min delta mig {mig.min():.6g}")


def test_c04_paving():
    t = time.perf_counter()
    a = pave_prescribed_workspace()
    dt = time.perf_counter() - t
    b = pave_prescribed_workspace()
    stable = (np.array_equal(a.j_mid, b.j_mid) and np.array_equal(a.j_rad, b.j_rad)
              and np.array_equal(a.delta_mid, b.delta_mid) and a.stops == b.stops)
    s = a.stops
    refs = (("min j1", s.j_min[0], 0.6693723886), ("max j2", s.j_max[1], 2.127382005),
            ("min delta p3", s.min_delta[2], 10.01625750))
    rels = [(name, v, _rel(v, r)) for name, v, r in refs]
    stops = joint_stop_degrees(s)
    ok = all(e <= 1e-3 for _, _, e in rels) and stops == REFERENCE_STOPS and stable and dt < 60
    detail = "; ".join(f"{n} {v:.10g} (rel {e:.2e})" for n, v, e in rels)
    assert report(4, "paving and joint stops", ok,
                  f"{detail}; rel tol 1e-3; stops {stops}; bit-stable {stable}; {dt:.2f} s")


def test_c05_uncertainty():
    t = time.perf_counter()
    _, rmax = propagate_uncertainty(r=1e-5)
    dt = time.perf_counter() - t
    ok = 3e-5 <= rmax <= 1.05e-4 and dt < 10
    assert report(5, "uncertainty propagation", ok, f"max coefficient radius {rmax:.5e} in [3e-5, 1.05e-4]; {dt:.2f} s")


def test_c06_kantorovich_scan():
    t = time.perf_counter()
    rep = certify_workspace_scan(sigma=9, step=Fraction(1, 100))
    dt = time.perf_counter() - t
    workers = min(8, os.cpu_count() or 1)
    t = time.perf_counter()
    rep8 = certify_workspace_scan(sigma=9, step=Fraction(1, 100), workers=workers)
    dt8 = time.perf_counter() - t
    ok = rep.all_passed and rep.min_margin > 0 and dt < 600 and dt8 < 120 and rep8.all_passed
    assert report(6, "kantorovich scan", ok,
                  f"{rep.pass_count}/{rep.count} pass, min margin {rep.min_margin:.6g}; "
                  f"{dt:.2f} s single, {dt8:.2f} s with {workers} workers")


def test_c07_round_trip():
    rng = random.Random(20261015)
    half = math.radians(20)
    worst, bad = -math.inf, 0
    for _ in range(1000):
        chi = (rng.uniform(-half, half), rng.uniform(-half, half), 0.0)
        o = Orientation(chi).o
        res = certified_fgm(plus_leaf(o))
        for b, x in zip(res.o, o):
            err = abs(float(b.mid) - x)
            worst = max(worst, err - b.rad)
            if err > b.rad + 1e-9:
                bad += 1
        bad += sum(not r.contains(0) for r in res.residual)
    assert report(7, "certified round trip", bad == 0,
                  f"1000 orientations, {bad} violations, worst excess over radius {worst:.3g} (<= 1e-9)")


def test_c08_gci():
    t = time.perf_counter()
    r = gci(n=80)
    dt = time.perf_counter() - t
    ok = 0.925 <= r.gci <= 0.935 and 0.885 <= r.zeta_min <= 0.895 and 0.944 <= r.zeta_max <= 0.954 and dt < 30
    assert report(8, "global conditioning index", ok,
                  f"GCI {r.gci:.5f}, zeta_min {r.zeta_min:.5f}, zeta_max {r.zeta_max:.5f}; {dt:.2f} s")


def test_c09_margin():
    t = time.perf_counter()
    m = margin_search()
    dt = time.perf_counter() - t
    i = m.schedule.index(0.1)
    ok = m.verdicts[i] == "clear" and all(v == "clear" for v in m.verdicts[:i]) and m.first_failing is not None
    assert report(9, "fabrication margin", ok,
                  f"clear at 0.1: {m.verdicts[i]}; max safe {m.max_safe}; first failing {m.first_failing}; {dt:.2f} s")


def _ball_cases(rng, n):
    ops = ("add", "sub", "mul", "div", "sqrt", "sin", "cos", "atan")
    viol = 0
    for k in range(n):
        op = ops[k % len(ops)]
        xm, ym = rng.uniform(-10, 10), rng.uniform(-10, 10)
        xr, yr = rng.uniform(0, 1), rng.uniform(0, 1)
        if op == "sqrt":
            xm, xr = abs(xm) + 1.0, min(xr, abs(xm))
        if op == "div" and abs(ym) <= 2 * yr:
            ym = math.copysign(2 * yr + 0.5, ym)
        f = {
            "add": lambda x, y: x + y, "sub": lambda x, y: x - y, "mul": lambda x, y: x * y,
            "div": lambda x, y: x / y, "sqrt": lambda x, y: x.sqrt(), "sin": lambda x, y: x.sin(),
            "cos": lambda x, y: x.cos(), "atan": lambda x, y: x.atan(),
        }[op]
        big = f(Ball(xm, xr), Ball(ym, yr))
        # inclusion: a sub-ball maps inside, and so does an interior point
        s = rng.uniform(0, 1)
        cx = xm + xr * rng.uniform(-1, 1) * (1 - s)
        cy = ym + yr * rng.uniform(-1, 1) * (1 - s)
        small = f(Ball(cx, xr * s), Ball(cy, yr * s))
        point = f(Ball(cx), Ball(cy))
        if small.lower() < big.lower() or small.upper() > big.upper():
            viol += 1
        if point.lower() < big.lower() or point.upper() > big.upper():
            viol += 1
    return viol


def _fd_errors(npts=100):
    sysm = FGMSystem()
    rng = np.random.default_rng(10)
    worst = 0.0
    for _ in range(npts):
        j = rng.uniform(-2, 2, 3)
        o = rng.uniform(-0.5, 0.5, 3)
        h = 1e-6
        jac = sysm.point_jac(j, o)
        hes = sysm.eval_hess(j, np.zeros(3), o, np.zeros(3))
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            fd = (sysm.point_f(j, o + e) - sysm.point_f(j, o - e)) / (2 * h)
            worst = max(worst, float(np.max(np.abs(jac[:, k] - fd))))
            fdj = (sysm.point_jac(j, o + e) - sysm.point_jac(j, o - e)) / (2 * h)
            for i in range(3):
                hm = np.array([hes[i][k][b].m[0] for b in range(3)])
                worst = max(worst, float(np.max(np.abs(hm - fdj[i]))))
    return worst


def _monotone_sigma(npts=50):
    rng = np.random.default_rng(12)
    bad = 0
    for _ in range(npts):
        o = Orientation.from_degrees(*rng.uniform(-20, 20, 2), 0.0).o
        x0 = tuple(x + float(rng.uniform(-1e-3, 1e-3)) for x in o)
        jf = plus_leaf(o)
        p = [kantorovich_test(tuple(boxed(x, s) for x in jf), x0).product for s in (9, 12, 16)]
        if not (p[0] >= p[1] >= p[2]):
            bad += 1
    return bad


def test_c10_properties():
    viol = _ball_cases(random.Random(7), 10_000)
    fd = _fd_errors(100)
    mono = _monotone_sigma(50)
    ok = viol == 0 and fd <= 1e-6 and mono == 0
    assert report(10, "property suites", ok,
                  f"ball inclusion 10000 cases, {viol} violations; derivative fd error {fd:.2e} (<= 1e-6); "
                  f"sigma monotonicity 50 points, {mono} violations")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
