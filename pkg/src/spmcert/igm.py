"""Inverse geometric model: working modes, workspace paving and joint stops.

Each leg gives a quadratic a_i j_i^2 + b_i j_i + c_i = 0, so an orientation
has up to 2^3 working modes.  A mode is labelled by a sign triple; the label
"+" on leg i selects the root (-b_i - sqrt(D_i)) / (2 a_i), which at the
reference posture gives j = (1, 1, 1), theta = (90, 90, 90) degrees.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .geometry import DesignParams
from .numerics.algebraic import SQRT2, AlgebraicScalar
from .numerics.ball import DEFAULT_PREC, Ball, BallError
from .numerics.kernel import leaf_grid
from .polysys import leg_polys
from .variety import pack_o_polys

__all__ = [
    "NoRealModeError",
    "SolutionAtInfinityError",
    "PavingError",
    "WorkingModeSet",
    "solve_igm",
    "plus_leaf",
    "JointStops",
    "PavingResult",
    "pave_prescribed_workspace",
    "joint_stop_degrees",
    "REFERENCE_STOPS",
    "in_Q0star",
    "in_Qstar",
]

# whole-degree joint stops of the canonical design
REFERENCE_STOPS = ((67, 114), (62, 130), (50, 120))

LABELS = tuple("".join(s) for s in itertools.product("+-", repeat=3))


class NoRealModeError(ArithmeticError):
    """A leg discriminant is negative: no real working mode for that leg."""


class SolutionAtInfinityError(ArithmeticError):
    """A leading coefficient may vanish: a root may escape to infinity."""


class PavingError(RuntimeError):
    """A paving cell is not certified (contradicts the clearance of the workspace)."""


def _kind(o):
    if any(isinstance(x, Ball) for x in o):
        return "ball"
    if all(isinstance(x, (int, Fraction, AlgebraicScalar)) for x in o):
        return "exact"
    return "float"


def _as_ball(x, prec):
    return Ball.coerce(x, prec)


@dataclass
class WorkingModeSet:
    """The 8 sign-labelled IGM solutions at one orientation."""

    o: tuple
    j: dict  # label -> (j1, j2, j3)
    theta: dict  # label -> (theta1, theta2, theta3) in rad
    discriminants: tuple
    leading: tuple
    double_legs: tuple = ()

    @property
    def count(self) -> int:
        """Number of distinct modes: 2 per leg, 1 for a leg with a double root."""
        return 2 ** (3 - len(self.double_legs))

    def __getitem__(self, label: str):
        return self.j[label]

    def theta_degrees(self, label: str) -> tuple:
        return tuple(math.degrees(float(t.mid) if isinstance(t, Ball) else float(t))
                     for t in self.theta[label])


def _sqrt(x, kind, prec):
    if kind == "exact":
        try:
            return AlgebraicScalar.coerce(x).sqrt()
        except ValueError:
            return AlgebraicScalar.coerce(x).to_ball(prec).sqrt()
    if kind == "ball":
        return x.sqrt()
    return math.sqrt(x)


def _sign_check(i, disc, lead, kind):
    if kind == "exact":
        if AlgebraicScalar.coerce(lead).is_zero():
            raise SolutionAtInfinityError(f"solution-at-infinity risk on leg {i}: leading coefficient is 0")
        s = AlgebraicScalar.coerce(disc).sign()
        if s < 0:
            raise NoRealModeError(f"no real working mode for leg {i}")
        return s == 0
    if kind == "ball":
        if lead.contains_zero():
            raise SolutionAtInfinityError(f"solution-at-infinity risk on leg {i}: leading coefficient ball contains 0")
        if disc.lower() < 0:
            raise NoRealModeError(f"no real working mode for leg {i} (discriminant not certified >= 0)")
        return disc.contains_zero()
    if lead == 0:
        raise SolutionAtInfinityError(f"solution-at-infinity risk on leg {i}: leading coefficient is 0")
    if disc < 0:
        raise NoRealModeError(f"no real working mode for leg {i}")
    return disc == 0


def _theta(j, kind, prec):
    if isinstance(j, Ball):
        return j.atan() * 2
    return 2.0 * math.atan(float(j))


def solve_igm(o, params: DesignParams = DesignParams(), prec: int = DEFAULT_PREC) -> WorkingModeSet:
    """All working modes at o = (o1, o2, o3) (floats, Balls, or exact scalars)."""
    o = tuple(o)
    if len(o) != 3:
        raise ValueError("o needs three components")
    kind = _kind(o)
    polys = leg_polys(params, prec)
    if kind == "exact" and not params.is_exact():
        kind = "ball"
    if kind == "ball":
        o = tuple(_as_ball(x, prec) for x in o)
    elif kind == "float":
        o = tuple(float(x) for x in o)
        polys = _float_legs(params)
    pt = (0, 0, 0) + o
    roots, discs, leads, doubles = [], [], [], []
    for i, (pa, pb, pc) in enumerate(polys, 1):
        a, b, c = pa(pt), pb(pt), pc(pt)
        if kind == "ball":
            a, b, c = (_as_ball(x, prec) for x in (a, b, c))
        elif kind == "float":
            a, b, c = float(a), float(b), float(c)
        disc = b * b - 4 * (a * c)
        if kind == "ball":
            disc = _as_ball(disc, prec)
        if _sign_check(i, disc, a, kind):
            doubles.append(i)
        sd = _sqrt(disc, kind, prec)
        two_a = 2 * a
        if isinstance(sd, Ball) and not isinstance(two_a, Ball):
            two_a = _as_ball(two_a, prec)
            b = _as_ball(b, prec)
        plus = (-b - sd) / two_a
        minus = (-b + sd) / two_a
        roots.append({"+": plus, "-": minus})
        discs.append(disc)
        leads.append(a)
    js, thetas = {}, {}
    for lab in LABELS:
        jv = tuple(roots[k][s] for k, s in enumerate(lab))
        js[lab] = jv
        thetas[lab] = tuple(_theta(x, kind, prec) for x in jv)
    return WorkingModeSet(o, js, thetas, tuple(discs), tuple(leads), tuple(doubles))


@lru_cache(maxsize=32)
def _float_legs(params: DesignParams) -> tuple:
    return tuple(tuple(p.map_coeffs(float) for p in leg) for leg in leg_polys(params))


def plus_leaf(o, params: DesignParams = DesignParams()) -> tuple:
    """The (+++) joint values j at a float orientation o (fast path)."""
    polys = _float_legs(params)
    pt = (0, 0, 0) + tuple(float(x) for x in o)
    out = []
    for pa, pb, pc in polys:
        a, b, c = float(pa(pt)), float(pb(pt)), float(pc(pt))
        d = b * b - 4 * a * c
        if d < 0:
            raise NoRealModeError("no real working mode on the (+++) leaf")
        out.append((-b - math.sqrt(d)) / (2 * a))
    return tuple(out)


# -- paving -------------------------------------------------------------------


@dataclass
class JointStops:
    j_min: tuple
    j_max: tuple
    theta_min_deg: tuple
    theta_max_deg: tuple
    max_radius: tuple
    min_delta: tuple

    def rows(self) -> list:
        return [
            {
                "joint": i + 1,
                "j_min": self.j_min[i],
                "j_max": self.j_max[i],
                "theta_min_deg": self.theta_min_deg[i],
                "theta_max_deg": self.theta_max_deg[i],
                "max_radius": self.max_radius[i],
                "min_delta": self.min_delta[i],
            }
            for i in range(3)
        ]

    def to_csv(self) -> str:
        lines = ["# joint stops v1; j = tan(theta/2) (dimensionless); theta in degrees; "
                 "delta of the sqrt2-scaled leg quadratic",
                 "joint,j_min,j_max,theta_min_deg,theta_max_deg,stop_min_deg,stop_max_deg,max_radius,min_delta"]
        degs = joint_stop_degrees(self)
        for row, (lo, hi) in zip(self.rows(), degs):
            lines.append(",".join([
                str(row["joint"]),
                *(f"{row[k]:.17g}" for k in ("j_min", "j_max", "theta_min_deg", "theta_max_deg")),
                str(lo), str(hi),
                f"{row['max_radius']:.17g}", f"{row['min_delta']:.17g}",
            ]))
        return "\n".join(lines) + "\n"


@dataclass
class PavingResult:
    stops: JointStops
    o1: np.ndarray
    o2: np.ndarray
    r_o: float
    o3_rad: float
    j_mid: np.ndarray  # (n*n, 3)
    j_rad: np.ndarray
    delta_mid: np.ndarray
    delta_rad: np.ndarray
    backend: str = ""
    cells: int = 0
    notes: list = field(default_factory=list)

    def cell_log(self) -> str:
        """JSON list, one record per cell (midpoints and (+++) solution balls)."""
        recs = []
        k = 0
        for a in self.o1:
            for b in self.o2:
                recs.append({
                    "o1": repr(float(a)), "o2": repr(float(b)), "r_o": repr(self.r_o),
                    "j": [{"m": repr(float(self.j_mid[k, i])), "r": repr(float(self.j_rad[k, i]))} for i in range(3)],
                    "delta": [{"m": repr(float(self.delta_mid[k, i])), "r": repr(float(self.delta_rad[k, i]))} for i in range(3)],
                })
                k += 1
        return json.dumps({"version": 1, "units": "o = tan(chi/2), j = tan(theta/2)", "cells": recs}, indent=1)


_DEFAULT_HALF = Fraction(177, 1000)
_DEFAULT_RO = Fraction(5, 900)


def _up_float(q) -> float:
    f = float(q)
    if Fraction(f) < Fraction(q):
        f = math.nextafter(f, math.inf)
    return f


def pave_prescribed_workspace(params: DesignParams = DesignParams(), n: int = 35,
                              r_o=_DEFAULT_RO, sigma_o3=1e-4, half=_DEFAULT_HALF,
                              o3: float = 0.0, backend: str | None = None) -> PavingResult:
    """Pave |o1|, |o2| <= half with n x n overlapping balls and bound the (+++) leaf.

    Cell midpoints are n equally spaced values from -half to half; every
    cell has radius r_o on o1 and o2 and sigma_o3 on o3.  Discriminants are
    reported for the leg quadratics divided by sqrt(2) (integer leading
    terms); roots do not depend on that scale.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    half_f = float(Fraction(half)) if not isinstance(half, float) else half
    mids = np.zeros(1) if n == 1 else np.linspace(-half_f, half_f, n)
    r = _up_float(r_o) if not isinstance(r_o, float) else r_o
    rz = _up_float(sigma_o3) if not isinstance(sigma_o3, float) else sigma_o3
    notes = []
    if n > 1 and 2 * r < mids[1] - mids[0]:
        notes.append("cells do not overlap")
    polys = leg_polys(params)
    if params.is_exact():
        inv = SQRT2.inverse()
        polys = tuple(tuple(p * inv for p in leg) for leg in polys)
    packed = pack_o_polys([p for leg in polys for p in leg])
    g1, g2 = np.meshgrid(mids, mids, indexing="ij")
    m = g1.size
    xm = np.column_stack([g1.ravel(), g2.ravel(), np.full(m, float(o3))])
    xr = np.column_stack([np.full(m, r), np.full(m, r), np.full(m, rz)])
    vm, vr = packed.eval_grid(xm, xr, backend)
    jm = np.empty((m, 3))
    jr = np.empty((m, 3))
    dm = np.empty((m, 3))
    dr = np.empty((m, 3))
    for i in range(3):
        out = leaf_grid(vm[:, 3 * i], vr[:, 3 * i], vm[:, 3 * i + 1], vr[:, 3 * i + 1],
                        vm[:, 3 * i + 2], vr[:, 3 * i + 2], backend)
        bad = np.nonzero(out[4])[0]
        if len(bad):
            k = int(bad[0])
            why = "discriminant not certified positive" if out[4][k] == 1 else "leading coefficient may vanish"
            raise PavingError(f"leg {i + 1}: {why} in cell o1={float(xm[k, 0])!r}, o2={float(xm[k, 1])!r}")
        dm[:, i], dr[:, i], jm[:, i], jr[:, i] = out[0], out[1], out[2], out[3]
    lo = np.nextafter(jm - jr, -np.inf)
    hi = np.nextafter(jm + jr, np.inf)
    dlo = np.nextafter(dm - dr, -np.inf)
    j_min = tuple(float(x) for x in lo.min(axis=0))
    j_max = tuple(float(x) for x in hi.max(axis=0))
    stops = JointStops(
        j_min, j_max,
        tuple(math.degrees(2 * math.atan(x)) for x in j_min),
        tuple(math.degrees(2 * math.atan(x)) for x in j_max),
        tuple(float(x) for x in jr.max(axis=0)),
        tuple(float(x) for x in dlo.min(axis=0)),
    )
    from .numerics.kernel import backend_module

    return PavingResult(stops, mids, mids.copy(), r, rz, jm, jr, dm, dr,
                        backend_module(backend).BACKEND, m, notes)


def joint_stop_degrees(stops: JointStops) -> tuple:
    """Whole-degree stops: floor of the minima, ceil of the maxima."""
    out = []
    for lo, hi in zip(stops.j_min, stops.j_max):
        # 2*atan rounded outward: nudge by a few ulps before floor/ceil
        tlo = math.degrees(2 * math.atan(lo))
        thi = math.degrees(2 * math.atan(hi))
        out.append((math.floor(math.nextafter(tlo, -math.inf)), math.ceil(math.nextafter(thi, math.inf))))
    return tuple(out)


# -- joint-space sets ---------------------------------------------------------


def _wrap_deg(x: float) -> float:
    """Reduce to (-180, 180]."""
    y = math.fmod(x, 360.0)
    if y <= -180.0:
        y += 360.0
    elif y > 180.0:
        y -= 360.0
    return y


def in_Q0star(theta, chi3: float, stops=REFERENCE_STOPS, degrees: bool = False) -> bool:
    """theta_i - chi3 within the joint stops (angles in rad unless degrees=True)."""
    th = [float(t) for t in (theta.theta if hasattr(theta, "theta") else theta)]
    c = float(chi3)
    if not degrees:
        th = [math.degrees(t) for t in th]
        c = math.degrees(c)
    for t, (lo, hi) in zip(th, stops):
        d = _wrap_deg(t - c)
        if not (lo <= d <= hi):
            return False
    return True


def in_Qstar(theta, params: DesignParams = DesignParams(), chi3: float = 0.0,
             stops=REFERENCE_STOPS, sigma: int = 30, max_step: float = 0.05,
             chi_max_deg: float = 20.0, atol: float = 1e-9) -> bool:
    """In Q0* and the certified forward model of theta lies in W*.

    The forward model is tracked along a straight joint-space segment from
    the reference posture (theta_i = pi/2, o = 0) to theta, each angle taken
    modulo 2 pi nearest pi/2.  The end enclosure must fit the roll and
    pitch bounds up to ``atol`` on o, so boundary points of W* (images of
    |chi| = 20 deg) count as inside.  A failed certification raises
    CertificationError ("undecidable here").
    """
    from .kantorovich import track_path

    th = tuple(float(t) for t in (theta.theta if hasattr(theta, "theta") else theta))
    if not in_Q0star(th, chi3, stops):
        return False
    start = (math.pi / 2,) * 3
    target = tuple(math.pi / 2 + math.remainder(t - math.pi / 2, 2 * math.pi) for t in th)
    pts = track_path([start, target], sigma=sigma, max_step=max_step, params=params)
    bound = math.tan(math.radians(chi_max_deg) / 2)
    return all(abs(float(x.mid)) + x.rad <= bound + atol for x in pts[-1].o[:2])
