"""Newton-Kantorovich certification of the forward geometric model.

For fixed joint values j the leg polynomials give a square system f(o) = 0.
Around an estimate x0 the test bounds

    A0 >= ||J(x0)^-1||_inf,  B0 >= ||J(x0)^-1 f(x0)||_inf,
    C  >= max_ij sum_k |d2 f_i / do_j do_k|  over ||o - x0||_inf <= 2 B0,

and passes when 2 n A0 B0 C <= 1 (n = 3).  Then f has a unique root in that
neighbourhood and Newton converges to it.  Joint values may be balls (the
test then covers every j in them).  All bounds come from double-precision
ball arithmetic, evaluated for many points at once by the ball kernel.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .geometry import DesignParams, JointVector
from .numerics.algebraic import AlgebraicScalar
from .numerics.ball import Ball, boxed
from .numerics.ballvec import BallVec
from .numerics.kernel import PackedPolys
from .polysys import VARS, Poly, canonical_system, leg_polys
from .variety import scalar_to_floats

__all__ = [
    "CertificationError",
    "KantorovichCertificate",
    "FGMSystem",
    "fgm_system",
    "kantorovich_test",
    "kantorovich_batch",
    "certified_newton",
    "certified_fgm",
    "TrackedPoint",
    "track_path",
    "ScanReport",
    "certify_workspace_scan",
]

_N = 3
_UP = 1.0 + 2.0**-48
_TINY = 2.0**-1060
_OV = ("o1", "o2", "o3")


def _up(x):
    return x * _UP + _TINY


class CertificationError(RuntimeError):
    """Path tracking could not certify a step; ``last`` holds the last good point."""

    def __init__(self, msg, last=None):
        super().__init__(msg)
        self.last = last


# -- the system ---------------------------------------------------------------


def _full_polys(params: DesignParams) -> tuple:
    if params.is_exact():
        return tuple(canonical_system(params))
    out = []
    for i, (a, b, c) in enumerate(leg_polys(params), 1):
        jv = Poly.var(f"j{i}")
        out.append(a * jv * jv + b * jv + c)
    return tuple(out)


def _pack(polys) -> PackedPolys:
    return PackedPolys([[(e, scalar_to_floats(c)) for e, c in p.sorted_terms()] for p in polys], len(VARS))


class FGMSystem:
    """f, its Jacobian and its Hessians in o, as polynomials over (j, o).

    Evaluation takes the joint balls and orientation balls as arrays of
    shape (N, 3) and returns ball arrays for N points at once.
    """

    def __init__(self, params: DesignParams = DesignParams()):
        self.params = params
        self.f = _full_polys(params)
        self.jac = tuple(tuple(p.diff(v) for v in _OV) for p in self.f)
        self.hess = tuple(tuple(tuple(d.diff(v) for v in _OV) for d in row) for row in self.jac)
        self._pf = _pack(self.f)
        self._pj = _pack([d for row in self.jac for d in row])
        self._ph = _pack([h for row in self.hess for hr in row for h in hr])

    @staticmethod
    def _pts(jm, jr, om, orad):
        jm, jr, om, orad = (np.atleast_2d(np.asarray(x, dtype=np.float64)) for x in (jm, jr, om, orad))
        n = max(jm.shape[0], om.shape[0])
        jm, jr, om, orad = (np.broadcast_to(x, (n, 3)) for x in (jm, jr, om, orad))
        return np.hstack([jm, om]), np.hstack([jr, orad])

    def eval_f(self, jm, jr, om, orad, backend=None):
        """Residual balls, list of 3 BallVec."""
        m, r = self._pf.eval_grid(*self._pts(jm, jr, om, orad), backend)
        return [BallVec(m[:, i], r[:, i]) for i in range(3)]

    def eval_jac(self, jm, jr, om, orad, backend=None):
        """J[i][k] = d f_i / d o_k as BallVec."""
        m, r = self._pj.eval_grid(*self._pts(jm, jr, om, orad), backend)
        return [[BallVec(m[:, 3 * i + k], r[:, 3 * i + k]) for k in range(3)] for i in range(3)]

    def eval_hess(self, jm, jr, om, orad, backend=None):
        """H[i][a][b] = d2 f_i / do_a do_b as BallVec."""
        m, r = self._ph.eval_grid(*self._pts(jm, jr, om, orad), backend)
        return [[[BallVec(m[:, 9 * i + 3 * a + b], r[:, 9 * i + 3 * a + b]) for b in range(3)]
                 for a in range(3)] for i in range(3)]

    def point_f(self, j, o):
        """Float residual at one point (no certification)."""
        return np.array([x.m[0] for x in self.eval_f(j, np.zeros(3), o, np.zeros(3))])

    def point_jac(self, j, o):
        return np.array([[x.m[0] for x in row] for row in self.eval_jac(j, np.zeros(3), o, np.zeros(3))])


@lru_cache(maxsize=16)
def fgm_system(params: DesignParams = DesignParams()) -> FGMSystem:
    return FGMSystem(params)


# -- 3x3 ball linear algebra --------------------------------------------------


def _inv3(m):
    """Adjugate inverse of a 3x3 BallVec matrix; returns (inverse, det)."""
    cof = [[None] * 3 for _ in range(3)]
    for i in range(3):
        for k in range(3):
            r = [x for x in range(3) if x != i]
            c = [x for x in range(3) if x != k]
            minor = m[r[0]][c[0]] * m[r[1]][c[1]] - m[r[0]][c[1]] * m[r[1]][c[0]]
            cof[i][k] = minor if (i + k) % 2 == 0 else -minor
    det = m[0][0] * cof[0][0] + m[0][1] * cof[0][1] + m[0][2] * cof[0][2]
    dinv = det.inv()
    return [[cof[k][i] * dinv for k in range(3)] for i in range(3)], det


def _sum_up(vals):
    total = vals[0]
    for v in vals[1:]:
        total = _up(total + v)
    return total


def _matvec(m, v):
    return [m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2] for i in range(3)]


# -- the test -----------------------------------------------------------------


@dataclass
class KantorovichCertificate:
    A0: float
    B0: float
    C: float
    product: float
    radius: float  # 2 * B0, the uniqueness neighbourhood around x0
    passed: bool
    x0: tuple = ()
    status: str = "ok"  # "ok" or "singular"

    @property
    def margin(self) -> float:
        return 1.0 - self.product

    def __bool__(self) -> bool:
        return self.passed


@dataclass
class _Batch:
    A0: np.ndarray
    B0: np.ndarray
    C: np.ndarray
    product: np.ndarray
    singular: np.ndarray

    @property
    def passed(self):
        return (~self.singular) & (self.product <= 1.0)

    def cert(self, k, x0) -> KantorovichCertificate:
        return KantorovichCertificate(
            float(self.A0[k]), float(self.B0[k]), float(self.C[k]), float(self.product[k]),
            float(_up(2.0 * self.B0[k])), bool(self.passed[k]), tuple(float(x) for x in x0),
            "singular" if self.singular[k] else "ok")


def kantorovich_batch(jm, jr, x0, params: DesignParams = DesignParams(), backend=None) -> _Batch:
    """The test at N points: jm, jr, x0 arrays of shape (N, 3) (x0 taken as exact points)."""
    sysm = fgm_system(params)
    jm = np.atleast_2d(np.asarray(jm, dtype=np.float64))
    jr = np.atleast_2d(np.asarray(jr, dtype=np.float64))
    x0 = np.atleast_2d(np.asarray(x0, dtype=np.float64))
    zero = np.zeros_like(x0)
    f = sysm.eval_f(jm, jr, x0, zero, backend)
    with np.errstate(invalid="ignore", over="ignore"):
        inv, det = _inv3(sysm.eval_jac(jm, jr, x0, zero, backend))
    singular = ~det.excludes_zero()
    with np.errstate(invalid="ignore"):
        a0 = np.max(np.column_stack([_sum_up([inv[i][k].mag() for k in range(3)]) for i in range(3)]), axis=1)
        g = _matvec(inv, f)
        b0 = np.max(np.column_stack([x.mag() for x in g]), axis=1)
    a0 = np.where(singular, np.inf, a0)
    b0 = np.where(singular, np.inf, b0)
    box = np.where(singular[:, None], 0.0, np.broadcast_to(_up(2.0 * b0)[:, None], x0.shape))
    h = sysm.eval_hess(jm, jr, x0, box, backend)
    rows = [_sum_up([h[i][a][b].mag() for b in range(3)]) for i in range(3) for a in range(3)]
    c = np.max(np.column_stack(rows), axis=1)
    with np.errstate(invalid="ignore"):
        prod = _up(_up(_up(2.0 * _N * a0) * b0) * c)
    prod = np.where(singular, np.inf, np.where(b0 == 0, 0.0, prod))
    return _Batch(a0, b0, c, prod, singular)


def _ball_arrays(values):
    """(mid, rad) float arrays from 3 Balls / exact scalars / floats."""
    m, r = [], []
    for x in values:
        if isinstance(x, (Ball, AlgebraicScalar)):
            a, b = scalar_to_floats(x)
        elif isinstance(x, (int, Fraction)):
            a, b = scalar_to_floats(Ball(x))
        else:
            a, b = float(x), 0.0
        m.append(a)
        r.append(b)
    return np.array(m), np.array(r)


def _exact_residual_zero(j, o0, params) -> bool:
    exact = (int, Fraction, AlgebraicScalar)
    if not params.is_exact() or not all(isinstance(x, exact) for x in (*j, *o0)):
        return False
    pt = tuple(AlgebraicScalar.coerce(x) for x in (*j, *o0))
    return all(AlgebraicScalar.coerce(p(pt)).is_zero() for p in canonical_system(params))


def kantorovich_test(j, o0, params: DesignParams = DesignParams(), backend=None) -> KantorovichCertificate:
    """Run the test for joint balls j around the midpoint x0 of o0.

    An exact residual of zero (exact j, o0 and design) gives B0 = 0.  A
    Jacobian enclosure containing a singular matrix gives status
    "singular" (inconclusive), which is distinct from a failed product test.
    """
    jm, jr = _ball_arrays(j)
    om, _ = _ball_arrays(o0)
    res = kantorovich_batch(jm[None], jr[None], om[None], params, backend)
    if _exact_residual_zero(tuple(j), tuple(o0), params) and not res.singular[0]:
        res.B0[0] = 0.0
        res.product[0] = 0.0
    return res.cert(0, om)


# -- Newton refinement --------------------------------------------------------


def _krawczyk(sysm, jm, jr, xm, xr, tol, max_iter, backend=None):
    """Krawczyk contraction of boxes known to hold a unique root; returns (m, r, widths)."""
    widths = [float(np.max(xr))]
    eye = np.eye(3)
    for _ in range(max_iter):
        if tol is not None and widths[-1] <= tol:
            break
        f = sysm.eval_f(jm, jr, xm, np.zeros_like(xm), backend)
        jp = sysm.eval_jac(jm, np.zeros_like(jr), xm, np.zeros_like(xm), backend)
        jpm = np.stack([np.stack([jp[i][k].m for k in range(3)], -1) for i in range(3)], 1)
        try:
            y = np.linalg.inv(jpm)
        except np.linalg.LinAlgError:
            break
        jx = sysm.eval_jac(jm, jr, xm, xr, backend)
        yb = [[BallVec(y[:, i, k]) for k in range(3)] for i in range(3)]
        yf = _matvec(yb, f)
        d = [BallVec(np.zeros(len(xm)), xr[:, k]) for k in range(3)]
        km, kr = np.empty_like(xm), np.empty_like(xr)
        for i in range(3):
            acc = BallVec(xm[:, i]) - yf[i]
            for k in range(3):
                yj = yb[i][0] * jx[0][k] + yb[i][1] * jx[1][k] + yb[i][2] * jx[2][k]
                acc = acc + (BallVec(eye[i, k]) - yj) * d[k]
            km[:, i], kr[:, i] = acc.m, acc.r
        lo = np.maximum(np.nextafter(xm - xr, -np.inf), np.nextafter(km - kr, -np.inf))
        hi = np.minimum(np.nextafter(xm + xr, np.inf), np.nextafter(km + kr, np.inf))
        if np.any(lo > hi):
            raise CertificationError("empty Krawczyk intersection: enclosure lost")
        nm = 0.5 * (lo + hi)
        nr = np.nextafter(np.maximum(nm - lo, hi - nm), np.inf)
        w = float(np.max(nr))
        if w >= widths[-1] * 0.9 and tol is None:
            if w < widths[-1]:
                xm, xr = nm, nr
                widths.append(w)
            break
        xm, xr = nm, nr
        widths.append(w)
    return xm, xr, widths


def certified_newton(j, o0, cert: KantorovichCertificate, tol: float | None = None,
                     params: DesignParams = DesignParams(), max_iter: int = 30, backend=None):
    """Contract the Kantorovich neighbourhood to a tight enclosure of the root.

    Each iterate is a midpoint Newton step with a ball bound on the
    linearization error (Krawczyk form), intersected with the previous box,
    so every box still contains the unique root.  With ``tol`` the loop runs
    until the widest radius is <= tol and warns if it stalls above it;
    without, it stops once the radius no longer shrinks by 10%.
    Returns 3 Balls.
    """
    if not cert.passed:
        raise CertificationError("certified_newton needs a passing certificate")
    jm, jr = _ball_arrays(j)
    x0 = np.array(cert.x0 if cert.x0 else _ball_arrays(o0)[0])
    xr = np.full(3, _up(2.0 * cert.B0))
    m, r, widths = _krawczyk(fgm_system(params), jm[None], jr[None], x0[None], xr[None], tol, max_iter, backend)
    if tol is not None and widths[-1] > tol:
        warnings.warn(f"Newton enclosure stalled at radius {widths[-1]:.3g} > tol {tol:.3g}", RuntimeWarning,
                      stacklevel=2)
    return tuple(Ball(float(m[0, k]), float(r[0, k])) for k in range(3))


def _float_newton(sysm, j, o, iters=50):
    o = np.array(o, dtype=np.float64)
    for _ in range(iters):
        step = np.linalg.solve(sysm.point_jac(j, o), sysm.point_f(j, o))
        o = o - step
        if np.max(np.abs(step)) < 1e-15:
            break
    return o


@dataclass
class FGMResult:
    o: tuple  # 3 Balls
    cert: KantorovichCertificate
    residual: tuple  # 3 Balls, f(j, o) over the enclosure


def certified_fgm(j, params: DesignParams = DesignParams(), o_guess=None, tol=None, backend=None) -> FGMResult:
    """Certified forward model at joint values j (floats or Balls).

    A float Newton run from ``o_guess`` gives x0.  The default guess is the
    yaw-shifted reference posture closest to j (roll and pitch 0, yaw from
    the circular mean of the joint angles); the Kantorovich test at x0 then certifies the root and
    Krawczyk steps tighten its enclosure.
    """
    sysm = fgm_system(params)
    jm, jr = _ball_arrays(j)
    if o_guess is None:
        th = 2.0 * np.arctan(jm)
        yaw = math.remainder(math.pi / 2 - math.atan2(np.sin(th).sum(), np.cos(th).sum()), 2 * math.pi)
        o_guess = (0.0, 0.0, math.tan(yaw / 2))
    x0 = _float_newton(sysm, jm, o_guess)
    cert = kantorovich_batch(jm[None], jr[None], x0[None], params, backend).cert(0, x0)
    if not cert.passed:
        raise CertificationError(f"Kantorovich test failed at j = {tuple(jm)} (product {cert.product:.3g})")
    o = certified_newton(j, None, cert, tol, params, backend=backend)
    om, orad = _ball_arrays(o)
    f = sysm.eval_f(jm, jr, om, orad, backend)
    return FGMResult(o, cert, tuple(Ball(float(x.m[0]), float(x.r[0])) for x in f))


# -- path tracking ------------------------------------------------------------


@dataclass
class TrackedPoint:
    j: tuple  # 3 sigma-boxed Balls
    o: tuple  # 3 Balls
    cert: KantorovichCertificate
    step: float  # joint-space step (rad, inf-norm) that reached this point
    theta: tuple = ()


def _theta_of(w):
    if isinstance(w, JointVector):
        return np.array(w.theta, dtype=np.float64)
    return np.array([float(t) for t in w], dtype=np.float64)


def _boxed_j(theta, sigma):
    return tuple(boxed(math.tan(t / 2.0), sigma) for t in theta)


def track_path(waypoints, sigma: int = 9, max_step: float = 0.05, params: DesignParams = DesignParams(),
               o_start=(0.0, 0.0, 0.0), min_step: float = 2.0**-20, backend=None) -> list:
    """Certified orientation along straight joint-space segments between waypoints.

    Waypoints are joint angles (rad) or JointVectors; the first must have
    the known orientation ``o_start`` (default the reference posture).
    Steps are at most ``max_step`` in the inf-norm; a failed test halves the
    step, and a step below ``min_step`` raises CertificationError.
    """
    if max_step <= 0:
        raise ValueError("max_step must be > 0")
    sysm = fgm_system(params)
    thetas = [_theta_of(w) for w in waypoints]
    if not thetas:
        return []

    def attempt(theta, x_prev, h):
        jb = _boxed_j(theta, sigma)
        jm, jr = _ball_arrays(jb)
        res = kantorovich_batch(jm[None], jr[None], x_prev[None], params, backend)
        cert = res.cert(0, x_prev)
        if not cert.passed:
            return None
        m, r, _ = _krawczyk(sysm, jm[None], jr[None], x_prev[None], np.full((1, 3), cert.radius), None, 30, backend)
        o = tuple(Ball(float(m[0, k]), float(r[0, k])) for k in range(3))
        return TrackedPoint(jb, o, cert, h, tuple(float(t) for t in theta))

    x = np.array([float(v) for v in o_start])
    first = attempt(thetas[0], x, 0.0)
    if first is None:
        raise CertificationError(f"certification failed at the start j = {tuple(np.tan(thetas[0] / 2))}")
    out = [first]
    for a, b in zip(thetas[:-1], thetas[1:]):
        span = float(np.max(np.abs(b - a)))
        if span == 0.0:
            continue
        t, h = 0.0, min(1.0, max_step / span)
        while t < 1.0:
            tn = min(1.0, t + h)
            theta = a + tn * (b - a)
            x = np.array([float(v.mid) for v in out[-1].o])
            pt = attempt(theta, x, (tn - t) * span)
            if pt is None:
                h *= 0.5
                if h * span < min_step:
                    raise CertificationError(
                        f"certification failed near j = {tuple(np.tan(theta / 2))}", out[-1])
                continue
            out.append(pt)
            t = tn
            h = min(2 * h, max_step / span)
    return out


# -- workspace scan -----------------------------------------------------------


@dataclass
class ScanReport:
    o1: np.ndarray
    o2: np.ndarray
    j_mid: np.ndarray
    j_rad: np.ndarray
    x0: np.ndarray
    A0: np.ndarray
    B0: np.ndarray
    C: np.ndarray
    product: np.ndarray
    passed: np.ndarray
    sigma: int
    step: float
    notes: list = field(default_factory=list)

    @property
    def count(self) -> int:
        return int(self.passed.size)

    @property
    def pass_count(self) -> int:
        return int(np.count_nonzero(self.passed))

    @property
    def all_passed(self) -> bool:
        return self.pass_count == self.count

    @property
    def min_margin(self) -> float:
        return float(np.min(1.0 - self.product))

    @property
    def worst(self) -> tuple:
        k = int(np.argmax(self.product))
        return float(self.o1.ravel()[k]), float(self.o2.ravel()[k]), float(self.product[k])

    def failures(self) -> list:
        idx = np.nonzero(~self.passed)[0]
        return [(float(self.o1.ravel()[k]), float(self.o2.ravel()[k]), float(self.product[k])) for k in idx]

    def summary(self) -> str:
        o1, o2, p = self.worst
        pct = 100.0 * self.pass_count / self.count
        return (f"{self.count} points, {self.pass_count} passed ({pct:.4g}% pass); "
                f"min margin {self.min_margin:.6g} at o = ({o1:.6g}, {o2:.6g})")

    def to_csv(self) -> str:
        lines = [f"# kantorovich scan v1; o = tan(chi/2), j = tan(theta/2); sigma = {self.sigma}; step = {self.step!r}",
                 "o1,o2,j1,j2,j3,j_rad,x0_1,x0_2,A0,B0,C,product,pass"]
        o1 = self.o1.ravel()
        o2 = self.o2.ravel()
        for k in range(self.count):
            vals = [o1[k], o2[k], *self.j_mid[k], self.j_rad[k, 0], *self.x0[k, :2],
                    self.A0[k], self.B0[k], self.C[k], self.product[k]]
            lines.append(",".join(f"{float(v):.17g}" for v in vals) + f",{int(self.passed[k])}")
        return "\n".join(lines) + "\n"


def _scan_chunk(args):
    jm, jr, x0, params, backend = args
    res = kantorovich_batch(jm, jr, x0, params, backend)
    return res.A0, res.B0, res.C, res.product, res.passed


def _plus_leaf_grid(params, om):
    from .igm import _float_legs
    from .variety import pack_o_polys

    legs = _float_legs(params)
    packed = pack_o_polys([p for leg in legs for p in leg])
    vm, _ = packed.eval_grid(om, np.zeros_like(om))
    j = np.empty((len(om), 3))
    for i in range(3):
        a, b, c = vm[:, 3 * i], vm[:, 3 * i + 1], vm[:, 3 * i + 2]
        # nan where the leaf is not real
        with np.errstate(invalid="ignore", divide="ignore"):
            j[:, i] = (-b - np.sqrt(b * b - 4 * a * c)) / (2 * a)
    return j


def certify_workspace_scan(params: DesignParams = DesignParams(), step=Fraction(1, 100), sigma: int = 9,
                           chi_max_deg: float = 20.0, n: int | None = None, workers: int = 1,
                           backend=None) -> ScanReport:
    """Kantorovich test over the grid |chi1|, |chi2| <= chi_max_deg at o3 = 0.

    Grid points are n equally spaced values of o = tan(chi/2) per axis, with
    n chosen so the spacing is at most ``step``.  Joint inputs are the (+++)
    leaf at each point, boxed to ``sigma`` bits.  The estimate x0 is the
    point one step back toward the origin, as in a tracked displacement.
    """
    step_f = float(Fraction(step)) if not isinstance(step, float) else step
    if step_f <= 0:
        raise ValueError("step must be > 0")
    t = math.tan(math.radians(chi_max_deg) / 2)
    if n is None:
        n = math.ceil(2 * t / step_f) + 1
    axis = np.zeros(1) if n == 1 else np.linspace(-t, t, n)
    g1, g2 = np.meshgrid(axis, axis, indexing="ij")
    om = np.column_stack([g1.ravel(), g2.ravel(), np.zeros(g1.size)])
    jf = _plus_leaf_grid(params, om)
    scale = 2.0**sigma
    jm = np.round(jf * scale) / scale
    jr = np.full_like(jm, 2.0 ** -(sigma + 1))
    norm = np.max(np.abs(om[:, :2]), axis=1)
    shrink = np.where(norm > step_f, (norm - step_f) / np.where(norm > 0, norm, 1.0), 0.0)
    x0 = om * shrink[:, None]
    if workers and workers > 1:
        chunks = np.array_split(np.arange(len(om)), workers)
        tasks = [(jm[c], jr[c], x0[c], params, backend) for c in chunks]
        with ProcessPoolExecutor(max_workers=min(workers, os.cpu_count() or 1)) as ex:
            parts = list(ex.map(_scan_chunk, tasks))
        a0, b0, c, prod, ok = (np.concatenate([p[k] for p in parts]) for k in range(5))
    else:
        a0, b0, c, prod, ok = _scan_chunk((jm, jr, x0, params, backend))
    return ScanReport(g1, g2, jm, jr, x0, a0, b0, c, prod, ok, sigma, step_f)
