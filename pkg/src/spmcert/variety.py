"""Discriminant variety of the inverse model.

Each leg polynomial is quadratic in its joint unknown, so the orientations
where the number of real working modes can change are the zeros of the
discriminants b_i^2 - 4 a_i c_i (coalescing modes, serial singularities) and
of the leading coefficients a_i (a mode escaping to infinity).  The reference
polynomials for the canonical design ship as package data; they are also
recomputed from the leg quadratics and the two must agree.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np

from .geometry import DesignParams
from .numerics.algebraic import AlgebraicScalar
from .numerics.ball import DEFAULT_PREC, Ball
from .numerics.kernel import PackedPolys, leaf_grid
from .polysys import (
    LegQuadratic,
    PolySystem,
    leg_coefficients,
    leg_polys,
    parse_system,
)

__all__ = [
    "reference_wc",
    "reference_winf",
    "computed_wc",
    "computed_winf",
    "verify_reference",
    "eval_wc",
    "eval_winf",
    "ClearanceReport",
    "scan_workspace",
    "MarginReport",
    "margin_search",
    "DEFAULT_SCHEDULE",
    "pack_o_polys",
    "scalar_to_floats",
    "certify_clearance",
    "BoxCertificate",
]

DEFAULT_SCHEDULE = (1e-5, 1e-4, 1e-3, 1e-2, 5e-2, 1e-1, 1.1e-1, 1.2e-1, 2e-1, 5e-1, 1.0)


@lru_cache(maxsize=None)
def _load(name: str) -> PolySystem:
    return parse_system(resources.files("spmcert").joinpath(f"data/{name}").read_text())


def reference_wc() -> PolySystem:
    """Shipped critical-value polynomials of the canonical design (one per leg)."""
    return _load("reference_wc.txt")


def reference_winf() -> PolySystem:
    """Shipped leading-coefficient polynomials of the canonical design."""
    return _load("reference_winf.txt")


def computed_wc(params: DesignParams = DesignParams()) -> PolySystem:
    """b_i^2 - 4 a_i c_i recomputed from the exact normalized system."""
    out = []
    for i in (1, 2, 3):
        a, b, c = leg_coefficients(i, params, "exact")
        out.append(b * b - a * c * 4)
    return PolySystem(tuple(out), "exact", True)


def computed_winf(params: DesignParams = DesignParams()) -> PolySystem:
    return PolySystem(tuple(leg_coefficients(i, params, "exact")[0] for i in (1, 2, 3)),
                      "exact", True)


def verify_reference() -> dict:
    """Compare shipped and recomputed polynomials; exact equality per leg."""
    wc, wi = computed_wc(), computed_winf()
    return {
        "wc": [wc[i] == reference_wc()[i] for i in range(3)],
        "winf": [wi[i] == reference_winf()[i] for i in range(3)],
    }


def _is_canonical(params: DesignParams) -> bool:
    return params == DesignParams() and not any(params.radii.values())


def _o_point(o):
    return (0, 0, 0) + tuple(o)


def eval_wc(o, params: DesignParams = DesignParams(), prec: int = DEFAULT_PREC) -> tuple:
    """Critical-value polynomials at o = (o1, o2, o3).

    Canonical parameters use the shipped reference polynomials; any other
    design (or one with radii) uses the discriminants of its leg quadratics.
    """
    if _is_canonical(params):
        return tuple(p(_o_point(o)) for p in reference_wc())
    return tuple(_leg(i, o, params, prec).discriminant for i in (1, 2, 3))


def eval_winf(o, params: DesignParams = DesignParams(), prec: int = DEFAULT_PREC) -> tuple:
    """Leading coefficients of the leg quadratics at o."""
    if _is_canonical(params):
        return tuple(p(_o_point(o)) for p in reference_winf())
    return tuple(_leg(i, o, params, prec).a for i in (1, 2, 3))


def _leg(i, o, params, prec) -> LegQuadratic:
    a, b, c = _leg_polys(params, prec)[i - 1]
    pt = _o_point(o)
    return LegQuadratic(i, a(pt), b(pt), c(pt))


def _leg_polys(params: DesignParams, prec: int):
    return leg_polys(params, prec)


# -- packed evaluation --------------------------------------------------------


def scalar_to_floats(c) -> tuple[float, float]:
    """(mid, rad) doubles enclosing a scalar of any supported kind."""
    if isinstance(c, Ball):
        return c.to_floats()
    if isinstance(c, AlgebraicScalar):
        return c.to_ball(64).to_floats()
    # float builds are not certified; the coefficient is taken at face value
    return float(c), 0.0


def pack_o_polys(polys) -> PackedPolys:
    """Pack Polys in (o1, o2, o3) for the ball kernel."""
    terms = []
    for p in polys:
        terms.append([(e[3:], scalar_to_floats(c)) for e, c in p.sorted_terms()])
    return PackedPolys(terms, 3)


# -- clearance scan -----------------------------------------------------------


def lattice(n: int, half_width: float) -> np.ndarray:
    if n < 1:
        raise ValueError("grid needs at least one cell per axis")
    if n == 1:
        return np.zeros(1)
    return np.linspace(-half_width, half_width, n)


def default_radius(n: int, half_width: float) -> float:
    """Cell radius giving overlapping balls: 17/32 of the spacing, or the half width for n = 1."""
    if n == 1:
        return half_width
    return (2.0 * half_width / (n - 1)) * 17.0 / 32.0


@dataclass
class ClearanceReport:
    n: int
    r_o: float
    o3: float
    half_width: float
    o1: np.ndarray
    o2: np.ndarray
    delta_mig: np.ndarray  # (n, n, 3)
    lc_mig: np.ndarray  # (n, n, 3)
    clear: bool
    worst_cell: tuple
    worst_value: float
    notes: list = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "clear" if self.clear else "not-clear"

    def min_delta_mig(self) -> np.ndarray:
        return self.delta_mig.reshape(-1, 3).min(axis=0)

    def min_lc_mig(self) -> np.ndarray:
        return self.lc_mig.reshape(-1, 3).min(axis=0)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# clearance scan v1; o = tan(chi/2) (dimensionless); n={self.n} "
                  f"r_o={self.r_o!r} o3={self.o3!r}; mignitudes of discriminants and leading coefficients\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["o1", "o2", "delta1", "delta2", "delta3", "lc1", "lc2", "lc3"])
        for a in range(self.n):
            for b in range(self.n):
                row = [self.o1[a], self.o2[b], *self.delta_mig[a, b], *self.lc_mig[a, b]]
                w.writerow([f"{x:.17g}" for x in row])
        return buf.getvalue()


def _mig(m: np.ndarray, r: np.ndarray) -> np.ndarray:
    v = np.abs(m) - r
    v = np.where(v > 0, np.nextafter(v, 0.0), 0.0)
    return v


def scan_workspace(params: DesignParams = DesignParams(), n: int = 35, o3: float = 0.0,
                   chi_max_deg: float = 20.0, r_o: float | None = None,
                   o3_rad: float = 0.0, backend: str | None = None) -> ClearanceReport:
    """Ball scan of |chi1|, |chi2| <= chi_max over an n x n lattice of overlapping cells.

    A cell is clear when all three discriminant and leading-coefficient
    balls exclude zero.
    """
    half = math.tan(math.radians(chi_max_deg) / 2.0)
    mids = lattice(n, half)
    r = default_radius(n, half) if r_o is None else float(r_o)
    notes = []
    if n > 1 and 2 * r < (mids[1] - mids[0]):
        notes.append("cells do not overlap; the union does not cover the workspace")
    g1, g2 = np.meshgrid(mids, mids, indexing="ij")
    xm = np.column_stack([g1.ravel(), g2.ravel(), np.full(g1.size, float(o3))])
    xr = np.column_stack([np.full(g1.size, r), np.full(g1.size, r), np.full(g1.size, float(o3_rad))])
    if _is_canonical(params):
        packed = pack_o_polys(list(reference_wc()) + list(reference_winf()))
        vm, vr = packed.eval_grid(xm, xr, backend)
        dm, dr, lm, lr = vm[:, :3], vr[:, :3], vm[:, 3:], vr[:, 3:]
    else:
        legs = _leg_polys(params, DEFAULT_PREC)
        packed = pack_o_polys([p for leg in legs for p in leg])
        vm, vr = packed.eval_grid(xm, xr, backend)
        dm = np.empty((len(xm), 3))
        dr = np.empty((len(xm), 3))
        for i in range(3):
            am, ar = vm[:, 3 * i], vr[:, 3 * i]
            bm, br = vm[:, 3 * i + 1], vr[:, 3 * i + 1]
            cm, cr = vm[:, 3 * i + 2], vr[:, 3 * i + 2]
            out = leaf_grid(am, ar, bm, br, cm, cr, backend)
            dm[:, i], dr[:, i] = out[0], out[1]
        lm, lr = vm[:, 0::3], vr[:, 0::3]
    dmig = _mig(dm, dr).reshape(n, n, 3)
    lmig = _mig(lm, lr).reshape(n, n, 3)
    both = np.minimum(dmig.min(axis=2), lmig.min(axis=2))
    idx = np.unravel_index(int(np.argmin(both)), both.shape)
    clear = bool((dmig > 0).all() and (lmig > 0).all())
    return ClearanceReport(n, r, float(o3), half, mids, mids.copy(), dmig, lmig, clear,
                           (float(mids[idx[0]]), float(mids[idx[1]])), float(both[idx]), notes)


@dataclass
class MarginReport:
    schedule: tuple
    verdicts: tuple
    max_safe: float | None
    first_failing: float | None
    min_delta: tuple
    method: str = "bisect"
    details: tuple = ()

    def lines(self) -> list:
        out = []
        for r, v, d in zip(self.schedule, self.verdicts, self.min_delta):
            out.append(f"{r:.3g},{v},{d:.17g}")
        return out


def margin_search(params: DesignParams = DesignParams(), schedule=DEFAULT_SCHEDULE,
                  n: int = 35, chi_max_deg: float = 20.0, method: str = "bisect",
                  backend: str | None = None, max_boxes: int = 2_000_000) -> MarginReport:
    """Largest scheduled radius on the fabrication parameters keeping W* clear.

    ``method="bisect"`` proves clearance for every design in the radius box
    by branch and bound over designs and orientations (see
    certify_clearance).  ``method="direct"`` runs scan_workspace once with
    ball coefficients enclosing the whole box, which is sound but loses
    clearance early because of wrapping.  Yaw does not move the discriminant
    loci (beta1 is 0), so orientations are taken at o3 = 0.
    """
    schedule = tuple(sorted(float(r) for r in schedule))
    verdicts, mins, details = [], [], []
    for r in schedule:
        if method == "bisect":
            cert = certify_clearance(params, r, chi_max_deg, max_boxes)
            verdicts.append(cert.status)
            mins.append(cert.min_lower)
            details.append(cert)
        elif method == "direct":
            rep = scan_workspace(params.with_uncertainty(r), n, 0.0, chi_max_deg, backend=backend)
            verdicts.append(rep.verdict)
            mins.append(float(rep.min_delta_mig().min()))
            details.append(rep)
        else:
            raise ValueError(f"unknown method {method!r}")
    max_safe = None
    first_fail = None
    for r, v in zip(schedule, verdicts):
        if v != "clear":
            first_fail = r
            break
        max_safe = r
    return MarginReport(schedule, tuple(verdicts), max_safe, first_fail, tuple(mins), method,
                        tuple(details))


# -- parameter-space branch and bound -----------------------------------------
#
# With beta1 = 0 each leg's discriminant and leading coefficient are positive
# multiples of
#     g_delta = sin^2(a1) (1 - vz^2) - (cos(a1) vz + cos(a2))^2
#     g_lead  = -(cos(a1) vz + cos(a2)) - sin(a1) (-sin(eta) vx + cos(eta) vy)
# where v = Rx(chi1) Ry(chi2) Rz(eta) Rx(-beta2) z0 is the platform direction
# of the leg (yaw fixed to 0).  Proving g_delta > 0 and g_lead != 0 on the
# whole box of designs and orientations is therefore equivalent to clearance
# of every design inside the radii.


def _leg_g(x):
    """(g_delta, g_lead) for box coordinates x = (a1, a2, b2, eta, chi1, chi2)."""
    a1, a2, b2, eta, c1, c2 = x
    sa, ca = a1.sin(), a1.cos()
    c_a2 = a2.cos()
    se, ce = eta.sin(), eta.cos()
    sb, cb = b2.sin(), b2.cos()
    nx, ny, nz = -(se * sb), ce * sb, cb
    s1, k1 = c1.sin(), c1.cos()
    s2, k2 = c2.sin(), c2.cos()
    y1 = k2 * nx + s2 * nz
    y3 = -(s2 * nx) + k2 * nz
    vx = y1
    vy = k1 * ny - s1 * y3
    vz = s1 * ny + k1 * y3
    t = ca * vz + c_a2
    g_delta = sa * sa * (1.0 - vz * vz) - t * t
    g_lead = -t - sa * (-(se * vx) + ce * vy)
    return g_delta, g_lead


def _centered(dual_val, point_val, half):
    """Intersection of the natural and mean-value enclosures: (lower, upper)."""
    spread = np.zeros_like(half[:, 0])
    for k, gk in enumerate(dual_val.g):
        spread = spread + gk.mag() * half[:, k]
    spread = np.nextafter(spread * (1.0 + 2.0**-48), np.inf)
    lo = np.maximum(dual_val.v.lower(), np.nextafter(point_val.lower() - spread, -np.inf))
    hi = np.minimum(dual_val.v.upper(), np.nextafter(point_val.upper() + spread, np.inf))
    return lo, hi


@dataclass
class BoxCertificate:
    """Result of the parameter-space branch and bound for one radius."""

    radius: float
    status: str  # "clear", "not-clear" or "undecided"
    boxes: int
    min_lower: float
    # (leg, box centre (a1, a2, b2, eta, chi1, chi2), g_delta, g_lead) of a refuting design
    witness: tuple | None = None
    per_leg: dict = field(default_factory=dict)

    @property
    def clear(self) -> bool:
        return self.status == "clear"


def certify_clearance(params: DesignParams = DesignParams(), r: float | None = None,
                      chi_max_deg: float = 20.0, max_boxes: int = 2_000_000,
                      chunk: int = 50_000) -> BoxCertificate:
    """Prove (or refute) clearance of every design within the radii over W*(o3 = 0)."""
    from .numerics.ballvec import BallVec, Dual

    if r is not None:
        params = params.with_uncertainty(r)
    if params.radius("beta1"):
        raise ValueError("beta1 must stay exactly 0 for this certificate")
    if params.angle("beta1").k != 0:
        raise ValueError("the branch and bound assumes beta1 = 0")
    inflate = lambda h: h * (1.0 + 2.0**-50) + 2.0**-60  # noqa: E731
    chi = math.radians(chi_max_deg)
    total = 0
    worst = math.inf
    per_leg = {}
    for leg in (1, 2, 3):
        names = ("alpha1", "alpha2", "beta2", f"eta{leg}")
        c0 = np.array([float(params.angle(n)) for n in names] + [0.0, 0.0])
        h0 = np.array([inflate(params.radius(n)) for n in names] + [inflate(chi), inflate(chi)])
        centres = c0[None, :]
        halves = h0[None, :]
        # reference sign of the leading coefficient at the nominal orientation
        p0 = [BallVec(np.array([c0[k]])) for k in range(6)]
        lead_sign = np.sign(_leg_g(p0)[1].m[0])
        leg_boxes = 0
        leg_min = math.inf
        while len(centres):
            if total > max_boxes:
                return BoxCertificate(params.radius("alpha1"), "undecided", total, worst,
                                      None, per_leg)
            pending_c, pending_h = [], []
            for s in range(0, len(centres), chunk):
                C = centres[s:s + chunk]
                H = halves[s:s + chunk]
                total += len(C)
                leg_boxes += len(C)
                xd = [Dual.variable(C[:, k], H[:, k], k, 6) for k in range(6)]
                xp = [BallVec(C[:, k]) for k in range(6)]
                gd, gl = _leg_g(xd)
                pd, pl = _leg_g(xp)
                d_lo, _ = _centered(gd, pd, H)
                l_lo, l_hi = _centered(gl, pl, H)
                ok_d = d_lo > 0
                ok_l = (l_lo > 0) | (l_hi < 0)
                done = ok_d & ok_l
                leg_min = min(leg_min, float(np.min(np.where(ok_d, d_lo, np.inf), initial=np.inf)))
                # refutation: a box centre with a certified non-positive discriminant,
                # or a certified leading-coefficient sign opposite to the reference
                bad_d = pd.upper() <= 0
                bad_l = (pl.lower() > 0) if lead_sign < 0 else (pl.upper() < 0)
                bad = bad_d | bad_l
                if bad.any():
                    k = int(np.argmax(bad))
                    witness = (leg, tuple(float(x) for x in C[k]), float(pd.m[k]), float(pl.m[k]))
                    return BoxCertificate(params.radius("alpha1"), "not-clear", total,
                                          min(worst, leg_min), witness, per_leg)
                und = ~done
                if und.any():
                    Cu, Hu = C[und], H[und]
                    # split where the first-order spread is largest
                    score = np.zeros_like(Hu)
                    for k in range(6):
                        score[:, k] = (gd.g[k].mag()[und] + gl.g[k].mag()[und]) * Hu[:, k]
                    dim = np.argmax(score, axis=1)
                    rows = np.arange(len(Cu))
                    Hn = Hu.copy()
                    Hn[rows, dim] = Hu[rows, dim] / 2.0
                    Cl = Cu.copy()
                    Cr = Cu.copy()
                    Cl[rows, dim] -= Hn[rows, dim]
                    Cr[rows, dim] += Hn[rows, dim]
                    # halves are inflated so the children cover the parent despite rounding
                    Hn[rows, dim] = np.nextafter(Hn[rows, dim] * (1.0 + 2.0**-50), np.inf)
                    pending_c += [Cl, Cr]
                    pending_h += [Hn, Hn]
            if pending_c:
                centres = np.concatenate(pending_c)
                halves = np.concatenate(pending_h)
            else:
                centres = np.empty((0, 6))
                halves = np.empty((0, 6))
        per_leg[leg] = {"boxes": leg_boxes, "min_lower": leg_min}
        worst = min(worst, leg_min)
    return BoxCertificate(params.radius("alpha1"), "clear", total, worst, None, per_leg)
