"""The polynomial form of the closure equations.

With j_i = tan(theta_i/2) and o_k = tan(chi_k/2) every rotation becomes a
rational matrix.  Multiplying each constraint by the positive denominators
(1 + j_i^2)(1 + o1^2)(1 + o2^2)(1 + o3^2) gives polynomials p_i(j_i, o) with
the same real zero set.  Each p_i is quadratic in its own j_i only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, reduce
from importlib import resources

from .geometry import DesignParams, PiAngle, sincos
from .numerics.algebraic import SQRT2, AlgebraicScalar
from .numerics.ball import DEFAULT_PREC, Ball

__all__ = [
    "VARS",
    "Poly",
    "PolySystem",
    "LegQuadratic",
    "build_system",
    "normalize_poly",
    "canonical_system",
    "reference_system",
    "leg_coefficients",
    "leg_quadratic",
    "leg_polys",
    "propagate_uncertainty",
    "dump_system",
    "parse_system",
]

VARS = ("j1", "j2", "j3", "o1", "o2", "o3")
NV = len(VARS)


def _is_zero(c) -> bool:
    if isinstance(c, Ball):
        return c.rad == 0 and c.mid == 0
    if isinstance(c, AlgebraicScalar):
        return c.is_zero()
    return c == 0


class Poly:
    """Sparse polynomial in VARS: a dict from exponent 6-tuples to coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {}
        if terms:
            for e, c in dict(terms).items():
                if not _is_zero(c):
                    self.terms[tuple(e)] = c

    @classmethod
    def const(cls, c) -> Poly:
        return cls({(0,) * NV: c})

    @classmethod
    def var(cls, name: str, one=1) -> Poly:
        e = [0] * NV
        e[VARS.index(name)] = 1
        return cls({tuple(e): one})

    def copy(self) -> Poly:
        p = Poly()
        p.terms = dict(self.terms)
        return p

    def __add__(self, other):
        if not isinstance(other, Poly):
            other = Poly.const(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            if e in out:
                s = out[e] + c
                if _is_zero(s):
                    del out[e]
                else:
                    out[e] = s
            else:
                out[e] = c
        p = Poly()
        p.terms = out
        return p

    __radd__ = __add__

    def __neg__(self):
        p = Poly()
        p.terms = {e: -c for e, c in self.terms.items()}
        return p

    def __sub__(self, other):
        if not isinstance(other, Poly):
            other = Poly.const(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return Poly({e: c * other for e, c in self.terms.items()})
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                prod = c1 * c2
                if e in out:
                    out[e] = out[e] + prod
                else:
                    out[e] = prod
        return Poly(out)

    def __rmul__(self, other):
        return self * other

    def __eq__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        return self.terms == other.terms

    def __len__(self):
        return len(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def monomials(self) -> set:
        return set(self.terms)

    def degree(self, var: str) -> int:
        k = VARS.index(var)
        return max((e[k] for e in self.terms), default=-1)

    def depends_on(self, var: str) -> bool:
        return self.degree(var) > 0

    def coeff_in(self, var: str, d: int) -> Poly:
        """Coefficient of var**d, as a polynomial in the remaining variables."""
        k = VARS.index(var)
        out = {}
        for e, c in self.terms.items():
            if e[k] == d:
                e2 = list(e)
                e2[k] = 0
                out[tuple(e2)] = c
        p = Poly()
        p.terms = out
        return p

    def diff(self, var: str) -> Poly:
        k = VARS.index(var)
        out = {}
        for e, c in self.terms.items():
            if e[k]:
                e2 = list(e)
                e2[k] -= 1
                out[tuple(e2)] = c * e[k]
        return Poly(out)

    def map_coeffs(self, fn) -> Poly:
        return Poly({e: fn(c) for e, c in self.terms.items()})

    def subs(self, values: dict) -> Poly:
        """Substitute scalars for some variables (by name)."""
        idx = {VARS.index(n): v for n, v in values.items()}
        out = {}
        for e, c in self.terms.items():
            val = c
            e2 = list(e)
            for k, v in idx.items():
                if e[k]:
                    val = val * v ** e[k]
                    e2[k] = 0
            t = tuple(e2)
            out[t] = out[t] + val if t in out else val
        return Poly(out)

    def __call__(self, point):
        """Evaluate at a full point (6 scalars, ordered as VARS)."""
        total = None
        for e, c in self.terms.items():
            val = c
            for x, k in zip(point, e):
                if k:
                    val = val * x**k
            total = val if total is None else total + val
        return 0 if total is None else total

    def sorted_terms(self):
        """Terms in lex order j1 > j2 > j3 > o1 > o2 > o3, highest first."""
        return sorted(self.terms.items(), key=lambda t: t[0], reverse=True)

    def __repr__(self):
        return f"Poly({len(self.terms)} terms)"


# -- exact helpers ------------------------------------------------------------


def _div_one_plus_sq(p: Poly, var: str):
    """Exact quotient of p by (1 + var^2), or None if it does not divide."""
    k = VARS.index(var)
    rem = p.copy()
    quot = {}
    while True:
        d = rem.degree(var)
        if d < 2:
            break
        lead = rem.coeff_in(var, d)
        for e, c in lead.terms.items():
            e2 = list(e)
            e2[k] = d - 2
            t = tuple(e2)
            quot[t] = quot[t] + c if t in quot else c
            shift = Poly()
            e3 = list(e2)
            e3[k] = d
            shift.terms = {t: c, tuple(e3): c}
            rem = rem - shift
    if not rem.is_zero():
        return None
    return Poly(quot)


def _rational_content(p: Poly) -> Fraction:
    nums, dens = [], []
    for c in p.terms.values():
        for q in AlgebraicScalar.coerce(c).coeffs:
            if q:
                nums.append(abs(q.numerator))
                dens.append(q.denominator)
    if not nums:
        return Fraction(1)
    g = reduce(math.gcd, nums)
    lcm = reduce(lambda a, b: a * b // math.gcd(a, b), dens)
    return Fraction(g, lcm)


def normalize_poly(p: Poly):
    """Strip (1 + o_k^2) factors and the positive rational content.

    Returns (normalized, removed) where ``p == removed * normalized`` and
    ``removed`` is a Poly (a positive rational times a product of
    (1 + o_k^2) factors).
    """
    removed = Poly.const(AlgebraicScalar(1))
    cur = p
    for var in ("o1", "o2", "o3"):
        while True:
            q = _div_one_plus_sq(cur, var)
            if q is None:
                break
            cur = q
            removed = removed * (Poly.const(AlgebraicScalar(1)) + Poly.var(var, AlgebraicScalar(1)) * Poly.var(var, AlgebraicScalar(1)))
    g = _rational_content(cur)
    cur = cur * (1 / g)
    removed = removed * g
    return cur, removed


# -- system -------------------------------------------------------------------


@dataclass(frozen=True)
class PolySystem:
    """Three polynomials p_i(j_i, o1, o2, o3); ``kind`` is "exact", "float" or "ball"."""

    polys: tuple
    kind: str
    normalized: bool = False

    def __getitem__(self, i):
        return self.polys[i]

    def __iter__(self):
        return iter(self.polys)

    def max_radius(self) -> float:
        if self.kind != "ball":
            return 0.0
        return max(c.rad for p in self.polys for c in p.terms.values())


def _one_zero(kind, prec):
    if kind == "exact":
        return AlgebraicScalar(1), AlgebraicScalar(0)
    if kind == "ball":
        return Ball(1, 0.0, prec), Ball(0, 0.0, prec)
    return 1.0, 0.0


def _hz(x: Poly, one):
    one_p = Poly.const(one)
    xx = x * x
    z = Poly()
    return ((one_p - xx, x * (-2), z), (x * 2, one_p - xx, z), (z, z, one_p + xx))


def _hx(x: Poly, one):
    one_p = Poly.const(one)
    xx = x * x
    z = Poly()
    return ((one_p + xx, z, z), (z, one_p - xx, x * (-2)), (z, x * 2, one_p - xx))


def _hy(x: Poly, one):
    one_p = Poly.const(one)
    xx = x * x
    z = Poly()
    return ((one_p - xx, z, x * 2), (z, one_p + xx, z), (x * (-2), z, one_p - xx))


def _pmatvec(m, v):
    return tuple(m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2] for r in range(3))


def _auto_kind(params: DesignParams) -> str:
    if any(params.radii.values()):
        return "ball"
    return "exact" if params.is_exact() else "float"


def _trig_table(params: DesignParams, kind: str, prec: int) -> dict:
    """(sin, cos) of every angle entering the closure equations."""
    val = lambda n: params.value(n, kind, prec)  # noqa: E731
    if kind == "ball":
        b1pi = val("beta1") - Ball.pi(prec)
    elif kind == "exact":
        b1pi = val("beta1") - PiAngle(Fraction(1))
    else:
        b1pi = val("beta1") - math.pi
    table = {"beta1-pi": sincos(b1pi)}
    for n in ("alpha1", "alpha2", "beta2", "eta1", "eta2", "eta3"):
        table[n] = sincos(val(n))
    return table


def _build(trig: dict, one, zero) -> tuple:
    sb1, cb1 = trig["beta1-pi"]
    sa1, ca1 = trig["alpha1"]
    _, ca2 = trig["alpha2"]
    sb2, cb2 = trig["beta2"]
    o1, o2, o3 = (Poly.var(n, one) for n in ("o1", "o2", "o3"))
    m_o = _pmat_mul(_pmat_mul(_hz(o3, one), _hx(o1, one)), _hy(o2, one))
    d_o = (Poly.const(one) + o1 * o1) * (Poly.const(one) + o2 * o2) * (Poly.const(one) + o3 * o3)
    polys = []
    for i in (1, 2, 3):
        se, ce = trig[f"eta{i}"]
        # F = Rz(eta) Rx(beta1 - pi)
        frame = (
            (ce, -(se * cb1), se * sb1),
            (se, ce * cb1, -(ce * sb1)),
            (zero, sb1, cb1),
        )
        j = Poly.var(f"j{i}", one)
        hzj = _hz(j, one)
        rxa = (zero, -sa1, ca1)
        inner = _pmatvec(hzj, tuple(Poly.const(x) for x in rxa))
        w = tuple(sum((inner[c] * frame[r][c] for c in range(3)), Poly()) for r in range(3))
        n = (-(se * sb2), ce * sb2, cb2)
        v = _pmatvec(m_o, tuple(Poly.const(x) for x in n))
        p = w[0] * v[0] + w[1] * v[1] + w[2] * v[2]
        p = p - (Poly.const(one) + j * j) * d_o * ca2
        polys.append(p)
    return tuple(polys)


def build_system(params: DesignParams = DesignParams(), kind: str | None = None,
                 prec: int = DEFAULT_PREC) -> PolySystem:
    """Denominator-cleared closure polynomials, not normalized.

    ``kind="exact"`` needs every angle in the exact sine/cosine table;
    "ball" encloses every design within the parameter radii (naive
    interval evaluation; see propagate_uncertainty for the tighter form).
    """
    kind = kind or _auto_kind(params)
    one, zero = _one_zero(kind, prec)
    return PolySystem(_build(_trig_table(params, kind, prec), one, zero), kind, False)


class _Dual:
    """Ball value with a Ball gradient over the fabrication parameters."""

    __slots__ = ("v", "g")

    def __init__(self, v, g):
        self.v = v
        self.g = g

    def _lift(self, y):
        if isinstance(y, _Dual):
            return y
        return _Dual(y, None)

    def __add__(self, y):
        y = self._lift(y)
        if self.g is None or y.g is None:
            g = self.g if y.g is None else y.g
        else:
            g = tuple(a + b for a, b in zip(self.g, y.g))
        return _Dual(self.v + y.v, g)

    __radd__ = __add__

    def __neg__(self):
        return _Dual(-self.v, None if self.g is None else tuple(-a for a in self.g))

    def __sub__(self, y):
        return self + (-self._lift(y))

    def __rsub__(self, y):
        return (-self) + y

    def __mul__(self, y):
        y = self._lift(y)
        if self.g is None and y.g is None:
            g = None
        elif self.g is None:
            g = tuple(self.v * b for b in y.g)
        elif y.g is None:
            g = tuple(a * y.v for a in self.g)
        else:
            g = tuple(a * y.v + self.v * b for a, b in zip(self.g, y.g))
        return _Dual(self.v * y.v, g)

    __rmul__ = __mul__


def _centered_system(params: DesignParams, prec: int) -> PolySystem:
    """Mean-value enclosure c(w0) + sum_k dc/dw_k([w]) * [-r_k, r_k]."""
    names = [n for n in ("alpha1", "alpha2", "beta2", "eta1", "eta2", "eta3") if params.radius(n)]
    centre = _build(_trig_table(DesignParams(params.alpha1, params.alpha2, params.beta1,
                                             params.beta2, params.eta), "ball", prec),
                    Ball(1, 0.0, prec), Ball(0, 0.0, prec))
    box = _trig_table(params, "ball", prec)
    zero_b = Ball(0, 0.0, prec)
    trig = {}
    for key, (s, c) in box.items():
        if key in names:
            k = names.index(key)
            gs = tuple(c if t == k else zero_b for t in range(len(names)))
            gc = tuple(-s if t == k else zero_b for t in range(len(names)))
            trig[key] = (_Dual(s, gs), _Dual(c, gc))
        else:
            trig[key] = (_Dual(s, None), _Dual(c, None))
    one = _Dual(Ball(1, 0.0, prec), None)
    zero = _Dual(Ball(0, 0.0, prec), None)
    grads = _build(trig, one, zero)
    radii = [Ball(0, params.radius(n), prec) for n in names]
    out = []
    for pc, pg in zip(centre, grads):
        terms = dict(pc.terms)
        for e, d in pg.terms.items():
            if d.g is None:
                continue
            spread = sum((gk * rk for gk, rk in zip(d.g, radii)), Ball(0, 0.0, prec))
            terms[e] = terms[e] + spread if e in terms else spread
        out.append(Poly(terms))
    return PolySystem(tuple(out), "ball", False)


def _pmat_mul(a, b):
    return tuple(
        tuple(a[r][0] * b[0][c] + a[r][1] * b[1][c] + a[r][2] * b[2][c] for c in range(3))
        for r in range(3)
    )


def normalize_system(system: PolySystem) -> PolySystem:
    if system.kind != "exact":
        raise ValueError("only exact systems can be content-normalized")
    return PolySystem(tuple(normalize_poly(p)[0] for p in system), "exact", True)


@lru_cache(maxsize=16)
def _canonical(params: DesignParams) -> PolySystem:
    return normalize_system(build_system(params, "exact"))


def canonical_system(params: DesignParams = DesignParams()) -> PolySystem:
    """Content-normalized exact system (cached per parameter set)."""
    return _canonical(params)


# -- golden reference ---------------------------------------------------------


def dump_system(system: PolySystem) -> str:
    """One ``coeff : (e_j1, ..., e_o3)`` line per term, lex order, blank line between equations."""
    blocks = []
    for p in system:
        lines = []
        for e, c in p.sorted_terms():
            if isinstance(c, Ball):
                cs = f"{c.to_json()['m']} +/- {c.to_json()['r']}"
            else:
                cs = str(c)
            lines.append(f"{cs} : ({', '.join(map(str, e))})")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def parse_system(text: str) -> PolySystem:
    """Inverse of dump_system for exact systems; ``#`` lines are comments."""
    polys, cur = [], {}
    for raw in text.splitlines() + [""]:
        line = raw.strip()
        if line.startswith("#"):
            continue
        if not line:
            if cur:
                polys.append(Poly(cur))
                cur = {}
            continue
        cs, es = line.rsplit(":", 1)
        e = tuple(int(x) for x in es.strip().strip("()").split(","))
        if len(e) != NV:
            raise ValueError(f"bad exponent tuple in {line!r}")
        if e in cur:
            raise ValueError(f"duplicate monomial {e}")
        cur[e] = AlgebraicScalar.parse(cs.strip())
    return PolySystem(tuple(polys), "exact", True)


def reference_system() -> PolySystem:
    """The printed reference system for the canonical design, shipped as package data."""
    text = resources.files("spmcert").joinpath("data/reference_system.txt").read_text()
    return parse_system(text)


# -- per-leg quadratics -------------------------------------------------------


@dataclass(frozen=True)
class LegQuadratic:
    """p_i = a j_i^2 + b j_i + c at a fixed orientation."""

    leg: int
    a: object
    b: object
    c: object

    @property
    def discriminant(self):
        return self.b * self.b - 4 * (self.a * self.c)

    @property
    def leading(self):
        return self.a

    def __call__(self, j):
        return (self.a * j + self.b) * j + self.c


def _o_only(p: Poly) -> tuple:
    """Re-key a polynomial that does not involve j to exponents over (o1, o2, o3)."""
    return tuple((e[3:], c) for e, c in p.sorted_terms())


def leg_coefficients(i: int, params: DesignParams = DesignParams(), kind: str | None = None,
                     prec: int = DEFAULT_PREC, system: PolySystem | None = None):
    """(a, b, c) of leg i as Polys in o (exact systems are normalized first)."""
    if i not in (1, 2, 3):
        raise ValueError("leg index must be 1, 2 or 3")
    if system is None:
        kind = kind or _auto_kind(params)
        system = canonical_system(params) if kind == "exact" else build_system(params, kind, prec)
    p = system[i - 1]
    jv = f"j{i}"
    if p.degree(jv) != 2:
        raise ValueError(f"leg {i} polynomial is not quadratic in {jv}")
    return p.coeff_in(jv, 2), p.coeff_in(jv, 1), p.coeff_in(jv, 0)


@lru_cache(maxsize=32)
def leg_polys(params: DesignParams = DesignParams(), prec: int = DEFAULT_PREC) -> tuple:
    """((a, b, c) for each leg) as Polys in o.

    Exact designs use the content-normalized system.  Designs with radii
    use the centered ball enclosure of the denominator-cleared system, and
    other designs use a float build.
    """
    if params.is_exact():
        return tuple(leg_coefficients(i, params, "exact") for i in (1, 2, 3))
    if any(params.radii.values()):
        system, _ = propagate_uncertainty(params, prec=prec)
    else:
        system = build_system(params, "float")
    return tuple(leg_coefficients(i, system=system) for i in (1, 2, 3))


def leg_quadratic(i: int, o, params: DesignParams = DesignParams(), kind: str | None = None,
                  prec: int = DEFAULT_PREC, system: PolySystem | None = None) -> LegQuadratic:
    """Coefficients of p_i in j_i with o = (o1, o2, o3) substituted."""
    a, b, c = leg_coefficients(i, params, kind, prec, system)
    pt = (0, 0, 0) + tuple(o)
    return LegQuadratic(i, a(pt), b(pt), c(pt))


def propagate_uncertainty(params: DesignParams = DesignParams(), r: float | None = None,
                          prec: int = DEFAULT_PREC, method: str = "centered"):
    """Ball system enclosing every design within the radii, and its max coefficient radius.

    With ``r`` given, that radius is put on every fabrication parameter
    (beta1 stays exact).  Coefficients are those of the denominator-cleared
    system.  ``method="centered"`` uses the mean-value form (value at the
    nominal design plus gradient enclosure times radius); "naive" evaluates
    the build directly in ball arithmetic.
    """
    if r is not None:
        if r < 0:
            raise ValueError("radius must be >= 0")
        params = params.with_uncertainty(r)
    if method == "centered":
        system = _centered_system(params, prec)
    elif method == "naive":
        system = build_system(params, "ball", prec)
    else:
        raise ValueError(f"unknown method {method!r}")
    return system, system.max_radius()


def sqrt2_scaled(system: PolySystem) -> PolySystem:
    """The exact system divided by sqrt(2), the integer-leading form used for reported discriminants."""
    inv = SQRT2.inverse()
    return PolySystem(tuple(p * inv for p in system), system.kind, system.normalized)
