"""Leg vectors, the closure constraint and its Jacobians.

Every function is generic over the scalar type: plain floats, :class:`Ball`
enclosures, or exact :class:`AlgebraicScalar` values when all angles are
rational multiples of pi with a known exact sine and cosine.  Vectors are
3-tuples and matrices are 3-tuples of rows, all in the base frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

from .numerics.algebraic import SQRT2, SQRT3, AlgebraicScalar
from .numerics.ball import DEFAULT_PREC, Ball, parse_rational

__all__ = [
    "PiAngle",
    "DesignParams",
    "Orientation",
    "JointVector",
    "ExactAngleError",
    "sincos",
    "rot",
    "drot",
    "matmul",
    "matvec",
    "dot",
    "cross",
    "base_vector",
    "intermediate_vector",
    "platform_vector",
    "constraint_f",
    "jacobians",
    "PARAM_NAMES",
    "VARPI",
]

PARAM_NAMES = ("alpha1", "alpha2", "beta1", "beta2", "eta1", "eta2", "eta3")
# the fabrication parameters that carry uncertainty; beta1 stays exactly 0
VARPI = ("alpha1", "alpha2", "beta2", "eta1", "eta2", "eta3")


class ExactAngleError(ValueError):
    """An angle has no exact sine/cosine in Q(sqrt2, sqrt3); use a Ball or float build."""


_HALF = Fraction(1, 2)
_R2 = SQRT2 * _HALF
_R3 = SQRT3 * _HALF
_ONE = AlgebraicScalar(1)
_ZERO = AlgebraicScalar(0)

# (sin, cos) for k*pi with k in [0, 2)
_EXACT = {
    Fraction(0): (_ZERO, _ONE),
    Fraction(1, 6): (AlgebraicScalar(_HALF), _R3),
    Fraction(1, 4): (_R2, _R2),
    Fraction(1, 3): (_R3, AlgebraicScalar(_HALF)),
    Fraction(1, 2): (_ONE, _ZERO),
    Fraction(2, 3): (_R3, AlgebraicScalar(-_HALF)),
    Fraction(3, 4): (_R2, -_R2),
    Fraction(5, 6): (AlgebraicScalar(_HALF), -_R3),
    Fraction(1): (_ZERO, -_ONE),
}


@dataclass(frozen=True)
class PiAngle:
    """The angle ``k * pi`` for a rational k."""

    k: Fraction

    def __post_init__(self):
        object.__setattr__(self, "k", parse_rational(self.k))

    def exact_sincos(self) -> tuple[AlgebraicScalar, AlgebraicScalar]:
        k = self.k % 2
        if k in _EXACT:
            return _EXACT[k]
        if k - 1 in _EXACT:
            s, c = _EXACT[k - 1]
            return -s, -c
        raise ExactAngleError(f"no exact sin/cos for {self.k}*pi; build with Ball or float scalars")

    def has_exact(self) -> bool:
        try:
            self.exact_sincos()
        except ExactAngleError:
            return False
        return True

    def __float__(self) -> float:
        return float(self.k) * math.pi

    def to_ball(self, rad: float = 0.0, prec: int = DEFAULT_PREC) -> Ball:
        b = Ball.pi(prec + 8) * Ball(self.k, 0.0, prec + 8)
        b = b.with_prec(prec)
        return b + Ball(0, rad, prec) if rad else b

    def __neg__(self):
        return PiAngle(-self.k)

    def __add__(self, other):
        if isinstance(other, PiAngle):
            return PiAngle(self.k + other.k)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, PiAngle):
            return PiAngle(self.k - other.k)
        return NotImplemented

    def __str__(self) -> str:
        return f"{self.k}*pi"


def sincos(angle):
    """(sin, cos) in the scalar type of ``angle``."""
    if isinstance(angle, PiAngle):
        return angle.exact_sincos()
    if isinstance(angle, Ball):
        return angle.sin(), angle.cos()
    x = float(angle)
    return math.sin(x), math.cos(x)


def _zero_one(like):
    if isinstance(like, Ball):
        return Ball(0, 0.0, like.prec), Ball(1, 0.0, like.prec)
    if isinstance(like, AlgebraicScalar):
        return _ZERO, _ONE
    return 0.0, 1.0


def rot(axis: str, angle):
    """Right-handed rotation matrix about a coordinate axis."""
    s, c = sincos(angle)
    z, o = _zero_one(s)
    if axis == "x":
        return ((o, z, z), (z, c, -s), (z, s, c))
    if axis == "y":
        return ((c, z, s), (z, o, z), (-s, z, c))
    if axis == "z":
        return ((c, -s, z), (s, c, z), (z, z, o))
    raise ValueError(f"axis must be x, y or z, not {axis!r}")


def drot(axis: str, angle):
    """Derivative of ``rot(axis, angle)`` with respect to the angle."""
    s, c = sincos(angle)
    z, _ = _zero_one(s)
    if axis == "x":
        return ((z, z, z), (z, -s, -c), (z, c, -s))
    if axis == "y":
        return ((-s, z, c), (z, z, z), (-c, z, -s))
    if axis == "z":
        return ((-s, -c, z), (c, -s, z), (z, z, z))
    raise ValueError(f"axis must be x, y or z, not {axis!r}")


def matmul(a, b):
    return tuple(
        tuple(a[i][0] * b[0][k] + a[i][1] * b[1][k] + a[i][2] * b[2][k] for k in range(3))
        for i in range(3)
    )


def matvec(a, x):
    return tuple(a[i][0] * x[0] + a[i][1] * x[1] + a[i][2] * x[2] for i in range(3))


def dot(x, y):
    return x[0] * y[0] + x[1] * y[1] + x[2] * y[2]


def cross(x, y):
    return (
        x[1] * y[2] - x[2] * y[1],
        x[2] * y[0] - x[0] * y[2],
        x[0] * y[1] - x[1] * y[0],
    )


def _z0(like):
    z, o = _zero_one(like)
    return (z, z, o)


# -- parameters ---------------------------------------------------------------


@dataclass(frozen=True)
class DesignParams:
    """Conception angles (exact multiples of pi) with per-parameter uncertainty radii (rad)."""

    alpha1: PiAngle = PiAngle(Fraction(1, 4))
    alpha2: PiAngle = PiAngle(Fraction(1, 2))
    beta1: PiAngle = PiAngle(Fraction(0))
    beta2: PiAngle = PiAngle(Fraction(1, 2))
    eta: tuple = (PiAngle(Fraction(0)), PiAngle(Fraction(2, 3)), PiAngle(Fraction(4, 3)))
    radii: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.eta) != 3:
            raise ValueError("eta needs three angles")
        for name, r in self.radii.items():
            if name not in PARAM_NAMES:
                raise ValueError(f"unknown parameter {name!r}")
            if not r >= 0:
                raise ValueError(f"radius of {name} must be >= 0")

    @classmethod
    def canonical(cls) -> DesignParams:
        return cls()

    def __hash__(self):
        return hash((self.alpha1, self.alpha2, self.beta1, self.beta2, self.eta,
                     tuple(sorted(self.radii.items()))))

    def angle(self, name: str) -> PiAngle:
        if name.startswith("eta"):
            return self.eta[int(name[3:]) - 1]
        return getattr(self, name)

    def radius(self, name: str) -> float:
        return float(self.radii.get(name, 0.0))

    def with_uncertainty(self, r: float, names=VARPI) -> DesignParams:
        """Same angles with radius ``r`` on each named parameter (beta1 is never perturbed)."""
        radii = {n: float(r) for n in names if n != "beta1"}
        return replace(self, radii=radii)

    def with_angle(self, name: str, value) -> DesignParams:
        a = value if isinstance(value, PiAngle) else PiAngle(parse_rational(value))
        if name.startswith("eta"):
            eta = list(self.eta)
            eta[int(name[3:]) - 1] = a
            return replace(self, eta=tuple(eta))
        return replace(self, **{name: a})

    def is_exact(self) -> bool:
        return not any(self.radii.values()) and all(
            self.angle(n).has_exact() for n in PARAM_NAMES
        )

    def value(self, name: str, kind: str = "float", prec: int = DEFAULT_PREC):
        """The parameter as a scalar of the given kind ("exact", "float" or "ball").

        "exact" returns the PiAngle itself (sincos then gives field elements);
        "ball" includes the uncertainty radius.
        """
        a = self.angle(name)
        if kind == "exact":
            if self.radius(name):
                raise ExactAngleError(f"{name} carries an uncertainty radius")
            return a
        if kind == "ball":
            return a.to_ball(self.radius(name), prec)
        if kind == "float":
            return float(a)
        raise ValueError(f"unknown scalar kind {kind!r}")

    @classmethod
    def from_file(cls, path) -> DesignParams:
        return cls.from_text(Path(path).read_text())

    @classmethod
    def from_text(cls, text: str) -> DesignParams:
        """Parse ``key = value`` lines.

        Angle keys (alpha1, alpha2, beta1, beta2, eta1, eta2, eta3) take
        rationals in units of pi ("1/4").  ``r_<name>`` gives a radius in rad
        and ``radius`` sets the same radius on every fabrication parameter.
        Blank lines and ``#`` comments are ignored; missing keys keep their
        canonical value.
        """
        p = cls()
        radii = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            val = val.strip("\"'")
            if key in PARAM_NAMES:
                p = p.with_angle(key, val)
            elif key.startswith("r_") and key[2:] in PARAM_NAMES:
                radii[key[2:]] = float(parse_rational(val))
            elif key == "radius":
                for n in VARPI:
                    radii.setdefault(n, float(parse_rational(val)))
            else:
                raise ValueError(f"line {lineno}: unknown key {key!r}")
        return replace(p, radii=radii)

    def to_text(self) -> str:
        lines = [f"{n} = {self.angle(n).k}" for n in PARAM_NAMES]
        lines += [f"r_{n} = {r!r}" for n, r in sorted(self.radii.items()) if r]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Orientation:
    """Roll, pitch, yaw (rad) in the ZXY convention M = Rz(chi3) Rx(chi1) Ry(chi2)."""

    chi: tuple

    @classmethod
    def from_degrees(cls, c1, c2, c3) -> Orientation:
        return cls(tuple(math.radians(float(c)) for c in (c1, c2, c3)))

    @classmethod
    def from_tan(cls, o) -> Orientation:
        return cls(tuple(2.0 * math.atan(float(x)) for x in o))

    @property
    def o(self) -> tuple:
        for c in self.chi[:2]:
            if abs(float(c)) >= math.pi:
                raise ValueError("roll and pitch must lie in (-pi, pi)")
        return tuple(math.tan(float(c) / 2.0) for c in self.chi)


@dataclass(frozen=True)
class JointVector:
    """Actuated joint angles theta (rad)."""

    theta: tuple

    @classmethod
    def from_degrees(cls, t1, t2, t3) -> JointVector:
        return cls(tuple(math.radians(float(t)) for t in (t1, t2, t3)))

    @classmethod
    def from_tan(cls, j) -> JointVector:
        return cls(tuple(2.0 * math.atan(float(x)) for x in j))

    @property
    def j(self) -> tuple:
        return tuple(math.tan(float(t) / 2.0) for t in self.theta)


# -- scalar kind dispatch -----------------------------------------------------


def _kind_of(*angles):
    kind, prec = "exact", DEFAULT_PREC
    for a in angles:
        if isinstance(a, Ball):
            return "ball", a.prec
        if not isinstance(a, PiAngle):
            kind = "float"
    return kind, prec


def _p(params: DesignParams, name: str, kind: str, prec: int):
    return params.value(name, kind, prec)


# -- leg vectors --------------------------------------------------------------


def _check_leg(i):
    if i not in (1, 2, 3):
        raise ValueError("leg index must be 1, 2 or 3")


def _base_frame(i, params, kind, prec):
    # Rz(eta_i) Rx(beta1 - pi)
    eta = _p(params, f"eta{i}", kind, prec)
    b1 = _p(params, "beta1", kind, prec)
    if kind == "exact":
        b1pi = b1 - PiAngle(Fraction(1))
    elif kind == "ball":
        b1pi = b1 - Ball.pi(prec)
    else:
        b1pi = b1 - math.pi
    return matmul(rot("z", eta), rot("x", b1pi))


def base_vector(i: int, params: DesignParams = DesignParams(), kind: str | None = None,
                prec: int = DEFAULT_PREC):
    """u_i = Rz(eta_i) Rx(beta1 - pi) z0."""
    _check_leg(i)
    kind = kind or ("exact" if params.is_exact() else "float")
    frame = _base_frame(i, params, kind, prec)
    return tuple(frame[r][2] for r in range(3))


def intermediate_vector(i: int, theta_i, params: DesignParams = DesignParams(),
                        kind: str | None = None, prec: int | None = None):
    """w_i = Rz(eta_i) Rx(beta1 - pi) Rz(theta_i) Rx(alpha1) z0."""
    _check_leg(i)
    k, p = _kind_of(theta_i)
    kind = kind or k
    prec = prec or p
    frame = _base_frame(i, params, kind, prec)
    a1 = _p(params, "alpha1", kind, prec)
    s, c = sincos(a1)
    z, _ = _zero_one(s)
    rx_z0 = (z, -s, c)
    return matvec(matmul(frame, rot("z", theta_i)), rx_z0)


def _platform_dir(i, params, kind, prec):
    # Rz(eta_i) Rx(-beta2) z0
    eta = _p(params, f"eta{i}", kind, prec)
    b2 = _p(params, "beta2", kind, prec)
    se, ce = sincos(eta)
    sb, cb = sincos(b2)
    return (-(se * sb), ce * sb, cb)


def orientation_matrix(chi):
    """M = Rz(chi3) Rx(chi1) Ry(chi2)."""
    return matmul(matmul(rot("z", chi[2]), rot("x", chi[0])), rot("y", chi[1]))


def platform_vector(i: int, chi, params: DesignParams = DesignParams(),
                    kind: str | None = None, prec: int | None = None):
    """v_i = M Rz(eta_i) Rx(-beta2) z0."""
    _check_leg(i)
    chi = chi.chi if isinstance(chi, Orientation) else tuple(chi)
    k, p = _kind_of(*chi)
    kind = kind or k
    prec = prec or p
    return matvec(orientation_matrix(chi), _platform_dir(i, params, kind, prec))


def constraint_f(theta, chi, params: DesignParams = DesignParams(),
                 kind: str | None = None, prec: int | None = None):
    """f_i = w_i . v_i - cos(alpha2), i = 1..3."""
    theta = theta.theta if isinstance(theta, JointVector) else tuple(theta)
    chi = chi.chi if isinstance(chi, Orientation) else tuple(chi)
    k, p = _kind_of(*theta, *chi)
    kind = kind or k
    prec = prec or p
    _, ca2 = sincos(_p(params, "alpha2", kind, prec))
    out = []
    for i in (1, 2, 3):
        w = intermediate_vector(i, theta[i - 1], params, kind, prec)
        v = platform_vector(i, chi, params, kind, prec)
        out.append(dot(w, v) - ca2)
    return tuple(out)


def jacobians(theta, chi, params: DesignParams = DesignParams(),
              kind: str | None = None, prec: int | None = None):
    """(A, B) with A = df/dchi and B = df/dtheta (diagonal)."""
    theta = theta.theta if isinstance(theta, JointVector) else tuple(theta)
    chi = chi.chi if isinstance(chi, Orientation) else tuple(chi)
    k, p = _kind_of(*theta, *chi)
    kind = kind or k
    prec = prec or p
    rz3, rx1, ry2 = rot("z", chi[2]), rot("x", chi[0]), rot("y", chi[1])
    # dM/dchi1, dM/dchi2, dM/dchi3
    dms = (
        matmul(matmul(rz3, drot("x", chi[0])), ry2),
        matmul(matmul(rz3, rx1), drot("y", chi[1])),
        matmul(matmul(drot("z", chi[2]), rx1), ry2),
    )
    m = matmul(matmul(rz3, rx1), ry2)
    a1 = _p(params, "alpha1", kind, prec)
    s, c = sincos(a1)
    z, _ = _zero_one(s)
    rx_z0 = (z, -s, c)
    rows_a = []
    diag_b = []
    for i in (1, 2, 3):
        frame = _base_frame(i, params, kind, prec)
        w = matvec(matmul(frame, rot("z", theta[i - 1])), rx_z0)
        dw = matvec(matmul(frame, drot("z", theta[i - 1])), rx_z0)
        n = _platform_dir(i, params, kind, prec)
        rows_a.append(tuple(dot(w, matvec(dm, n)) for dm in dms))
        diag_b.append(dot(dw, matvec(m, n)))
    zz = diag_b[0] * 0
    b = tuple(tuple(diag_b[r] if r == col else zz for col in range(3)) for r in range(3))
    return tuple(rows_a), b
