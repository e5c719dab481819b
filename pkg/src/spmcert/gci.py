"""Conditioning indices and the global conditioning index over W*.

Plain floating-point evaluation; nothing here is certified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import DesignParams

__all__ = ["zeta", "ConditioningSample", "GCIResult", "kinematic_matrices", "gci", "type1_map", "Type1Map"]


def _wnorm(m: np.ndarray) -> float:
    return math.sqrt(float(np.sum(m * m)) / m.shape[0])


def zeta(m) -> float:
    """1 / (||M|| ||M^-1||) with ||M|| = sqrt(tr(M^T M) / n); 0 for a singular M."""
    m = np.asarray(m, dtype=np.float64)
    try:
        inv = np.linalg.inv(m)
    except np.linalg.LinAlgError:
        return 0.0
    if not np.all(np.isfinite(inv)):
        return 0.0
    with np.errstate(over="ignore"):
        k = _wnorm(m) * _wnorm(inv)
    if not math.isfinite(k) or k == 0.0:
        return 0.0
    return min(1.0, 1.0 / k)


@dataclass
class ConditioningSample:
    chi1: float
    chi2: float
    zeta_J: float
    zeta_A: float
    zeta_B: float


def _rz(t):
    c, s = np.cos(t), np.sin(t)
    o, z = np.ones_like(t), np.zeros_like(t)
    return np.stack([np.stack([c, -s, z], -1), np.stack([s, c, z], -1), np.stack([z, z, o], -1)], -2)


def _rx(t):
    c, s = np.cos(t), np.sin(t)
    o, z = np.ones_like(t), np.zeros_like(t)
    return np.stack([np.stack([o, z, z], -1), np.stack([z, c, -s], -1), np.stack([z, s, c], -1)], -2)


def _ry(t):
    c, s = np.cos(t), np.sin(t)
    o, z = np.ones_like(t), np.zeros_like(t)
    return np.stack([np.stack([c, z, s], -1), np.stack([z, o, z], -1), np.stack([-s, z, c], -1)], -2)


def _theta_plus(params, chi):
    from .kantorovich import _plus_leaf_grid

    return 2.0 * np.arctan(_plus_leaf_grid(params, np.tan(chi / 2.0)))


def kinematic_matrices(params: DesignParams, chi, theta=None):
    """(A, B) for N orientations (array (N, 3)): A rows w_i x v_i, B = diag((u_i x w_i) . v_i).

    With these, A omega = B theta_dot, omega the platform angular velocity.
    theta defaults to the (+++) leaf.
    """
    chi = np.atleast_2d(np.asarray(chi, dtype=np.float64))
    if theta is None:
        theta = _theta_plus(params, chi)
    theta = np.atleast_2d(theta)
    g = lambda name: params.value(name, "float")  # noqa: E731
    a1, b1, b2 = g("alpha1"), g("beta1"), g("beta2")
    m = _rz(chi[:, 2]) @ _rx(chi[:, 0]) @ _ry(chi[:, 1])
    z0 = np.array([0.0, 0.0, 1.0])
    n = len(chi)
    amat = np.empty((n, 3, 3))
    bdiag = np.empty((n, 3))
    for i in range(3):
        eta = g(f"eta{i + 1}")
        frame = _rz(np.array(eta)) @ _rx(np.array(b1 - math.pi))
        u = frame @ z0
        w = (frame @ _rz(theta[:, i]) @ _rx(np.array(a1))) @ z0
        v = m @ (_rz(np.array(eta)) @ _rx(np.array(-b2)) @ z0)
        amat[:, i, :] = np.cross(w, v)
        bdiag[:, i] = np.einsum("nk,nk->n", np.cross(np.broadcast_to(u, w.shape), w), v)
    bmat = np.zeros((n, 3, 3))
    for i in range(3):
        bmat[:, i, i] = bdiag[:, i]
    return amat, bmat


@dataclass
class GCIResult:
    gci: float
    zeta_min: float
    zeta_max: float
    samples: list

    def to_csv(self) -> str:
        lines = ["# conditioning grid v1; chi in degrees; zeta dimensionless", "chi1_deg,chi2_deg,zeta_J,zeta_A,zeta_B"]
        for s in self.samples:
            lines.append(",".join(f"{v:.17g}" for v in (math.degrees(s.chi1), math.degrees(s.chi2),
                                                       s.zeta_J, s.zeta_A, s.zeta_B)))
        return "\n".join(lines) + "\n"


def _grid(n, chi_max_deg, chi2_max_deg=None):
    c1 = np.radians(chi_max_deg)
    c2 = np.radians(chi_max_deg if chi2_max_deg is None else chi2_max_deg)
    g1 = np.zeros(1) if n == 1 else np.linspace(-c1, c1, n)
    g2 = np.zeros(1) if n == 1 else np.linspace(-c2, c2, n)
    a, b = np.meshgrid(g1, g2, indexing="ij")
    return np.column_stack([a.ravel(), b.ravel(), np.zeros(a.size)])


def _samples(params, chi):
    amat, bmat = kinematic_matrices(params, chi)
    out = []
    for k in range(len(chi)):
        za, zb = zeta(amat[k]), zeta(bmat[k])
        if za == 0.0 or zb == 0.0:
            zj = 0.0
        else:
            zj = zeta(np.linalg.solve(amat[k], bmat[k]))
        out.append(ConditioningSample(float(chi[k, 0]), float(chi[k, 1]), zj, za, zb))
    return out


def gci(params: DesignParams = DesignParams(), n: int = 80, chi_max_deg: float = 20.0) -> GCIResult:
    """Mean of zeta(J), J = A^-1 B, on an n x n grid over |chi1|, |chi2| <= chi_max_deg, chi3 = 0."""
    if n < 1:
        raise ValueError("grid needs at least one point per axis")
    samples = _samples(params, _grid(n, chi_max_deg))
    for s in samples:
        if s.zeta_J == 0.0:
            raise ArithmeticError(f"singular Jacobian at chi = ({math.degrees(s.chi1)}, {math.degrees(s.chi2)}) deg")
    z = [s.zeta_J for s in samples]
    return GCIResult(math.fsum(z) / len(z), min(z), max(z), samples)


@dataclass
class Type1Map:
    chi: np.ndarray  # (N, 3) rad
    zeta_B: np.ndarray
    mask: np.ndarray
    threshold: float

    @property
    def any(self) -> bool:
        return bool(self.mask.any())

    def to_csv(self) -> str:
        lines = [f"# type-1 map v1; chi in degrees; threshold {self.threshold!r}", "chi1_deg,chi2_deg,zeta_B,below"]
        for c, z, m in zip(self.chi, self.zeta_B, self.mask):
            lines.append(f"{math.degrees(c[0]):.17g},{math.degrees(c[1]):.17g},{z:.17g},{int(m)}")
        return "\n".join(lines) + "\n"


def type1_map(params: DesignParams = DesignParams(), n: int = 41, threshold: float = 0.25,
              chi1_max_deg: float = 20.0, chi2_max_deg: float | None = None) -> Type1Map:
    """zeta(B) on a grid; mask where it is at or below ``threshold`` (near Type-1 singularities).

    Past a singularity the (+++) leaf has no real value and zeta(B) is 0.
    """
    chi = _grid(n, chi1_max_deg, chi2_max_deg)
    if chi2_max_deg == 0:
        chi = chi[np.unique(chi[:, 0], return_index=True)[1]]
    _, bmat = kinematic_matrices(params, chi)
    zb = np.array([zeta(b) for b in bmat])
    return Type1Map(chi, zb, zb <= threshold, threshold)
