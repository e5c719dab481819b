"""Scalars for certified evaluation: exact field elements, balls, the double ball kernel."""

from .algebraic import SQRT2, SQRT3, SQRT6, AlgebraicScalar
from .ball import DEFAULT_PREC, Ball, BallError, PrecisionSpec, boxed, parse_rational
from .kernel import BACKEND

__all__ = [
    "AlgebraicScalar",
    "SQRT2",
    "SQRT3",
    "SQRT6",
    "Ball",
    "BallError",
    "PrecisionSpec",
    "boxed",
    "parse_rational",
    "DEFAULT_PREC",
    "BACKEND",
]
