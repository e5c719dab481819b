"""Certified kinematics of 3-DOF spherical parallel manipulators."""

__version__ = "0.1.0"
