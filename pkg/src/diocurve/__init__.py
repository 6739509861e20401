"""Inhomogeneous Diophantine approximation on planar and space curves."""

__version__ = "0.1.0"
