"""Numerical laboratory for Maslov (P, omega)-indices of symplectic paths."""

__version__ = "0.1.0"
