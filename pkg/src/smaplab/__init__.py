"""Pseudo-spectral laboratory for 2D cubic NLS and Schrodinger maps into S^2."""

__version__ = "0.1.0"
