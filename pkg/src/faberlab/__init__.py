"""Generalized Faber polynomials and weighted Riemann problems on Jordan curves."""

__version__ = "0.1.0"
