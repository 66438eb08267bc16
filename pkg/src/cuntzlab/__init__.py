"""Finite-truncation laboratory for Cuntz representations and shifts of B(H)."""

__version__ = "0.1.0"
