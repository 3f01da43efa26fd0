"""Lefschetz thimbles, Stokes jumps and alien calculus for three model integrals."""

__version__ = "0.1.0"
