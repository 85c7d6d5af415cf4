"""Kirkwood-Dirac quasi-probability numerics."""

__version__ = "0.1.0"
