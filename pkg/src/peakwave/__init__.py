"""Smooth and peaked periodic traveling waves of the fractional KdV equation."""

__version__ = "0.1.0"
