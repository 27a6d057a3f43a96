"""Hyperbolic structures on partially truncated triangulations and their
canonical decompositions."""

__version__ = "0.1.0"
