"""Solvers and area-inequality verification for graphs and immersions of mean curvature type."""

__version__ = "0.1.0"
