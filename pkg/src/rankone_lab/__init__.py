"""Numerical laboratory for orbit counting, boundary measures and
geodesic dynamics on explicit rank-one model spaces."""

__version__ = "0.1.0"
