"""Numerical laboratory for the zero set of the hyperbolic Gaussian analytic function."""

__version__ = "0.1.0"
