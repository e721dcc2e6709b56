"""Gauss sums, continued-fraction renormalization of sum e(n^2 x)/n, and
mean-oscillation bounds for gap Fourier series."""

__version__ = "0.1.0"
