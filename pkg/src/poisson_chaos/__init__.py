"""Poisson point patterns, pathwise chaos integrals, contraction-kernel
algebra, and Monte Carlo verification of second-order central limit theorems."""

__version__ = "0.1.0"
