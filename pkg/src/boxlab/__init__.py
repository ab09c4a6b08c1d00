"""Selecting the best of n boxes from noisy observations of their rewards."""

__version__ = "0.1.0"
