"""Sparse variational Gaussian-process classification with inducing points."""

__version__ = "0.1.0"
