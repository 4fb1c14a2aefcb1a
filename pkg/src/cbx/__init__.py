"""Conjugate duality for nondecreasing convex functionals on bounded
continuous functions, on finite and truncated countable metric spaces."""

__version__ = "0.1.0"
