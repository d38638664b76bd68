"""Epsilon-subdifferential calculus for convex integral functionals in R^1 and R^2."""
