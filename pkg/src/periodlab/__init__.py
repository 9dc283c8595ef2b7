"""Iterated period integrals and multiple L-values of cusp forms."""
