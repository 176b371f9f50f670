"""Kreĭn-formula construction of Dirichlet Laplacians on a non-convex wedge."""

__version__ = "0.1.0"
