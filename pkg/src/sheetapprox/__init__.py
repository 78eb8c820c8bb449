"""Exact Donsker / Kac-Stroock approximations of Brownian-sheet Wiener integrals."""
__version__ = "0.1.0"
