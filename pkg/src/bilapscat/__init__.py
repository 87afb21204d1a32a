"""Scattering theory tools for the discrete bi-Laplacian ``Δ² + V`` on the integers."""

__version__ = "0.1.0"
