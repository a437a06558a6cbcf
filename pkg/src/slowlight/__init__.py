"""Slow-light polariton simulator: combinatorics, spectra, pulse transport."""

__version__ = "0.1.0"

from .params import PhysicalParams, derived_rho, optical_density, spectral_window

__all__ = [
    "PhysicalParams",
    "derived_rho",
    "optical_density",
    "spectral_window",
    "__version__",
]
