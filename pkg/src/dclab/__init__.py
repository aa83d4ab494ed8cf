"""Numerical toolkit for the radial Dirac-Coulomb operator at critical coupling:
fundamental solutions, the distinguished inverse, the one-parameter family of
self-adjoint extensions and their spectra in the gap (-1, 1)."""

__version__ = "0.1.0"

from .homogeneous import Coupling, FundamentalSystem, build_fundamental_system  # noqa: E402
from .radial import RadialGrid, SpinorFunction, make_grid  # noqa: E402
from .greenop import GreenOperator, apply_sd_inverse, build_green_operator  # noqa: E402
from .extensions import BoundaryData, ExtensionSpec, deficiency_index  # noqa: E402
from .spectral import SpectralReport, eigenvalues_in_gap, sommerfeld_energy  # noqa: E402

__all__ = [
    "Coupling", "FundamentalSystem", "build_fundamental_system",
    "RadialGrid", "SpinorFunction", "make_grid",
    "GreenOperator", "apply_sd_inverse", "build_green_operator",
    "BoundaryData", "ExtensionSpec", "deficiency_index",
    "SpectralReport", "eigenvalues_in_gap", "sommerfeld_energy",
]
