from .laplacian import build_laplacian, incidence_matrix
from .modes import SpectralModes, fiedler, slow_modes
from .response import (
    HomogeneousParams,
    ModeTimescale,
    analytic_delta_omega,
    analytic_rocof,
    analytic_rocof_closed_form,
    mode_frequencies,
    mode_timescale_report,
    regional_mode_mass,
)

__all__ = [
    "HomogeneousParams",
    "ModeTimescale",
    "SpectralModes",
    "analytic_delta_omega",
    "analytic_rocof",
    "analytic_rocof_closed_form",
    "build_laplacian",
    "fiedler",
    "incidence_matrix",
    "mode_frequencies",
    "mode_timescale_report",
    "regional_mode_mass",
    "slow_modes",
]
