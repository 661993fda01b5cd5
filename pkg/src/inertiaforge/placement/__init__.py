from .modify import Direction, modify_inertia, shift_inertia
from .sweep import (
    SweepPoint,
    SweepResult,
    SweepSettings,
    fault_magnitude,
    run_sweeps,
    severity_correlation,
    sweep_inertia,
    write_sweep_csv,
)
from .weights import PlacementProcedure, parse_procedure, procedure_weights, sampling_weights

__all__ = [
    "Direction",
    "PlacementProcedure",
    "SweepPoint",
    "SweepResult",
    "SweepSettings",
    "fault_magnitude",
    "modify_inertia",
    "parse_procedure",
    "procedure_weights",
    "run_sweeps",
    "sampling_weights",
    "severity_correlation",
    "shift_inertia",
    "sweep_inertia",
    "write_sweep_csv",
]
