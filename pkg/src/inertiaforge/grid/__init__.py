from .artifact import read_grid_artifact, write_grid_artifact
from .lines import DEFAULT_REACTANCE_OHM_PER_KM, line_susceptance
from .model import (
    TECHNOLOGY_TABLE,
    Bus,
    BusKind,
    GeneratorRecord,
    GridModel,
    Line,
    Technology,
    ValidationReport,
    Violation,
    largest_connected_component,
    merge_parallel_lines,
    parse_technology,
    scale_regional_inertia,
    validate,
)
from .synthetic import homogeneous_variant, synth_two_cluster

__all__ = [
    "Bus",
    "BusKind",
    "DEFAULT_REACTANCE_OHM_PER_KM",
    "GeneratorRecord",
    "GridModel",
    "Line",
    "TECHNOLOGY_TABLE",
    "Technology",
    "ValidationReport",
    "Violation",
    "homogeneous_variant",
    "largest_connected_component",
    "line_susceptance",
    "merge_parallel_lines",
    "parse_technology",
    "read_grid_artifact",
    "scale_regional_inertia",
    "synth_two_cluster",
    "validate",
    "write_grid_artifact",
]
