from __future__ import annotations

from enum import Enum
import logging
from typing import Mapping

import numpy as np

from ..errors import GridInputError
from ..grid.model import GridModel
from ..spectral.modes import SpectralModes

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-9


class PlacementProcedure(str, Enum):
    UNIFORM = "uniform"
    FIEDLER = "fiedler"
    NON_FIEDLER = "non_fiedler"
    CUSTOM = "custom"
    # paired draws: remove by FIEDLER, add by NON_FIEDLER
    FIEDLER_SHIFT = "fiedler_shift"


def parse_procedure(value: str | PlacementProcedure) -> PlacementProcedure:
    if isinstance(value, PlacementProcedure):
        return value
    key = str(value).strip().lower().replace("-", "_")
    try:
        return PlacementProcedure(key)
    except ValueError:
        supported = ", ".join(p.value for p in PlacementProcedure)
        raise ValueError(f"Unsupported placement procedure '{value}'. Supported: {supported}") from None


def procedure_weights(
    fiedler_sq: np.ndarray,
    procedure: str | PlacementProcedure,
    epsilon_floor: float = DEFAULT_EPSILON,
) -> np.ndarray:
    """Normalised probabilities from squared Fiedler components (uniform, fiedler or non_fiedler)."""
    procedure = parse_procedure(procedure)
    fiedler_sq = np.asarray(fiedler_sq, dtype=float)
    if fiedler_sq.size == 0:
        raise GridInputError("no generator buses to weight")
    if procedure is PlacementProcedure.UNIFORM:
        return np.full(fiedler_sq.size, 1.0 / fiedler_sq.size)
    if not np.any(fiedler_sq > 0):
        raise GridInputError("Fiedler mode vanishes on every generator bus")
    if procedure is PlacementProcedure.FIEDLER:
        raw = fiedler_sq
    elif procedure is PlacementProcedure.NON_FIEDLER:
        raw = 1.0 / np.maximum(fiedler_sq, epsilon_floor)
    elif procedure is PlacementProcedure.CUSTOM:
        raise GridInputError("custom weights come from configuration, not from the Fiedler mode")
    else:
        raise GridInputError("fiedler_shift pairs the fiedler and non_fiedler weights; it has no single distribution")
    return raw / raw.sum()


def sampling_weights(
    modes: SpectralModes,
    grid: GridModel,
    procedure: str | PlacementProcedure,
    epsilon_floor: float = DEFAULT_EPSILON,
    custom: Mapping[int, float] | None = None,
) -> dict[int, float]:
    """Bus id -> probability over the generator buses of ``grid``."""
    procedure = parse_procedure(procedure)
    generators = grid.generator_ids()
    if procedure is PlacementProcedure.FIEDLER_SHIFT:
        raise GridInputError("fiedler_shift pairs the fiedler and non_fiedler weights; it has no single distribution")
    if not generators:
        raise GridInputError("grid has no generator buses")
    if procedure is PlacementProcedure.CUSTOM:
        if not custom:
            raise GridInputError("custom placement needs a bus -> weight mapping")
        unknown = sorted(set(int(b) for b in custom) - set(generators))
        if unknown:
            raise GridInputError(f"custom weights name non-generator buses: {unknown}")
        raw = np.array([float(custom.get(b, 0.0)) for b in generators])
        if np.any(raw < 0) or raw.sum() <= 0:
            raise GridInputError("custom weights must be >= 0 with a positive sum")
        probs = raw / raw.sum()
    else:
        by_bus = modes.weight_by_bus()
        probs = procedure_weights(np.array([by_bus[b] for b in generators]), procedure, epsilon_floor)
    return {b: float(p) for b, p in zip(generators, probs)}
