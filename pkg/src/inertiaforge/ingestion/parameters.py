from __future__ import annotations

import math

from ..config import DampingConfig
from ..errors import GridInputError
from ..grid.model import GeneratorRecord

OMEGA0_50HZ = 2.0 * math.pi * 50.0


def derive_inertia(record: GeneratorRecord, omega0: float = OMEGA0_50HZ) -> float:
    """m = 2 H P_rated / omega0 in W s^2/rad."""
    return 2.0 * record.inertia_constant * record.rated_power / omega0


def derive_load_damping(p_load: float, alpha: float = 1.5, omega0: float = OMEGA0_50HZ) -> float:
    """Frequency-dependent load damping d = alpha P_load / omega0 in W s/rad."""
    if not 0.0 < alpha < 5.0:
        raise GridInputError(f"load damping alpha must be in (0, 5), got {alpha:g}")
    if not p_load > 0:
        raise GridInputError(f"load magnitude must be > 0 to carry damping, got {p_load:g}")
    return alpha * p_load / omega0


def derive_generator_damping(
    record: GeneratorRecord,
    cfg: DampingConfig,
    omega0: float = OMEGA0_50HZ,
) -> float:
    if cfg.generator_table is not None:
        try:
            return float(cfg.generator_table[record.technology.value])
        except KeyError:
            raise GridInputError(
                f"no damping configured for technology '{record.technology.value}' (bus {record.bus_id})"
            ) from None
    return cfg.generator_ratio * derive_inertia(record, omega0)
