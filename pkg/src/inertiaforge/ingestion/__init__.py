from .loads import TownRecord, apply_loads, distribute_national_load, read_national_loads, read_towns
from .parameters import derive_generator_damping, derive_inertia, derive_load_damping
from .readers import load_grid_files

__all__ = [
    "TownRecord",
    "apply_loads",
    "derive_generator_damping",
    "derive_inertia",
    "derive_load_damping",
    "distribute_national_load",
    "load_grid_files",
    "read_national_loads",
    "read_towns",
]
