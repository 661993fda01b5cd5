from __future__ import annotations

from typing import Mapping

from ..errors import GridInputError

# Kilometric reactance of overhead lines, Ohm/km.
DEFAULT_REACTANCE_OHM_PER_KM: dict[float, float] = {
    220.0: 0.360,
    380.0: 0.265,
}


def line_susceptance(
    length_km: float,
    voltage_kv: float,
    reactance_table: Mapping[float, float] | None = None,
) -> float:
    """Susceptance B = 1 / (X l) in S for a line of the given length and voltage level."""
    if not length_km > 0:
        raise GridInputError(f"line length must be > 0 km, got {length_km:g}")
    table = DEFAULT_REACTANCE_OHM_PER_KM if reactance_table is None else reactance_table
    reactance = table.get(float(voltage_kv))
    if reactance is None:
        raise GridInputError(f"no default reactance for {voltage_kv:g} kV lines")
    return 1.0 / (reactance * length_km)
