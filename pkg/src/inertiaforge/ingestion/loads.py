from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, replace
import logging
from pathlib import Path
from typing import Mapping

from haversine import Unit, haversine_vector
import numpy as np
from scipy.spatial.distance import cdist

from ..config import DampingConfig, LoadDistributionConfig
from ..errors import GridInputError
from ..grid.model import GridModel
from .parameters import derive_load_damping
from .readers import iter_rows, parse_field, read_table

logger = logging.getLogger(__name__)

_ALL = "*"


@dataclass(frozen=True)
class TownRecord:
    position: tuple[float, float]
    population: int
    country: str | None = None

    def __post_init__(self) -> None:
        if self.population <= 0:
            raise GridInputError(f"town population must be > 0, got {self.population}")


def read_towns(path: Path) -> list[TownRecord]:
    frame = read_table(path, ("country", "lat", "lon", "population"))
    towns = []
    for line_no, row in iter_rows(frame):
        population = parse_field(path, line_no, row, "population", _positive_int)
        towns.append(
            TownRecord(
                position=(
                    parse_field(path, line_no, row, "lat", float),
                    parse_field(path, line_no, row, "lon", float),
                ),
                population=population,
                country=str(row["country"]).strip() or None,
            )
        )
    logger.info("Read %s towns from %s", len(towns), path)
    return towns


def read_national_loads(path: Path) -> dict[str, float]:
    """Country -> load in MW."""
    frame = read_table(path, ("country", "load_MW"))
    loads: dict[str, float] = {}
    for line_no, row in iter_rows(frame):
        country = str(row["country"]).strip()
        if not country:
            raise GridInputError(f"{path}: line {line_no}: empty country")
        if country in loads:
            raise GridInputError(f"{path}: line {line_no}: duplicate country {country}")
        load = parse_field(path, line_no, row, "load_MW", float)
        if load < 0:
            raise GridInputError(f"{path}: line {line_no}: load_MW must be >= 0")
        loads[country] = load
    return loads


def distribute_national_load(
    grid: GridModel,
    towns: list[TownRecord],
    national_load: float | Mapping[str, float],
    cfg: LoadDistributionConfig,
    country_of: Mapping[int, str | None] | None = None,
) -> np.ndarray:
    """Per-bus load magnitudes (same unit as ``national_load``), aligned with ``grid.buses``.

    Each town's population is split over the load buses within ``cfg.d_max_km``
    in proportion to the bus voltage weight; the national load then follows the
    resulting effective population. A scalar ``national_load`` pools every town
    and bus; a mapping distributes each country's load over its own buses.
    """
    if country_of is None:
        country_of = {b.id: b.region for b in grid.buses}

    if isinstance(national_load, Mapping):
        targets = {str(k): float(v) for k, v in national_load.items()}

        def group(country: str | None) -> str | None:
            return country
    else:
        targets = {_ALL: float(national_load)}

        def group(country: str | None) -> str | None:
            return _ALL

    if any(v < 0 for v in targets.values()):
        raise GridInputError("national load must be >= 0")

    load_buses: dict[str | None, list[int]] = defaultdict(list)
    for index, bus in enumerate(grid.buses):
        if bus.is_generator:
            continue
        if bus.position is None:
            raise GridInputError(f"bus {bus.id} has no position; load distribution needs coordinates")
        load_buses[group(country_of.get(bus.id))].append(index)
    towns_by_group: dict[str | None, list[TownRecord]] = defaultdict(list)
    for town in towns:
        towns_by_group[group(town.country)].append(town)

    weights = np.array([cfg.bus_weight(b.voltage_kv) for b in grid.buses], dtype=float)
    loads = np.zeros(grid.n, dtype=float)
    for key, target in sorted(targets.items()):
        if target == 0:
            continue
        indices = np.array(load_buses.get(key, []), dtype=np.int64)
        if indices.size == 0:
            raise GridInputError(f"no load buses for country {key!r} carrying {target:g}")
        group_towns = towns_by_group.get(key, [])
        if not group_towns:
            raise GridInputError(f"no towns for country {key!r} carrying {target:g}")

        bus_xy = np.array([grid.buses[i].position for i in indices], dtype=float)
        town_xy = np.array([t.position for t in group_towns], dtype=float)
        in_range = _distances_km(town_xy, bus_xy, grid.coordinates) <= cfg.d_max_km

        effective = np.zeros(indices.size, dtype=float)
        dropped = 0
        for town, mask in zip(group_towns, in_range):
            if not mask.any():
                if cfg.unmatched_towns == "error":
                    raise GridInputError(
                        f"town at {town.position} has no load bus within {cfg.d_max_km:g} km"
                    )
                dropped += 1
                continue
            share = np.where(mask, weights[indices], 0.0)
            effective += town.population * share / share.sum()
        if dropped:
            logger.warning("Dropped %s town(s) without a load bus within %.1f km (%s)", dropped, cfg.d_max_km, key)
        total = effective.sum()
        if total <= 0:
            raise GridInputError(f"no town lies within {cfg.d_max_km:g} km of a load bus for country {key!r}")
        loads[indices] += target * effective / total
    return loads


def apply_loads(grid: GridModel, loads: np.ndarray, cfg: DampingConfig) -> GridModel:
    """Set load setpoints (negative injections) and frequency-dependent damping.

    ``loads`` is in model units. Buses without any load or generator damping
    get ``cfg.transit_fraction`` times the median positive damping.
    """
    if loads.shape != (grid.n,):
        raise GridInputError(f"load vector has shape {loads.shape}, expected ({grid.n},)")
    if np.any(loads < 0):
        raise GridInputError("loads must be >= 0")
    buses = []
    for bus, load in zip(grid.buses, loads):
        damping = bus.damping
        power = bus.power
        if load > 0:
            damping += derive_load_damping(float(load), cfg.load_alpha, grid.omega0)
            power -= float(load)
        buses.append(replace(bus, power=power, damping=damping))

    positive = [b.damping for b in buses if b.damping > 0]
    if not positive:
        raise GridInputError("no bus carries damping; loads or generators are missing")
    floor = cfg.transit_fraction * float(np.median(positive))
    transit = 0
    for i, bus in enumerate(buses):
        if bus.damping <= 0:
            buses[i] = replace(bus, damping=floor)
            transit += 1
    if transit:
        logger.info("Gave %s transit bus(es) damping floor %.4g", transit, floor)
    return grid.with_buses(buses)


def _distances_km(towns: np.ndarray, buses: np.ndarray, coordinates: str) -> np.ndarray:
    if coordinates == "planar":
        return cdist(towns, buses)
    n_towns, n_buses = len(towns), len(buses)
    distances = haversine_vector(
        np.repeat(towns, n_buses, axis=0),
        np.tile(buses, (n_towns, 1)),
        Unit.KILOMETERS,
    )
    return np.asarray(distances).reshape(n_towns, n_buses)


def _positive_int(value: str) -> int:
    number = int(value)
    if number <= 0:
        raise ValueError("must be > 0")
    return number
