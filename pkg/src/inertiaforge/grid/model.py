from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
import logging
from typing import Iterable, Mapping

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ..errors import GridInputError

logger = logging.getLogger(__name__)

BALANCE_TOLERANCE = 1e-6


class BusKind(str, Enum):
    GENERATOR = "generator"
    LOAD = "load"


class Technology(str, Enum):
    HYDRO = "hydro"
    NUCLEAR = "nuclear"
    LIGNITE = "lignite"
    HARD_COAL = "hard_coal"
    GAS = "gas"
    OTHER = "other"


# (marginal cost $/MWh, inertia constant H in s)
TECHNOLOGY_TABLE: dict[Technology, tuple[float, float]] = {
    Technology.HYDRO: (80.0, 4.0),
    Technology.NUCLEAR: (16.0, 6.0),
    Technology.LIGNITE: (16.0, 6.0),
    Technology.HARD_COAL: (35.0, 6.0),
    Technology.GAS: (100.0, 6.0),
    Technology.OTHER: (7.0, 3.0),
}


def parse_technology(value: str | Technology) -> Technology:
    if isinstance(value, Technology):
        return value
    key = str(value).strip().lower().replace(" ", "_").replace("-", "_")
    try:
        return Technology(key)
    except ValueError:
        supported = ", ".join(t.value for t in Technology)
        raise GridInputError(f"unknown technology '{value}'. Supported: {supported}") from None


@dataclass(frozen=True)
class GeneratorRecord:
    bus_id: int
    technology: Technology
    rated_power: float
    inertia_constant: float
    marginal_cost: float

    def __post_init__(self) -> None:
        if self.rated_power <= 0:
            raise GridInputError(f"generator at bus {self.bus_id}: rated_power must be > 0")
        if self.inertia_constant < 0:
            raise GridInputError(f"generator at bus {self.bus_id}: inertia constant must be >= 0")

    @staticmethod
    def from_technology(
        bus_id: int,
        technology: str | Technology,
        rated_power: float,
        inertia_constant: float | None = None,
        marginal_cost: float | None = None,
    ) -> "GeneratorRecord":
        tech = parse_technology(technology)
        default_cost, default_h = TECHNOLOGY_TABLE[tech]
        return GeneratorRecord(
            bus_id=int(bus_id),
            technology=tech,
            rated_power=float(rated_power),
            inertia_constant=default_h if inertia_constant is None else float(inertia_constant),
            marginal_cost=default_cost if marginal_cost is None else float(marginal_cost),
        )


@dataclass(frozen=True)
class Bus:
    id: int
    kind: BusKind
    voltage_kv: float
    position: tuple[float, float] | None = None
    power: float = 0.0
    inertia: float = 0.0
    damping: float = 0.0
    region: str | None = None

    @property
    def is_generator(self) -> bool:
        return self.kind is BusKind.GENERATOR


@dataclass(frozen=True)
class Line:
    from_bus: int
    to_bus: int
    susceptance: float
    length_km: float = 1.0

    @property
    def key(self) -> tuple[int, int]:
        return (min(self.from_bus, self.to_bus), max(self.from_bus, self.to_bus))


@dataclass(frozen=True)
class Violation:
    rule: str
    element: int | None
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def rules(self) -> list[str]:
        return [v.rule for v in self.violations]

    def summary(self) -> str:
        if self.ok:
            return "grid valid: no violations"
        lines = [f"grid invalid: {len(self.violations)} violation(s)"]
        for v in self.violations:
            element = "-" if v.element is None else str(v.element)
            lines.append(f"  [{v.rule}] {element}: {v.message}")
        return "\n".join(lines)


@dataclass(frozen=True)
class GridModel:
    """Immutable transmission grid.

    ``units`` is ``"si"`` (powers in W, voltages from ``voltage_kv``) or ``"pu"``
    (per-unit powers; ``voltage_kv`` then holds the voltage magnitude in p.u.).
    ``coordinates`` is ``"geographic"`` for (lat, lon) positions in degrees or
    ``"planar"`` for abstract (x, y) positions in km.
    """

    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    base_frequency: float = 50.0
    units: str = "si"
    coordinates: str = "geographic"
    generators: tuple[GeneratorRecord, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.units not in {"si", "pu"}:
            raise GridInputError(f"units must be si or pu, got {self.units!r}")
        if self.coordinates not in {"geographic", "planar"}:
            raise GridInputError(f"coordinates must be geographic or planar, got {self.coordinates!r}")
        if self.base_frequency <= 0:
            raise GridInputError("base_frequency must be > 0")

    @property
    def omega0(self) -> float:
        return 2.0 * np.pi * self.base_frequency

    @property
    def n(self) -> int:
        return len(self.buses)

    @property
    def power_scale(self) -> float:
        """Factor turning configured powers (MW, or p.u.) into model units."""
        return 1e6 if self.units == "si" else 1.0

    @cached_property
    def bus_ids(self) -> np.ndarray:
        return np.array([b.id for b in self.buses], dtype=np.int64)

    @cached_property
    def index_of(self) -> dict[int, int]:
        return {b.id: i for i, b in enumerate(self.buses)}

    def bus(self, bus_id: int) -> Bus:
        try:
            return self.buses[self.index_of[bus_id]]
        except KeyError:
            raise GridInputError(f"unknown bus id {bus_id}") from None

    def powers(self) -> np.ndarray:
        return np.array([b.power for b in self.buses], dtype=float)

    def inertias(self) -> np.ndarray:
        return np.array([b.inertia for b in self.buses], dtype=float)

    def dampings(self) -> np.ndarray:
        return np.array([b.damping for b in self.buses], dtype=float)

    def voltages(self) -> np.ndarray:
        scale = 1e3 if self.units == "si" else 1.0
        return np.array([b.voltage_kv * scale for b in self.buses], dtype=float)

    def generator_mask(self) -> np.ndarray:
        return np.array([b.is_generator for b in self.buses], dtype=bool)

    def generator_ids(self) -> list[int]:
        return [b.id for b in self.buses if b.is_generator]

    def system_inertia(self) -> float:
        return float(self.inertias().sum())

    def positions(self) -> list[tuple[float, float] | None]:
        return [b.position for b in self.buses]

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Bus indices of each line end and its Laplacian weight B_ij V_i V_j."""
        v = self.voltages()
        rows = np.array([self.index_of[l.from_bus] for l in self.lines], dtype=np.int64)
        cols = np.array([self.index_of[l.to_bus] for l in self.lines], dtype=np.int64)
        b = np.array([l.susceptance for l in self.lines], dtype=float)
        return rows, cols, b * v[rows] * v[cols]

    def with_buses(self, buses: Iterable[Bus]) -> "GridModel":
        return replace(self, buses=tuple(buses))


def balance_tolerance(powers: np.ndarray) -> float:
    total_load = float(-powers[powers < 0].sum())
    return BALANCE_TOLERANCE * total_load


def merge_parallel_lines(lines: Iterable[Line]) -> tuple[Line, ...]:
    merged: dict[tuple[int, int], Line] = {}
    for line in lines:
        existing = merged.get(line.key)
        if existing is None:
            merged[line.key] = line
            continue
        merged[line.key] = replace(
            existing,
            susceptance=existing.susceptance + line.susceptance,
            length_km=min(existing.length_km, line.length_km),
        )
    return tuple(merged.values())


def validate(grid: GridModel) -> ValidationReport:
    violations: list[Violation] = []
    if not grid.buses:
        violations.append(Violation("empty-grid", None, "grid has no buses"))
        return ValidationReport(tuple(violations))

    seen: set[int] = set()
    for bus in grid.buses:
        if bus.id in seen:
            violations.append(Violation("duplicate-bus", bus.id, f"bus id {bus.id} appears more than once"))
        seen.add(bus.id)
        if bus.damping <= 0:
            violations.append(Violation("damping", bus.id, f"damping must be > 0, got {bus.damping:g}"))
        if bus.is_generator and bus.inertia <= 0:
            violations.append(Violation("inertia", bus.id, "generator bus must have inertia > 0"))
        if not bus.is_generator and bus.inertia != 0:
            violations.append(Violation("inertia", bus.id, "load bus must have zero inertia"))
        if bus.inertia < 0:
            violations.append(Violation("inertia", bus.id, "inertia must be >= 0"))

    pairs: dict[tuple[int, int], int] = {}
    valid_edges: list[tuple[int, int]] = []
    for number, line in enumerate(grid.lines):
        if line.from_bus == line.to_bus:
            violations.append(Violation("self-loop", line.from_bus, f"line {number} is a self-loop on bus {line.from_bus}"))
            continue
        missing = [b for b in (line.from_bus, line.to_bus) if b not in grid.index_of]
        if missing:
            violations.append(
                Violation("dangling-line", number, f"line {number} references unknown bus {missing[0]}")
            )
            continue
        if line.key in pairs:
            violations.append(
                Violation("duplicate-line", number, f"line {number} duplicates line {pairs[line.key]} on pair {line.key}")
            )
        pairs.setdefault(line.key, number)
        if line.susceptance <= 0:
            violations.append(Violation("susceptance", number, f"line {number} susceptance must be > 0"))
        if line.length_km <= 0:
            violations.append(Violation("line-length", number, f"line {number} length must be > 0"))
        valid_edges.append((grid.index_of[line.from_bus], grid.index_of[line.to_bus]))

    n_components, _ = _components(grid.n, valid_edges)
    if n_components > 1:
        violations.append(Violation("disconnected", None, f"grid has {n_components} connected components"))

    powers = grid.powers()
    imbalance = float(powers.sum())
    if abs(imbalance) > balance_tolerance(powers):
        violations.append(
            Violation("power-imbalance", None, f"power imbalance of {imbalance:.6g} exceeds tolerance")
        )

    violations.sort(key=lambda v: (v.rule, -1 if v.element is None else v.element))
    return ValidationReport(tuple(violations))


def largest_connected_component(grid: GridModel) -> GridModel:
    if not grid.buses:
        raise GridInputError("empty grid")
    edges = [
        (grid.index_of[l.from_bus], grid.index_of[l.to_bus])
        for l in grid.lines
        if l.from_bus in grid.index_of and l.to_bus in grid.index_of
    ]
    n_components, labels = _components(grid.n, edges)
    if n_components == 1:
        return grid

    ids = grid.bus_ids
    best_label = min(
        range(n_components),
        key=lambda c: (-int(np.count_nonzero(labels == c)), int(ids[labels == c].min())),
    )
    keep = {int(i) for i in ids[labels == best_label]}
    buses = tuple(b for b in grid.buses if b.id in keep)
    lines = tuple(l for l in grid.lines if l.from_bus in keep and l.to_bus in keep)
    generators = tuple(g for g in grid.generators if g.bus_id in keep)
    logger.info(
        "Largest component keeps %s of %s buses (%s components)",
        len(buses),
        grid.n,
        n_components,
    )
    return replace(grid, buses=buses, lines=lines, generators=generators)


def _components(n: int, edges: list[tuple[int, int]]) -> tuple[int, np.ndarray]:
    if not edges:
        return n, np.arange(n)
    rows = np.array([e[0] for e in edges])
    cols = np.array([e[1] for e in edges])
    adjacency = coo_matrix((np.ones(len(edges)), (rows, cols)), shape=(n, n))
    return connected_components(adjacency, directed=False)


def scale_regional_inertia(grid: GridModel, factors: Mapping[str, float]) -> GridModel:
    """Multiply generator inertia region by region (e.g. halve one area, double another)."""
    regions = {b.region for b in grid.buses}
    unknown = sorted(set(factors) - regions)
    if unknown:
        raise GridInputError(f"unknown regions for inertia scaling: {', '.join(unknown)}")
    for region, factor in factors.items():
        if factor < 0:
            raise GridInputError(f"inertia factor for region {region} must be >= 0")
    buses = [
        replace(b, inertia=b.inertia * factors[b.region])
        if b.is_generator and b.region in factors
        else b
        for b in grid.buses
    ]
    return grid.with_buses(buses)
