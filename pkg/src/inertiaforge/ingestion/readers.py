from __future__ import annotations

from collections import defaultdict
import logging
import math
from pathlib import Path
from typing import Callable, TypeVar

import pandas as pd

from ..config import DampingConfig
from ..errors import GridInputError
from ..grid.lines import line_susceptance
from ..grid.model import (
    Bus,
    BusKind,
    GeneratorRecord,
    GridModel,
    Line,
    largest_connected_component,
    merge_parallel_lines,
    parse_technology,
)
from .parameters import derive_generator_damping, derive_inertia

logger = logging.getLogger(__name__)

T = TypeVar("T")


def read_table(path: Path, required: tuple[str, ...], optional: tuple[str, ...] = ()) -> pd.DataFrame:
    if not path.exists():
        raise FileNotFoundError(f"Input file not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True, encoding="utf-8")
    except (pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise GridInputError(f"{path}: cannot parse CSV: {exc}") from exc
    frame.columns = [str(c).strip() for c in frame.columns]
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise GridInputError(f"{path}: missing columns {', '.join(missing)}")
    for column in optional:
        if column not in frame.columns:
            frame[column] = ""
    return frame


def parse_field(path: Path, line_no: int, row: dict, name: str, convert: Callable[[str], T]) -> T:
    raw = str(row[name]).strip()
    try:
        return convert(raw)
    except (ValueError, GridInputError) as exc:
        raise GridInputError(f"{path}: line {line_no}: invalid {name} {raw!r} ({exc})") from None


def iter_rows(frame: pd.DataFrame):
    # header is line 1
    for offset, row in enumerate(frame.to_dict("records")):
        yield offset + 2, row


def load_grid_files(
    bus_file: Path,
    line_file: Path,
    generator_file: Path,
    *,
    base_frequency: float = 50.0,
    transformer_reactance_ohm: float = 10.0,
    damping: DampingConfig | None = None,
) -> GridModel:
    """Read buses/lines/generators CSVs into a connected SI grid.

    Generator buses get inertia from their units' rated power; load damping
    is set later, once loads are known.
    """
    damping = damping or DampingConfig()
    omega0 = 2.0 * math.pi * base_frequency

    bus_frame = read_table(bus_file, ("id", "kind", "voltage_kv", "lat", "lon"), ("country",))
    raw_buses: dict[int, dict] = {}
    for line_no, row in iter_rows(bus_frame):
        bus_id = parse_field(bus_file, line_no, row, "id", int)
        if bus_id in raw_buses:
            raise GridInputError(f"{bus_file}: line {line_no}: duplicate bus id {bus_id}")
        raw_buses[bus_id] = {
            "kind": parse_field(bus_file, line_no, row, "kind", _parse_kind),
            "voltage_kv": parse_field(bus_file, line_no, row, "voltage_kv", _positive_float),
            "position": (
                parse_field(bus_file, line_no, row, "lat", float),
                parse_field(bus_file, line_no, row, "lon", float),
            ),
            "region": str(row["country"]).strip() or None,
        }

    line_frame = read_table(line_file, ("from", "to", "length_km", "voltage_kv"), ("susceptance_S",))
    lines: list[Line] = []
    for line_no, row in iter_rows(line_frame):
        start = parse_field(line_file, line_no, row, "from", int)
        end = parse_field(line_file, line_no, row, "to", int)
        for bus_id in (start, end):
            if bus_id not in raw_buses:
                raise GridInputError(f"{line_file}: line {line_no}: unknown bus {bus_id}")
        if start == end:
            raise GridInputError(f"{line_file}: line {line_no}: self-loop on bus {start}")
        length = parse_field(line_file, line_no, row, "length_km", _positive_float)
        voltage = parse_field(line_file, line_no, row, "voltage_kv", _positive_float)
        if str(row["susceptance_S"]).strip():
            susceptance = parse_field(line_file, line_no, row, "susceptance_S", _positive_float)
        elif raw_buses[start]["voltage_kv"] != raw_buses[end]["voltage_kv"]:
            susceptance = 1.0 / transformer_reactance_ohm
            logger.debug("Line %s-%s treated as transformer", start, end)
        else:
            try:
                susceptance = line_susceptance(length, voltage)
            except GridInputError as exc:
                raise GridInputError(f"{line_file}: line {line_no}: {exc}") from None
        lines.append(Line(start, end, susceptance, length))

    gen_frame = read_table(
        generator_file,
        ("bus_id", "technology", "rated_power_MW"),
        ("H_s", "cost_per_MWh"),
    )
    generators: list[GeneratorRecord] = []
    for line_no, row in iter_rows(gen_frame):
        bus_id = parse_field(generator_file, line_no, row, "bus_id", int)
        if bus_id not in raw_buses:
            raise GridInputError(f"{generator_file}: line {line_no}: unknown bus {bus_id}")
        if raw_buses[bus_id]["kind"] is not BusKind.GENERATOR:
            raise GridInputError(f"{generator_file}: line {line_no}: bus {bus_id} is not a generator bus")
        technology = parse_field(generator_file, line_no, row, "technology", parse_technology)
        rated_mw = parse_field(generator_file, line_no, row, "rated_power_MW", _positive_float)
        h = parse_field(generator_file, line_no, row, "H_s", _optional_float)
        cost = parse_field(generator_file, line_no, row, "cost_per_MWh", _optional_float)
        generators.append(GeneratorRecord.from_technology(bus_id, technology, rated_mw * 1e6, h, cost))

    inertia: dict[int, float] = defaultdict(float)
    gen_damping: dict[int, float] = defaultdict(float)
    for record in generators:
        inertia[record.bus_id] += derive_inertia(record, omega0)
        gen_damping[record.bus_id] += derive_generator_damping(record, damping, omega0)

    buses = tuple(
        Bus(
            id=bus_id,
            kind=data["kind"],
            voltage_kv=data["voltage_kv"],
            position=data["position"],
            inertia=inertia.get(bus_id, 0.0),
            damping=gen_damping.get(bus_id, 0.0),
            region=data["region"],
        )
        for bus_id, data in raw_buses.items()
    )
    grid = GridModel(
        buses=buses,
        lines=merge_parallel_lines(lines),
        base_frequency=base_frequency,
        units="si",
        coordinates="geographic",
        generators=tuple(generators),
    )
    logger.info(
        "Read %s buses, %s lines (%s after merging), %s generators",
        len(buses),
        len(lines),
        len(grid.lines),
        len(generators),
    )
    return largest_connected_component(grid)


def _parse_kind(value: str) -> BusKind:
    try:
        return BusKind(value.strip().lower())
    except ValueError:
        raise ValueError("kind must be generator or load") from None


def _positive_float(value: str) -> float:
    number = float(value)
    if not number > 0:
        raise ValueError("must be > 0")
    return number


def _optional_float(value: str) -> float | None:
    return float(value) if value else None
