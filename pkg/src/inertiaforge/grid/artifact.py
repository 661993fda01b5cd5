from __future__ import annotations

from datetime import datetime, timezone
import hashlib
import json
import logging
from pathlib import Path

import pandas as pd

from ..errors import GridInputError
from .model import Bus, BusKind, GeneratorRecord, GridModel, Line, parse_technology

logger = logging.getLogger(__name__)

ARTIFACT_FORMAT = "inertiaforge-grid/1"
_FLOAT_FORMAT = "%.17g"
_FILES = ("buses.csv", "lines.csv", "generators.csv")


def write_grid_artifact(grid: GridModel, directory: Path) -> Path:
    """Write the canonical grid files plus a manifest with sha256 checksums."""
    directory.mkdir(parents=True, exist_ok=True)
    buses = pd.DataFrame(
        {
            "id": [b.id for b in grid.buses],
            "kind": [b.kind.value for b in grid.buses],
            "voltage_kv": [b.voltage_kv for b in grid.buses],
            "pos_0": [None if b.position is None else b.position[0] for b in grid.buses],
            "pos_1": [None if b.position is None else b.position[1] for b in grid.buses],
            "power": [b.power for b in grid.buses],
            "inertia": [b.inertia for b in grid.buses],
            "damping": [b.damping for b in grid.buses],
            "region": [b.region or "" for b in grid.buses],
        }
    )
    lines = pd.DataFrame(
        {
            "from": [l.from_bus for l in grid.lines],
            "to": [l.to_bus for l in grid.lines],
            "susceptance": [l.susceptance for l in grid.lines],
            "length_km": [l.length_km for l in grid.lines],
        }
    )
    generators = pd.DataFrame(
        {
            "bus_id": [g.bus_id for g in grid.generators],
            "technology": [g.technology.value for g in grid.generators],
            "rated_power": [g.rated_power for g in grid.generators],
            "H_s": [g.inertia_constant for g in grid.generators],
            "cost_per_MWh": [g.marginal_cost for g in grid.generators],
        }
    )
    checksums: dict[str, str] = {}
    for name, frame in zip(_FILES, (buses, lines, generators)):
        path = directory / name
        frame.to_csv(path, index=False, float_format=_FLOAT_FORMAT, lineterminator="\n")
        checksums[name] = _sha256(path)

    manifest = {
        "format": ARTIFACT_FORMAT,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "base_frequency": grid.base_frequency,
        "units": grid.units,
        "coordinates": grid.coordinates,
        "buses": grid.n,
        "lines": len(grid.lines),
        "files": checksums,
    }
    manifest_path = directory / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    logger.info("Grid artifact written to %s (%s buses, %s lines)", directory, grid.n, len(grid.lines))
    return manifest_path


def read_grid_artifact(directory: Path) -> GridModel:
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise FileNotFoundError(f"No grid artifact manifest in {directory}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if manifest.get("format") != ARTIFACT_FORMAT:
        raise GridInputError(f"{manifest_path}: unsupported artifact format {manifest.get('format')!r}")
    for name in _FILES:
        path = directory / name
        if not path.exists():
            raise FileNotFoundError(f"Grid artifact file missing: {path}")
        expected = manifest.get("files", {}).get(name)
        if expected != _sha256(path):
            raise GridInputError(f"{path}: checksum does not match manifest")

    bus_frame = pd.read_csv(directory / "buses.csv", keep_default_na=False, dtype={"region": str})
    buses = []
    for row in bus_frame.itertuples(index=False):
        position = None
        if row.pos_0 != "" and row.pos_1 != "":
            position = (float(row.pos_0), float(row.pos_1))
        buses.append(
            Bus(
                id=int(row.id),
                kind=BusKind(row.kind),
                voltage_kv=float(row.voltage_kv),
                position=position,
                power=float(row.power),
                inertia=float(row.inertia),
                damping=float(row.damping),
                region=str(row.region) or None,
            )
        )
    line_frame = pd.read_csv(directory / "lines.csv")
    lines = [
        Line(int(row["from"]), int(row["to"]), float(row["susceptance"]), float(row["length_km"]))
        for row in line_frame.to_dict("records")
    ]
    gen_frame = pd.read_csv(directory / "generators.csv")
    generators = [
        GeneratorRecord(
            bus_id=int(row["bus_id"]),
            technology=parse_technology(row["technology"]),
            rated_power=float(row["rated_power"]),
            inertia_constant=float(row["H_s"]),
            marginal_cost=float(row["cost_per_MWh"]),
        )
        for row in gen_frame.to_dict("records")
    ]
    return GridModel(
        buses=tuple(buses),
        lines=tuple(lines),
        base_frequency=float(manifest["base_frequency"]),
        units=str(manifest["units"]),
        coordinates=str(manifest["coordinates"]),
        generators=tuple(generators),
    )


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()
