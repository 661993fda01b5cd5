from __future__ import annotations

import json
import logging
from pathlib import Path

import pandas as pd

from ..config import RunConfig
from ..grid.model import GridModel
from ..spectral.modes import SpectralModes
from ..spectral.response import ModeTimescale, regional_mode_mass

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12g"


def write_resolved_config(config: RunConfig, output_dir: Path) -> Path:
    output_dir.mkdir(parents=True, exist_ok=True)
    path = output_dir / "resolved_config.json"
    path.write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True), encoding="utf-8")
    return path


def write_summary(summary: dict, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(summary, indent=2, sort_keys=True), encoding="utf-8")
    return path


def _write_frame(frame: pd.DataFrame, path: Path) -> Path:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def write_modes_csv(modes: SpectralModes, path: Path) -> Path:
    """bus_id,u2..uk with a leading ``lambda`` row holding the eigenvalues."""
    columns = [f"u{a}" for a in range(2, modes.k + 1)]
    header = pd.DataFrame([["lambda", *modes.eigenvalues[1:]]], columns=["bus_id", *columns])
    body = pd.DataFrame(modes.eigenvectors[:, 1:], columns=columns)
    body.insert(0, "bus_id", modes.bus_ids.astype(str))
    return _write_frame(pd.concat([header, body], ignore_index=True), path)


def write_fiedler_weights_csv(modes: SpectralModes, grid: GridModel, path: Path) -> Path:
    frame = pd.DataFrame(
        {
            "bus_id": modes.bus_ids,
            "kind": [b.kind.value for b in grid.buses],
            "region": [b.region or "" for b in grid.buses],
            "fiedler_sq": modes.fiedler_weight(),
        }
    )
    for alpha in range(2, modes.k + 1):
        frame[f"u{alpha}_sq"] = modes.mode_weight(alpha)
    return _write_frame(frame, path)


def write_timescales_csv(report: list[ModeTimescale], path: Path) -> Path:
    frame = pd.DataFrame(
        {
            "alpha": [row.alpha for row in report],
            "eigenvalue": [row.eigenvalue for row in report],
            "frequency_rad_s": [row.frequency for row in report],
            "frequency_times_dt": [row.product for row in report],
            "overdamped": [row.overdamped for row in report],
        }
    )
    return _write_frame(frame, path)


def write_mode_mass_csv(modes: SpectralModes, grid: GridModel, path: Path) -> Path:
    return _write_frame(regional_mode_mass(modes, grid).reset_index(), path)


def write_frame(frame: pd.DataFrame, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    return _write_frame(frame, path)
