from __future__ import annotations

from dataclasses import dataclass
import json
import logging
from pathlib import Path
from typing import Iterable

import numpy as np
import pandas as pd
from shapely.geometry import Point, mapping

from ..errors import GridInputError
from .simulate import Trajectory

logger = logging.getLogger(__name__)


def rocof_series(traj: Trajectory, dt: float, n_sim: int | None = None) -> np.ndarray:
    """r_i(k dt) = (omega_i((k+1) dt) - omega_i(k dt)) / (2 pi dt) in Hz/s, one row per k."""
    if dt <= 0:
        raise GridInputError("dt must be > 0")
    samples = traj.omega[traj.sample_indices(dt)]
    available = samples.shape[0] - 1
    count = available if n_sim is None else n_sim
    if count < 1 or count > available:
        raise GridInputError(
            f"trajectory covers {available} interval(s) of {dt:g} s, {count} requested"
        )
    return np.diff(samples[: count + 1], axis=0) / (2.0 * np.pi * dt)


def disturbance_magnitude(r: np.ndarray) -> float:
    """M_b = sum over intervals and buses of |r|."""
    return float(np.abs(r).sum())


@dataclass(frozen=True, eq=False)
class RocofReport:
    rocof: np.ndarray
    bus_ids: np.ndarray
    dt: float
    generator_mask: np.ndarray

    @staticmethod
    def from_trajectory(
        traj: Trajectory,
        dt: float,
        generator_mask: np.ndarray,
        n_sim: int | None = None,
    ) -> "RocofReport":
        return RocofReport(
            rocof=rocof_series(traj, dt, n_sim),
            bus_ids=traj.bus_ids.copy(),
            dt=dt,
            generator_mask=np.asarray(generator_mask, dtype=bool),
        )

    @property
    def magnitude(self) -> float:
        return disturbance_magnitude(self.rocof)

    @property
    def generator_only_magnitude(self) -> float:
        return disturbance_magnitude(self.rocof[:, self.generator_mask])

    def max_abs_rocof(self) -> tuple[float, int, int]:
        """(peak |r|, bus id, interval index)."""
        k, i = np.unravel_index(int(np.argmax(np.abs(self.rocof))), self.rocof.shape)
        return float(abs(self.rocof[k, i])), int(self.bus_ids[i]), int(k)

    def to_frame(self) -> pd.DataFrame:
        n_k, n = self.rocof.shape
        return pd.DataFrame(
            {
                "k": np.repeat(np.arange(n_k), n),
                "bus_id": np.tile(self.bus_ids, n_k),
                "rocof_hz_s": self.rocof.ravel(),
            }
        )

    def write_csv(self, path: Path) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.12g", lineterminator="\n")
        with path.open("a", encoding="utf-8", newline="\n") as handle:
            handle.write(f"M_b,,{self.magnitude:.12g}\n")


@dataclass(frozen=True, eq=False)
class RocofFrame:
    index: int
    t_start: float
    t_end: float
    rocof: np.ndarray

    def to_geojson(
        self,
        bus_ids: np.ndarray,
        positions: Iterable[tuple[float, float] | None],
        coordinates: str,
    ) -> dict:
        features = []
        for bus_id, position, value in zip(bus_ids, positions, self.rocof):
            if position is None:
                raise GridInputError(f"bus {int(bus_id)} has no position; GeoJSON frames need coordinates")
            # GeoJSON is (x, y) = (lon, lat)
            point = Point(position[1], position[0]) if coordinates == "geographic" else Point(*position)
            features.append(
                {
                    "type": "Feature",
                    "geometry": mapping(point),
                    "properties": {"bus_id": int(bus_id), "rocof_hz_s": float(value)},
                }
            )
        return {
            "type": "FeatureCollection",
            "properties": {"frame": self.index, "t_start": self.t_start, "t_end": self.t_end},
            "features": features,
        }


def snapshot_frames(traj: Trajectory, dt: float, n_sim: int | None = None) -> list[RocofFrame]:
    """One frame per sampling interval holding r_i(k dt)."""
    r = rocof_series(traj, dt, n_sim)
    return [RocofFrame(index=k, t_start=k * dt, t_end=(k + 1) * dt, rocof=r[k]) for k in range(r.shape[0])]


def write_frames(traj: Trajectory, frames: list[RocofFrame], directory: Path) -> list[Path]:
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for frame in frames:
        path = directory / f"frame_{frame.index:02d}.geojson"
        payload = frame.to_geojson(traj.bus_ids, traj.positions, traj.coordinates)
        path.write_text(json.dumps(payload, indent=1), encoding="utf-8")
        paths.append(path)
    logger.info("Wrote %s GeoJSON frame(s) to %s", len(paths), directory)
    return paths


def frequency_traces(traj: Trajectory, bus_ids: Iterable[int]) -> pd.DataFrame:
    """Frequency deviation omega / 2 pi in Hz for the selected buses, long format."""
    index = {int(b): i for i, b in enumerate(traj.bus_ids)}
    selected = []
    for bus_id in bus_ids:
        if int(bus_id) not in index:
            raise GridInputError(f"unknown bus id {bus_id}")
        selected.append(int(bus_id))
    if not selected:
        return pd.DataFrame(columns=["t", "bus_id", "delta_f_hz"])
    columns = [index[b] for b in selected]
    values = traj.omega[:, columns] / (2.0 * np.pi)
    return pd.DataFrame(
        {
            "t": np.repeat(traj.times, len(selected)),
            "bus_id": np.tile(selected, len(traj.times)),
            "delta_f_hz": values.ravel(),
        }
    )
