from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
import logging
from pathlib import Path
import time
from typing import Mapping, Sequence

import numpy as np
import pandas as pd
from scipy.stats import spearmanr

from ..config import PLACEMENT_KINDS, DynamicsConfig
from ..dynamics.engine import get_dynamics_engine
from ..dynamics.fault import FaultScenario, apply_faults
from ..dynamics.rocof import disturbance_magnitude, rocof_series
from ..dynamics.simulate import simulate
from ..errors import GridInputError, NumericalError
from ..grid.model import GridModel
from ..spectral.laplacian import build_laplacian
from ..spectral.modes import SpectralModes, slow_modes
from .modify import Direction, modify_inertia, shift_inertia
from .weights import DEFAULT_EPSILON, PlacementProcedure, parse_procedure, sampling_weights

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["procedure", "seed", "M_sys_GWs2", "fault_bus", "u2b_sq", "M_b"]


@dataclass(frozen=True)
class SweepPoint:
    m_sys: float
    fault_bus: int
    u2b_sq: float
    magnitude: float


@dataclass(frozen=True)
class SweepResult:
    procedure: str
    seed: int
    points: tuple[SweepPoint, ...]
    inertia_scale: float = 1.0

    def levels(self) -> list[float]:
        seen: list[float] = []
        for point in self.points:
            if not seen or seen[-1] != point.m_sys:
                seen.append(point.m_sys)
        return seen

    def magnitudes(self, m_sys: float | None = None) -> dict[int, float]:
        """Fault bus -> M_b at one level (the last level by default)."""
        level = self.levels()[-1] if m_sys is None else m_sys
        return {p.fault_bus: p.magnitude for p in self.points if p.m_sys == level}

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "procedure": [self.procedure] * len(self.points),
                "seed": [self.seed] * len(self.points),
                "M_sys_GWs2": [p.m_sys / self.inertia_scale for p in self.points],
                "fault_bus": [p.fault_bus for p in self.points],
                "u2b_sq": [p.u2b_sq for p in self.points],
                "M_b": [p.magnitude for p in self.points],
            },
            columns=SWEEP_COLUMNS,
        )


@dataclass(frozen=True)
class SweepSettings:
    epsilon_floor: float = DEFAULT_EPSILON
    increment_fraction: float = 0.1
    custom_weights: Mapping[int, float] | None = None
    engine: str = "nonlinear"
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)
    # fiedler_shift draw size; defaults to the addition base unit
    shift_unit: float | None = None
    # absolute M_sys the path starts from, reached by removal with start_procedure
    start_level: float | None = None
    start_procedure: str = "uniform"


def fault_magnitude(
    grid: GridModel,
    theta0: np.ndarray,
    faults: Sequence[FaultScenario],
    settings: SweepSettings,
) -> float:
    faulted = apply_faults(grid, faults)
    traj = simulate(faulted, theta0, faults[0], settings.engine, settings.dynamics)
    return disturbance_magnitude(rocof_series(traj, faults[0].dt, faults[0].n_sim))


def sweep_inertia(
    grid: GridModel,
    procedure: str,
    levels: Sequence[float],
    faults: Sequence[FaultScenario],
    seed: int | np.random.Generator,
    settings: SweepSettings | None = None,
    modes: SpectralModes | None = None,
) -> SweepResult:
    """M_b of every fault along one nested inertia path.

    ``levels`` are absolute M_sys targets in model units, monotone in one
    direction; each level modifies the previous level's grid so the path
    is nested. Power setpoints are left as dispatched.

    For ``fiedler_shift`` the levels are instead cumulative amounts of
    inertia moved out of the Fiedler area into the non-Fiedler area, in
    non-decreasing order; M_sys stays where the path started.
    """
    settings = settings or SweepSettings()
    kind = parse_procedure(procedure)
    procedure = kind.value
    shifting = kind is PlacementProcedure.FIEDLER_SHIFT
    levels = [float(v) for v in levels]
    if not levels:
        raise GridInputError("sweep needs at least one level")
    if not faults:
        raise GridInputError("sweep needs at least one fault")
    diffs = np.diff(levels)
    if shifting and (np.any(diffs < 0) or levels[0] < 0):
        raise GridInputError("shift amounts must be >= 0 and non-decreasing")
    if np.any(diffs > 0) and np.any(diffs < 0):
        raise GridInputError("sweep levels must be sorted in one direction")

    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    seed_label = -1 if isinstance(seed, np.random.Generator) else int(seed)
    if modes is None:
        modes = slow_modes(build_laplacian(grid), min(4, grid.n), grid.bus_ids)
    fiedler_sq = modes.weight_by_bus()
    engine = get_dynamics_engine(settings.engine)

    current = _starting_grid(grid, modes, rng, settings)
    if shifting:
        source = sampling_weights(modes, grid, PlacementProcedure.FIEDLER, settings.epsilon_floor)
        sink = sampling_weights(modes, grid, PlacementProcedure.NON_FIEDLER, settings.epsilon_floor)
        unit = settings.shift_unit or _base_unit(grid, settings.increment_fraction)
    else:
        weights = sampling_weights(modes, grid, procedure, settings.epsilon_floor, settings.custom_weights)

    points: list[SweepPoint] = []
    moved = 0.0
    for level in levels:
        try:
            if shifting:
                current = shift_inertia(current, source, sink, level - moved, rng, unit)
                moved = level
            else:
                direction = Direction.REMOVE if level <= current.system_inertia() else Direction.ADD
                current = modify_inertia(
                    current, weights, level, direction, rng, settings.increment_fraction, reference=grid
                )
            theta0 = engine.initial_state(current, settings.dynamics)
        except GridInputError as exc:
            raise GridInputError(f"{procedure} level {level:.6g}: {exc}") from exc
        for fault in faults:
            try:
                magnitude = fault_magnitude(current, theta0, [fault], settings)
            except GridInputError as exc:
                raise GridInputError(f"{procedure} level {level:.6g}, fault bus {fault.bus}: {exc}") from exc
            except NumericalError as exc:
                raise NumericalError(f"{procedure} level {level:.6g}, fault bus {fault.bus}: {exc}") from exc
            points.append(
                SweepPoint(
                    m_sys=current.system_inertia(),
                    fault_bus=fault.bus,
                    u2b_sq=fiedler_sq[fault.bus],
                    magnitude=magnitude,
                )
            )
    return SweepResult(
        procedure=procedure,
        seed=seed_label,
        points=tuple(points),
        inertia_scale=1e9 if grid.units == "si" else 1.0,
    )


def _starting_grid(
    grid: GridModel,
    modes: SpectralModes,
    rng: np.random.Generator,
    settings: SweepSettings,
) -> GridModel:
    if settings.start_level is None:
        return grid
    weights = sampling_weights(modes, grid, settings.start_procedure, settings.epsilon_floor)
    try:
        return modify_inertia(grid, weights, settings.start_level, Direction.REMOVE, rng, reference=grid)
    except GridInputError as exc:
        raise GridInputError(f"start level {settings.start_level:.6g}: {exc}") from exc


def _base_unit(grid: GridModel, increment_fraction: float) -> float:
    m0 = np.array([grid.bus(b).inertia for b in grid.generator_ids()], dtype=float)
    positive = m0[m0 > 0]
    if positive.size == 0:
        raise GridInputError("grid holds no inertia to size shift draws")
    return increment_fraction * float(positive.mean())


def _sweep_task(
    grid: GridModel,
    procedure: str,
    seed: int,
    levels: Sequence[float],
    faults: Sequence[FaultScenario],
    settings: SweepSettings,
    modes: SpectralModes,
) -> SweepResult:
    rng = np.random.default_rng([seed, PLACEMENT_KINDS.index(procedure)])
    result = sweep_inertia(grid, procedure, levels, faults, rng, settings, modes)
    return SweepResult(procedure=procedure, seed=seed, points=result.points, inertia_scale=result.inertia_scale)


def run_sweeps(
    grid: GridModel,
    procedures: Sequence[str],
    levels: Sequence[float],
    faults: Sequence[FaultScenario],
    seeds: Sequence[int],
    settings: SweepSettings | None = None,
    workers: int = 1,
    shift_levels: Sequence[float] | None = None,
) -> list[SweepResult]:
    """One sweep per (procedure, seed), each with its own random stream.

    ``fiedler_shift`` sweeps walk ``shift_levels`` (cumulative amounts moved)
    instead of ``levels``. Results come back ordered by procedure then seed
    whatever the worker count.
    """
    settings = settings or SweepSettings()
    procedures = [parse_procedure(p).value for p in procedures]
    if PlacementProcedure.FIEDLER_SHIFT.value in procedures and not shift_levels:
        raise GridInputError("fiedler_shift sweeps need shift levels")
    path_of = {
        p: list(shift_levels) if p == PlacementProcedure.FIEDLER_SHIFT.value else list(levels) for p in procedures
    }
    modes = slow_modes(build_laplacian(grid), min(4, grid.n), grid.bus_ids)
    tasks = [(procedure, int(seed)) for procedure in procedures for seed in seeds]
    started = time.perf_counter()
    results: dict[tuple[str, int], SweepResult] = {}
    if workers <= 1 or len(tasks) <= 1:
        for procedure, seed in tasks:
            results[(procedure, seed)] = _sweep_task(grid, procedure, seed, path_of[procedure], faults, settings, modes)
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = {
                executor.submit(
                    _sweep_task, grid, procedure, seed, path_of[procedure], faults, settings, modes
                ): (procedure, seed)
                for procedure, seed in tasks
            }
            for future in as_completed(futures):
                results[futures[future]] = future.result()
    logger.info(
        "Ran %s sweep(s) over %s level(s) and %s fault(s) with %s worker(s) in %.3fs",
        len(tasks),
        len(levels),
        len(faults),
        workers,
        time.perf_counter() - started,
    )
    return [results[key] for key in tasks]


def severity_correlation(
    points: Sequence[SweepPoint],
    mode_weight: Mapping[int, float] | None = None,
) -> float:
    """Spearman rank correlation between M_b and the fault bus's mode weight.

    Uses each point's u2b^2 unless ``mode_weight`` (bus id -> weight, e.g. u3^2)
    is given.
    """
    if len(points) < 3:
        raise GridInputError("need at least 3 fault locations for a rank correlation")
    weights = [p.u2b_sq if mode_weight is None else mode_weight[p.fault_bus] for p in points]
    magnitudes = [p.magnitude for p in points]
    rho = spearmanr(weights, magnitudes).statistic
    return float(rho)


def write_sweep_csv(results: Sequence[SweepResult], path: Path) -> None:
    frames = [r.to_frame() for r in results]
    frame = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=SWEEP_COLUMNS)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.12g", lineterminator="\n")
