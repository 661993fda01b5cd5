from __future__ import annotations

import logging
from pathlib import Path
import time

import numpy as np

from ..config import RunConfig
from ..dispatch import DispatchProblem, DispatchResult, apply_dispatch, economic_dispatch
from ..dynamics import (
    FaultScenario,
    RocofReport,
    frequency_traces,
    get_dynamics_engine,
    simulate_multi_fault,
    snapshot_frames,
    write_frames,
)
from ..errors import GridInputError
from ..grid import (
    GridModel,
    read_grid_artifact,
    scale_regional_inertia,
    synth_two_cluster,
    validate,
    write_grid_artifact,
)
from ..ingestion import apply_loads, distribute_national_load, load_grid_files, read_national_loads, read_towns
from ..placement import SweepSettings, run_sweeps, write_sweep_csv
from ..spectral import HomogeneousParams, build_laplacian, mode_timescale_report, slow_modes
from .export import (
    write_fiedler_weights_csv,
    write_frame,
    write_mode_mass_csv,
    write_modes_csv,
    write_resolved_config,
    write_summary,
    write_timescales_csv,
)

logger = logging.getLogger(__name__)


def _setup_logging() -> None:
    if not logging.getLogger().handlers:
        logging.basicConfig(level=logging.INFO, format="%(asctime)s [%(levelname)s] %(message)s")


def _resolve(path: str, project_root: Path) -> Path:
    candidate = Path(path)
    return candidate if candidate.is_absolute() else project_root / candidate


def build_grid(config: RunConfig, project_root: Path) -> tuple[GridModel, DispatchResult | None]:
    """Operating grid from the configured source, plus the dispatch for CSV grids."""
    cfg = config.grid
    t0 = time.perf_counter()
    if cfg.source == "synthetic":
        grid = synth_two_cluster(
            cfg.n_per_cluster,
            cfg.intra_susceptance,
            cfg.bridge_susceptance,
            cfg.seed,
            second_cluster_size=cfg.second_cluster_size,
            band=cfg.band,
            load_pu=cfg.load_pu,
            inertia_pu=cfg.inertia_pu,
            damping_pu=cfg.damping_pu,
            base_frequency=cfg.base_frequency,
        )
        dispatch = None
    else:
        grid = load_grid_files(
            _resolve(cfg.bus_file, project_root),
            _resolve(cfg.line_file, project_root),
            _resolve(cfg.generator_file, project_root),
            base_frequency=cfg.base_frequency,
            transformer_reactance_ohm=cfg.transformer_reactance_ohm,
            damping=config.damping,
        )
        loads = np.zeros(grid.n)
        if cfg.town_file and cfg.national_load_file:
            towns = read_towns(_resolve(cfg.town_file, project_root))
            national = read_national_loads(_resolve(cfg.national_load_file, project_root))
            national_w = {country: load * grid.power_scale for country, load in national.items()}
            loads = distribute_national_load(grid, towns, national_w, config.load_distribution)
            loads = loads * config.dispatch.load_scale
        else:
            logger.warning("No town/national load files configured; the grid carries no load.")
        grid = apply_loads(grid, loads, config.damping)
        limit = config.dispatch.line_limit_mw
        problem = DispatchProblem.from_grid(grid, None if limit is None else limit * grid.power_scale)
        dispatch = economic_dispatch(problem)
        grid = apply_dispatch(
            grid,
            problem,
            dispatch,
            config.damping,
            committed_only=config.dispatch.committed_inertia_only,
        )
        logger.info("Dispatch objective %.6g $/h, slack bus %s", dispatch.objective, dispatch.slack)

    if cfg.regional_inertia:
        grid = scale_regional_inertia(grid, cfg.regional_inertia)
    logger.info(
        "Grid built in %.3fs: %s buses, %s lines, M_sys=%.6g",
        time.perf_counter() - t0,
        grid.n,
        len(grid.lines),
        grid.system_inertia(),
    )
    return grid, dispatch


def load_operating_grid(config: RunConfig, project_root: Path) -> GridModel:
    if config.grid.artifact_dir:
        return read_grid_artifact(_resolve(config.grid.artifact_dir, project_root))
    logger.info("No grid.artifact_dir configured; building the grid in memory.")
    grid, _ = build_grid(config, project_root)
    return grid


def run_build(config: RunConfig, output_dir: Path, project_root: Path | None = None) -> dict:
    _setup_logging()
    config.validate()
    project_root = project_root or Path.cwd()
    overall = time.perf_counter()
    write_resolved_config(config, output_dir)

    grid, dispatch = build_grid(config, project_root)
    report = validate(grid)
    write_grid_artifact(grid, output_dir / "grid")
    if dispatch is not None:
        dispatch.write_csv(output_dir / "dispatch.csv")
    for line in report.summary().splitlines():
        (logger.info if report.ok else logger.warning)(line)
    logger.info("Total build time: %.3fs", time.perf_counter() - overall)
    return {
        "buses": grid.n,
        "lines": len(grid.lines),
        "system_inertia": grid.system_inertia(),
        "valid": report.ok,
        "violations": report.rules(),
        "report": report.summary(),
    }


def fault_scenarios(config: RunConfig, grid: GridModel) -> list[FaultScenario]:
    if not config.fault.buses:
        raise GridInputError("fault.buses is empty; name at least one generator bus")
    return [FaultScenario.from_config(config.fault, bus, grid.power_scale) for bus in config.fault.buses]


def run_fault(config: RunConfig, output_dir: Path, project_root: Path | None = None) -> dict:
    _setup_logging()
    config.validate()
    project_root = project_root or Path.cwd()
    overall = time.perf_counter()
    write_resolved_config(config, output_dir)

    grid = load_operating_grid(config, project_root)
    scenarios = fault_scenarios(config, grid)
    engine = get_dynamics_engine(config.dynamics.engine)

    t0 = time.perf_counter()
    theta0 = engine.initial_state(grid, config.dynamics)
    logger.info("Initial state in %.3fs", time.perf_counter() - t0)
    traj = simulate_multi_fault(grid, theta0, scenarios, engine, config.dynamics)
    report = RocofReport.from_trajectory(traj, config.fault.dt, grid.generator_mask(), config.fault.n_sim)

    traj.write_csv(output_dir / "trajectory.csv")
    report.write_csv(output_dir / "rocof.csv")
    write_frame(frequency_traces(traj, config.fault.trace_buses), output_dir / "frequency_hz.csv")
    if all(p is not None for p in traj.positions):
        write_frames(traj, snapshot_frames(traj, config.fault.dt, config.fault.n_sim), output_dir / "frames")
    else:
        logger.warning("Some buses have no position; skipping GeoJSON frames.")

    peak, peak_bus, peak_k = report.max_abs_rocof()
    summary = {
        "fault_buses": [s.bus for s in scenarios],
        "delta_p": config.fault.delta_p,
        "engine": engine.name,
        "M_b": report.magnitude,
        "M_b_generators": report.generator_only_magnitude,
        "max_abs_rocof_hz_s": peak,
        "max_abs_rocof_bus": peak_bus,
        "max_abs_rocof_interval": peak_k,
        "system_inertia": grid.system_inertia(),
    }
    write_summary(summary, output_dir / "summary.json")
    logger.info("M_b = %.6g Hz/s (generators only %.6g)", report.magnitude, report.generator_only_magnitude)
    logger.info("Total fault run time: %.3fs", time.perf_counter() - overall)
    return summary


def run_spectral(config: RunConfig, output_dir: Path, project_root: Path | None = None) -> dict:
    _setup_logging()
    config.validate()
    project_root = project_root or Path.cwd()
    write_resolved_config(config, output_dir)

    grid = load_operating_grid(config, project_root)
    k = min(config.spectral.k, grid.n)
    modes = slow_modes(build_laplacian(grid), k, grid.bus_ids)
    averaged = HomogeneousParams.from_grid(grid)
    params = HomogeneousParams(
        m=config.spectral.inertia if config.spectral.inertia is not None else averaged.m,
        d=config.spectral.damping if config.spectral.damping is not None else averaged.d,
    )

    output_dir.mkdir(parents=True, exist_ok=True)
    write_modes_csv(modes, output_dir / "modes.csv")
    write_fiedler_weights_csv(modes, grid, output_dir / "fiedler_weights.csv")
    write_mode_mass_csv(modes, grid, output_dir / "mode_mass.csv")

    timescales = mode_timescale_report(modes, params, config.spectral.dt, strict=False)
    write_timescales_csv(timescales, output_dir / "timescales.csv")
    overdamped = [row.alpha for row in timescales if row.overdamped]
    oscillating = [row for row in timescales if not row.overdamped]
    if overdamped:
        logger.warning(
            "Overdamped modes (m=%.4g, d=%.4g): alpha=%s",
            params.m,
            params.d,
            ",".join(str(a) for a in overdamped),
        )
    if oscillating:
        logger.info(
            "Fiedler value %.6g; timescale products %.4g .. %.4g",
            modes.fiedler_value,
            oscillating[0].product,
            oscillating[-1].product,
        )
    return {
        "eigenvalues": [float(v) for v in modes.eigenvalues],
        "fiedler_group": modes.fiedler_group(),
        "overdamped_modes": overdamped,
        "m": params.m,
        "d": params.d,
    }


def run_sweep(config: RunConfig, output_dir: Path, project_root: Path | None = None) -> dict:
    _setup_logging()
    config.validate()
    project_root = project_root or Path.cwd()
    overall = time.perf_counter()
    write_resolved_config(config, output_dir)

    grid = load_operating_grid(config, project_root)
    scenarios = fault_scenarios(config, grid)
    placement = config.placement
    m0 = grid.system_inertia()
    levels = [fraction * m0 for fraction in placement.levels]
    custom = None
    if placement.custom_weights:
        custom = {int(bus): weight for bus, weight in placement.custom_weights.items()}
    settings = SweepSettings(
        epsilon_floor=placement.epsilon_floor,
        increment_fraction=placement.increment_fraction,
        custom_weights=custom,
        engine=config.dynamics.engine,
        dynamics=config.dynamics,
        start_level=None if placement.start_level is None else placement.start_level * m0,
        start_procedure=placement.start_procedure,
    )
    results = run_sweeps(
        grid,
        placement.procedures,
        levels,
        scenarios,
        placement.seeds,
        settings,
        workers=placement.workers,
        shift_levels=[fraction * m0 for fraction in placement.shift_levels],
    )
    write_sweep_csv(results, output_dir / "sweep.csv")
    logger.info("Total sweep time: %.3fs", time.perf_counter() - overall)
    return {"sweeps": len(results), "points": sum(len(r.points) for r in results), "M_sys0": m0}
