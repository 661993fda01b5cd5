from __future__ import annotations

from dataclasses import dataclass, field
import logging
from pathlib import Path
import time
from typing import Sequence

import numpy as np
import pandas as pd
from scipy.integrate import solve_ivp

from ..config import DynamicsConfig
from ..errors import GridInputError, NumericalError
from ..grid.model import GridModel
from .engine import DynamicsEngine, get_dynamics_engine
from .fault import FaultScenario, apply_faults

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Angles and frequency deviations on the integration grid.

    Row 0 is the pre-fault stationary state (omega = 0); the power loss acts
    from t = 0+.
    """

    times: np.ndarray
    theta: np.ndarray
    omega: np.ndarray
    bus_ids: np.ndarray
    step: float
    positions: tuple[tuple[float, float] | None, ...] = field(default=(), repr=False)
    coordinates: str = "planar"

    def sample_indices(self, dt: float) -> np.ndarray:
        """Rows at t = k dt, k = 0, 1, ... within the horizon."""
        ratio = dt / self.step
        stride = int(round(ratio))
        if stride < 1 or abs(ratio - stride) > 1e-9 * ratio:
            raise GridInputError(f"dt={dt:g} is not a multiple of the integration step {self.step:g}")
        return np.arange(0, len(self.times), stride)

    def to_frame(self, stride: int = 1) -> pd.DataFrame:
        rows = np.arange(0, len(self.times), stride)
        n = len(self.bus_ids)
        return pd.DataFrame(
            {
                "t": np.repeat(self.times[rows], n),
                "bus_id": np.tile(self.bus_ids, len(rows)),
                "theta_rad": self.theta[rows].ravel(),
                "omega_rad_s": self.omega[rows].ravel(),
            }
        )

    def write_csv(self, path: Path, stride: int = 1) -> None:
        self.to_frame(stride).to_csv(path, index=False, float_format="%.12g", lineterminator="\n")


def simulate(
    grid_faulted: GridModel,
    theta0: np.ndarray,
    scenario: FaultScenario,
    engine: DynamicsEngine | str = "nonlinear",
    cfg: DynamicsConfig | None = None,
) -> Trajectory:
    """Integrate the swing equations of the faulted grid from (theta0, omega = 0).

    Buses with m > 0 follow m theta'' + d theta' = P - P^e; inertialess buses
    follow d theta' = P - P^e.
    """
    cfg = cfg or DynamicsConfig()
    if isinstance(engine, str):
        engine = get_dynamics_engine(engine)
    theta0 = np.asarray(theta0, dtype=float)
    if theta0.shape != (grid_faulted.n,):
        raise GridInputError(f"theta0 has shape {theta0.shape}, expected ({grid_faulted.n},)")

    n = grid_faulted.n
    inertia = grid_faulted.inertias()
    damping = grid_faulted.dampings()
    if np.any(damping <= 0):
        raise GridInputError("every bus needs damping > 0")
    powers = grid_faulted.powers()
    second = np.flatnonzero(inertia > 0)
    first = np.flatnonzero(inertia <= 0)
    m_second = inertia[second]
    network_power = engine.power_function(grid_faulted)

    def rhs(_t: float, y: np.ndarray) -> np.ndarray:
        theta = y[:n]
        omega_second = y[n:]
        mismatch = powers - network_power(theta)
        dtheta = np.empty(n)
        dtheta[second] = omega_second
        dtheta[first] = mismatch[first] / damping[first]
        domega = (mismatch[second] - damping[second] * omega_second) / m_second
        return np.concatenate([dtheta, domega])

    times = np.linspace(0.0, scenario.t_sim, scenario.n_steps + 1)
    y0 = np.concatenate([theta0, np.zeros(second.size)])
    started = time.perf_counter()
    solution = solve_ivp(
        rhs,
        (0.0, scenario.t_sim),
        y0,
        method="RK45",
        t_eval=times,
        rtol=cfg.rtol,
        atol=cfg.atol,
        max_step=scenario.step,
    )
    if solution.status != 0 or solution.y.shape[1] != times.size or not np.all(np.isfinite(solution.y)):
        failed_at = float(solution.t[-1]) if solution.t.size else 0.0
        raise NumericalError(f"integration failed at t={failed_at:.6g} s: {solution.message}")

    theta = solution.y[:n].T.copy()
    omega = np.empty_like(theta)
    omega[:, second] = solution.y[n:].T
    if first.size:
        mismatch = np.stack([powers - network_power(row) for row in theta])
        omega[:, first] = mismatch[:, first] / damping[first]
    omega[0] = 0.0
    logger.info(
        "Simulated %s buses (%s second-order) over %.3g s with %s engine in %.3fs (%s rhs evaluations)",
        n,
        second.size,
        scenario.t_sim,
        engine.name,
        time.perf_counter() - started,
        solution.nfev,
    )
    return Trajectory(
        times=times,
        theta=theta,
        omega=omega,
        bus_ids=grid_faulted.bus_ids.copy(),
        step=scenario.step,
        positions=tuple(grid_faulted.positions()),
        coordinates=grid_faulted.coordinates,
    )


def simulate_multi_fault(
    grid: GridModel,
    theta0: np.ndarray,
    scenarios: Sequence[FaultScenario],
    engine: DynamicsEngine | str = "nonlinear",
    cfg: DynamicsConfig | None = None,
) -> Trajectory:
    """All faults act together at t = 0 on the pre-fault ``grid``."""
    faulted = apply_faults(grid, scenarios)
    return simulate(faulted, theta0, scenarios[0], engine, cfg)


def run_scenarios(
    grid: GridModel,
    scenarios: Sequence[FaultScenario],
    engine: DynamicsEngine | str = "nonlinear",
    cfg: DynamicsConfig | None = None,
    theta0: np.ndarray | None = None,
) -> Trajectory:
    """Steady state, faults and simulation in one call."""
    cfg = cfg or DynamicsConfig()
    if isinstance(engine, str):
        engine = get_dynamics_engine(engine)
    if theta0 is None:
        theta0 = engine.initial_state(grid, cfg)
    return simulate_multi_fault(grid, theta0, scenarios, engine, cfg)
