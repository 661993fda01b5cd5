from __future__ import annotations

from dataclasses import dataclass, replace
import logging
from typing import Iterable

from ..config import FaultConfig
from ..errors import GridInputError
from ..grid.model import BusKind, GridModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FaultScenario:
    """Abrupt loss of ``delta_p`` (model units) at generator ``bus`` at t = 0.

    The horizon ``t_sim`` is split into ``n_sim`` sampling intervals of ``dt``;
    each interval holds ``steps_per_interval`` integration steps.
    ``remove_inertia=False`` keeps the bus and its inertia and applies a pure
    power step instead.
    """

    bus: int
    delta_p: float
    t_sim: float = 5.0
    dt: float = 0.5
    n_sim: int = 10
    steps_per_interval: int = 50
    remove_inertia: bool = True

    def __post_init__(self) -> None:
        if self.delta_p < 0:
            raise GridInputError("delta_p must be >= 0")
        if self.dt <= 0 or self.t_sim <= 0:
            raise GridInputError("dt and t_sim must be > 0")
        if self.n_sim < 1:
            raise GridInputError("n_sim must be >= 1")
        if abs(self.n_sim * self.dt - self.t_sim) > 1e-9 * self.t_sim:
            raise GridInputError(f"n_sim * dt = {self.n_sim * self.dt:g} does not match t_sim = {self.t_sim:g}")
        if self.steps_per_interval < 50:
            raise GridInputError("steps_per_interval must be >= 50 (integration step <= dt/50)")

    @property
    def step(self) -> float:
        return self.dt / self.steps_per_interval

    @property
    def n_steps(self) -> int:
        return self.n_sim * self.steps_per_interval

    def same_time_grid(self, other: "FaultScenario") -> bool:
        return (self.t_sim, self.dt, self.n_sim, self.steps_per_interval) == (
            other.t_sim,
            other.dt,
            other.n_sim,
            other.steps_per_interval,
        )

    @staticmethod
    def from_config(cfg: FaultConfig, bus: int, power_scale: float = 1.0) -> "FaultScenario":
        return FaultScenario(
            bus=int(bus),
            delta_p=cfg.delta_p * power_scale,
            t_sim=cfg.t_sim,
            dt=cfg.dt,
            n_sim=cfg.n_sim,
            steps_per_interval=cfg.steps_per_interval,
            remove_inertia=cfg.remove_inertia,
        )


def apply_fault(grid: GridModel, scenario: FaultScenario) -> GridModel:
    """Faulted copy: P_b drops by delta_p, and the bus becomes an inertialess load bus."""
    bus = grid.bus(scenario.bus)
    if scenario.remove_inertia:
        if not bus.is_generator:
            raise GridInputError(f"cannot fault load bus {bus.id}; only generator buses trip")
        if bus.power < scenario.delta_p:
            raise GridInputError(
                f"bus {bus.id} produces {bus.power:.6g}, less than delta_p {scenario.delta_p:.6g}"
            )
        faulted = replace(bus, kind=BusKind.LOAD, power=bus.power - scenario.delta_p, inertia=0.0)
    else:
        faulted = replace(bus, power=bus.power - scenario.delta_p)
    buses = list(grid.buses)
    buses[grid.index_of[bus.id]] = faulted
    return grid.with_buses(buses)


def apply_faults(grid: GridModel, scenarios: Iterable[FaultScenario]) -> GridModel:
    scenarios = list(scenarios)
    if not scenarios:
        raise GridInputError("at least one fault is required")
    buses = [s.bus for s in scenarios]
    if len(set(buses)) != len(buses):
        raise GridInputError(f"faulted buses must be distinct, got {buses}")
    for scenario in scenarios[1:]:
        if not scenario.same_time_grid(scenarios[0]):
            raise GridInputError("simultaneous faults must share t_sim, dt, n_sim and steps_per_interval")
    for scenario in scenarios:
        grid = apply_fault(grid, scenario)
    logger.debug("Applied %s fault(s) at buses %s", len(scenarios), buses)
    return grid
