from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field, replace
import logging
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.optimize import linprog
from scipy.sparse import coo_matrix, hstack, vstack

from ..config import DampingConfig
from ..errors import GridInputError, NumericalError
from ..grid.model import BusKind, GeneratorRecord, GridModel
from ..ingestion.parameters import derive_generator_damping, derive_inertia
from ..spectral.laplacian import build_laplacian
from .power_flow import dc_power_flow, default_slack

logger = logging.getLogger(__name__)

# $/MWh added per merit rank so equal-cost units load in bus-id order
_TIE_BREAK = 1e-6


@dataclass(frozen=True, eq=False)
class DispatchProblem:
    """Loads are nonnegative per-bus magnitudes in model units (W for SI grids)."""

    grid: GridModel
    loads: np.ndarray
    generators: tuple[GeneratorRecord, ...]
    line_limit: float | None = None

    def __post_init__(self) -> None:
        if self.loads.shape != (self.grid.n,):
            raise GridInputError(f"load vector has shape {self.loads.shape}, expected ({self.grid.n},)")
        if np.any(self.loads < 0):
            raise GridInputError("loads must be >= 0")
        if self.line_limit is not None and self.line_limit <= 0:
            raise GridInputError("line limit must be > 0")
        for record in self.generators:
            if record.bus_id not in self.grid.index_of:
                raise GridInputError(f"generator references unknown bus {record.bus_id}")

    @staticmethod
    def from_grid(grid: GridModel, line_limit: float | None = None) -> "DispatchProblem":
        loads = np.clip(-grid.powers(), 0.0, None)
        return DispatchProblem(grid=grid, loads=loads, generators=grid.generators, line_limit=line_limit)

    @property
    def total_load(self) -> float:
        return float(self.loads.sum())

    @property
    def capacity(self) -> float:
        return float(sum(g.rated_power for g in self.generators))

    def merit_rank(self) -> list[int]:
        """Generator indices from cheapest to dearest, lowest bus id first on ties."""
        return sorted(
            range(len(self.generators)),
            key=lambda i: (self.generators[i].marginal_cost, self.generators[i].bus_id, i),
        )


@dataclass(frozen=True, eq=False)
class DispatchResult:
    outputs: np.ndarray
    injections: np.ndarray
    theta: np.ndarray
    objective: float
    slack: int
    bus_ids: np.ndarray = field(repr=False)
    power_scale: float = 1.0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "bus_id": self.bus_ids,
                "P_MW": self.injections / self.power_scale,
                "theta_rad": self.theta,
            }
        )

    def write_csv(self, path: Path) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.12g", lineterminator="\n")


def merit_order(problem: DispatchProblem) -> np.ndarray:
    """Per-generator outputs loading the cheapest units first."""
    _check_capacity(problem)
    outputs = np.zeros(len(problem.generators))
    remaining = problem.total_load
    for index in problem.merit_rank():
        if remaining <= 0:
            break
        take = min(problem.generators[index].rated_power, remaining)
        outputs[index] = take
        remaining -= take
    return outputs


def economic_dispatch(problem: DispatchProblem) -> DispatchResult:
    """Least-cost dispatch; a DC-OPF linear program when a line limit is set."""
    _check_capacity(problem)
    if problem.line_limit is None:
        outputs = merit_order(problem)
    else:
        outputs = _solve_dc_opf(problem)
    return _finish(problem, outputs)


def apply_dispatch(
    grid: GridModel,
    problem: DispatchProblem,
    result: DispatchResult,
    damping: DampingConfig,
    committed_only: bool = False,
) -> GridModel:
    """Write dispatched setpoints into ``grid``.

    With ``committed_only`` units dispatched at zero carry no inertia and no
    generator damping; a generator bus left without committed units becomes a
    load bus.
    """
    injections = result.injections.copy()
    imbalance = float(injections.sum())
    if imbalance != 0.0:
        injections[grid.index_of[result.slack]] -= imbalance
        logger.debug("Assigned residual imbalance %.3g to slack bus %s", imbalance, result.slack)

    inertia: dict[int, float] = defaultdict(float)
    gen_damping: dict[int, float] = defaultdict(float)
    committed: set[int] = set()
    for record, output in zip(problem.generators, result.outputs):
        if committed_only and output <= 0:
            continue
        committed.add(record.bus_id)
        inertia[record.bus_id] += derive_inertia(record, grid.omega0)
        gen_damping[record.bus_id] += derive_generator_damping(record, damping, grid.omega0)

    buses = []
    for bus, power in zip(grid.buses, injections):
        updated = replace(bus, power=float(power))
        if committed_only and bus.is_generator:
            all_damping = sum(
                derive_generator_damping(r, damping, grid.omega0) for r in problem.generators if r.bus_id == bus.id
            )
            load_damping = max(bus.damping - all_damping, 0.0)
            if bus.id in committed:
                updated = replace(updated, inertia=inertia[bus.id], damping=load_damping + gen_damping[bus.id])
            else:
                updated = replace(updated, kind=BusKind.LOAD, inertia=0.0, damping=load_damping)
        buses.append(updated)

    if committed_only:
        positive = [b.damping for b in buses if b.damping > 0]
        floor = damping.transit_fraction * float(np.median(positive))
        buses = [b if b.damping > 0 else replace(b, damping=floor) for b in buses]
        logger.info(
            "Committed %s of %s generator buses (%.4g of %.4g system inertia)",
            len(committed),
            len({r.bus_id for r in problem.generators}),
            sum(inertia.values()),
            grid.system_inertia(),
        )
    return grid.with_buses(buses)


def _check_capacity(problem: DispatchProblem) -> None:
    if problem.capacity < problem.total_load * (1.0 - 1e-12):
        raise GridInputError(
            f"infeasible dispatch: capacity {problem.capacity:.6g} below load {problem.total_load:.6g}"
        )


def _finish(problem: DispatchProblem, outputs: np.ndarray) -> DispatchResult:
    grid = problem.grid
    injections = -problem.loads.copy()
    for record, output in zip(problem.generators, outputs):
        injections[grid.index_of[record.bus_id]] += output
    slack = default_slack(grid)
    # rounding in the merit order loop lands on the slack
    injections[grid.index_of[slack]] -= float(injections.sum())
    theta = dc_power_flow(grid, injections, slack=slack)
    costs = np.array([g.marginal_cost for g in problem.generators], dtype=float)
    objective = float(costs @ outputs) / grid.power_scale
    return DispatchResult(
        outputs=outputs,
        injections=injections,
        theta=theta,
        objective=objective,
        slack=slack,
        bus_ids=grid.bus_ids.copy(),
        power_scale=grid.power_scale,
    )


def _solve_dc_opf(problem: DispatchProblem) -> np.ndarray:
    grid = problem.grid
    n_gen = len(problem.generators)
    n = grid.n

    costs = np.zeros(n_gen)
    for rank, index in enumerate(problem.merit_rank()):
        costs[index] = problem.generators[index].marginal_cost + _TIE_BREAK * rank
    c = np.concatenate([costs / grid.power_scale, np.zeros(n)])

    # bus balance: sum of unit outputs - L theta = load
    placement = coo_matrix(
        (np.ones(n_gen), ([grid.index_of[g.bus_id] for g in problem.generators], np.arange(n_gen))),
        shape=(n, n_gen),
    )
    L = build_laplacian(grid)
    slack_row = coo_matrix(([1.0], ([0], [grid.index_of[default_slack(grid)]])), shape=(1, n))
    A_eq = vstack(
        [
            hstack([placement, -L]),
            hstack([coo_matrix((1, n_gen)), slack_row]),
        ]
    ).tocsr()
    b_eq = np.concatenate([problem.loads, [0.0]])

    rows, cols, weights = grid.edge_arrays()
    n_lines = len(rows)
    lines = np.arange(n_lines)
    flows = coo_matrix(
        (np.concatenate([weights, -weights]), (np.concatenate([lines, lines]), np.concatenate([rows, cols]))),
        shape=(n_lines, n),
    )
    A_ub = vstack([hstack([coo_matrix((n_lines, n_gen)), flows]), hstack([coo_matrix((n_lines, n_gen)), -flows])]).tocsr()
    b_ub = np.full(2 * n_lines, float(problem.line_limit))

    bounds = [(0.0, g.rated_power) for g in problem.generators] + [(None, None)] * n
    solution = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if solution.status == 2:
        raise GridInputError(f"infeasible dispatch with line limit {problem.line_limit:g}: {solution.message}")
    if not solution.success:
        raise NumericalError(f"DC-OPF failed: {solution.message}")
    logger.info("DC-OPF solved (%s generators, %s lines), objective %.6g", n_gen, n_lines, solution.fun)
    return np.clip(solution.x[:n_gen], 0.0, [g.rated_power for g in problem.generators])
