from __future__ import annotations

import numpy as np
import pytest

from inertiaforge.config import DampingConfig
from inertiaforge.dispatch import (
    DispatchProblem,
    apply_dispatch,
    dc_power_flow,
    default_slack,
    economic_dispatch,
    merit_order,
)
from inertiaforge.errors import GridInputError
from inertiaforge.grid import Bus, BusKind, GeneratorRecord, GridModel, Line

from conftest import path_grid


def _triangle(kinds: tuple[BusKind, ...], generators: tuple[GeneratorRecord, ...] = ()) -> GridModel:
    buses = tuple(
        Bus(i + 1, kind, 1.0, (float(i), 0.0), inertia=1.0 if kind is BusKind.GENERATOR else 0.0, damping=0.1)
        for i, kind in enumerate(kinds)
    )
    lines = (Line(1, 2, 1.0), Line(2, 3, 1.0), Line(1, 3, 1.0))
    return GridModel(buses, lines, units="pu", coordinates="planar", generators=generators)


def _merit_oracle(costs: list[float], caps: list[float], bus_ids: list[int], load: float) -> np.ndarray:
    order = sorted(range(len(costs)), key=lambda i: (costs[i], bus_ids[i], i))
    outputs = np.zeros(len(costs))
    remaining = load
    for i in order:
        if remaining <= 0:
            break
        outputs[i] = min(caps[i], remaining)
        remaining -= outputs[i]
    return outputs


def test_dc_two_bus() -> None:
    grid = path_grid([1.0])
    theta = dc_power_flow(grid, np.array([1.0, -1.0]), slack=2)
    np.testing.assert_allclose(theta, [1.0, 0.0], atol=1e-12)


def test_dc_zero_injection() -> None:
    grid = path_grid([1.0, 2.0])
    np.testing.assert_array_equal(dc_power_flow(grid, np.zeros(3)), np.zeros(3))


def test_dc_symmetric_cycle() -> None:
    grid = _triangle((BusKind.GENERATOR, BusKind.LOAD, BusKind.LOAD))
    theta = dc_power_flow(grid, np.array([1.0, -0.5, -0.5]), slack=1)
    assert theta[1] == pytest.approx(theta[2], abs=1e-12)


def test_dc_rejects_unbalanced() -> None:
    with pytest.raises(GridInputError, match="unbalanced injections"):
        dc_power_flow(path_grid([1.0]), np.array([1.0, -0.5]))


def test_merit_order_example() -> None:
    gens = (
        GeneratorRecord.from_technology(1, "gas", 200e6),
        GeneratorRecord.from_technology(2, "nuclear", 80e6),
    )
    grid = _triangle((BusKind.GENERATOR, BusKind.GENERATOR, BusKind.LOAD), gens)
    grid = GridModel(grid.buses, grid.lines, units="si", coordinates="planar", generators=gens)
    problem = DispatchProblem(grid, np.array([0.0, 0.0, 100e6]), gens)
    result = economic_dispatch(problem)
    np.testing.assert_array_equal(result.outputs, [20e6, 80e6])
    assert result.objective == pytest.approx(80 * 16 + 20 * 100)
    assert result.slack == 1
    frame = result.to_frame()
    assert frame["P_MW"].tolist() == pytest.approx([20.0, 80.0, -100.0])


def test_zero_load_dispatches_nothing() -> None:
    gens = (GeneratorRecord.from_technology(1, "gas", 1.0),)
    grid = _triangle((BusKind.GENERATOR, BusKind.LOAD, BusKind.LOAD), gens)
    result = economic_dispatch(DispatchProblem(grid, np.zeros(3), gens))
    np.testing.assert_array_equal(result.outputs, [0.0])
    np.testing.assert_array_equal(result.theta, np.zeros(3))


def test_equal_costs_fill_lowest_bus_first() -> None:
    gens = (
        GeneratorRecord.from_technology(2, "gas", 1.0),
        GeneratorRecord.from_technology(1, "gas", 1.0),
    )
    grid = _triangle((BusKind.GENERATOR, BusKind.GENERATOR, BusKind.LOAD), gens)
    outputs = merit_order(DispatchProblem(grid, np.array([0.0, 0.0, 0.6]), gens))
    np.testing.assert_array_equal(outputs, [0.0, 0.6])


def test_infeasible_dispatch() -> None:
    gens = (GeneratorRecord.from_technology(1, "gas", 0.5),)
    grid = _triangle((BusKind.GENERATOR, BusKind.LOAD, BusKind.LOAD), gens)
    with pytest.raises(GridInputError, match="infeasible dispatch"):
        economic_dispatch(DispatchProblem(grid, np.array([0.0, 0.4, 0.4]), gens))


def test_line_limit_redispatches_expensive_unit() -> None:
    gens = (
        GeneratorRecord.from_technology(1, "nuclear", 2.0),
        GeneratorRecord.from_technology(2, "gas", 2.0),
    )
    grid = _triangle((BusKind.GENERATOR, BusKind.GENERATOR, BusKind.LOAD), gens)
    loads = np.array([0.0, 0.0, 1.5])
    free = economic_dispatch(DispatchProblem(grid, loads, gens))
    np.testing.assert_allclose(free.outputs, [1.5, 0.0])

    # flow 1->3 is (p1 + 1.5) / 3 on this triangle, so a 0.8 limit caps p1 at 0.9
    limited = economic_dispatch(DispatchProblem(grid, loads, gens, line_limit=0.8))
    np.testing.assert_allclose(limited.outputs, [0.9, 0.6], atol=1e-7)
    assert limited.objective == pytest.approx(16 * 0.9 + 100 * 0.6, rel=1e-6)
    rows, cols, weights = grid.edge_arrays()
    flows = weights * (limited.theta[rows] - limited.theta[cols])
    assert np.all(np.abs(flows) <= 0.8 + 1e-7)

    with pytest.raises(GridInputError, match="infeasible dispatch with line limit"):
        economic_dispatch(DispatchProblem(grid, loads, gens, line_limit=0.1))


def test_merit_order_matches_oracle_on_random_instances() -> None:
    rng = np.random.default_rng(2024)
    cost_levels = [7.0, 16.0, 35.0, 80.0, 100.0]
    for _ in range(50):
        n = int(rng.integers(3, 9))
        n_gen = int(rng.integers(1, 6))
        bus_ids = [int(b) for b in rng.integers(1, n + 1, size=n_gen)]
        costs = [float(rng.choice(cost_levels)) for _ in range(n_gen)]
        caps = [float(c) for c in rng.uniform(0.1, 2.0, size=n_gen)]
        kinds = tuple(BusKind.GENERATOR if i + 1 in bus_ids else BusKind.LOAD for i in range(n))
        gens = tuple(
            GeneratorRecord.from_technology(b, "other", cap, marginal_cost=c) for b, c, cap in zip(bus_ids, costs, caps)
        )
        grid = GridModel(
            tuple(Bus(i + 1, kind, 1.0, damping=0.1) for i, kind in enumerate(kinds)),
            tuple(Line(i + 1, i + 2, 1.0) for i in range(n - 1)),
            units="pu",
            coordinates="planar",
            generators=gens,
        )
        loads = rng.uniform(0.0, 1.0, size=n)
        loads *= min(1.0, 0.9 * sum(caps) / loads.sum())
        result = economic_dispatch(DispatchProblem(grid, loads, gens))
        np.testing.assert_array_equal(result.outputs, _merit_oracle(costs, caps, bus_ids, float(loads.sum())))


def test_slack_is_largest_capacity() -> None:
    gens = (
        GeneratorRecord.from_technology(3, "gas", 5.0),
        GeneratorRecord.from_technology(1, "gas", 2.0),
        GeneratorRecord.from_technology(1, "hydro", 3.0),
    )
    grid = _triangle((BusKind.GENERATOR, BusKind.LOAD, BusKind.GENERATOR), gens)
    # 5.0 at bus 1 ties 5.0 at bus 3; lowest id wins
    assert default_slack(grid) == 1


def test_apply_dispatch_committed_only() -> None:
    gens = (
        GeneratorRecord.from_technology(1, "nuclear", 2.0),
        GeneratorRecord.from_technology(2, "gas", 2.0),
    )
    grid = _triangle((BusKind.GENERATOR, BusKind.GENERATOR, BusKind.LOAD), gens)
    loads = np.array([0.0, 0.0, 1.0])
    problem = DispatchProblem(grid, loads, gens)
    result = economic_dispatch(problem)
    base = grid.with_buses(
        [b if b.is_generator else Bus(b.id, b.kind, 1.0, b.position, power=-1.0, damping=0.1) for b in grid.buses]
    )

    everything = apply_dispatch(base, problem, result, DampingConfig())
    assert everything.bus(2).is_generator
    assert everything.bus(2).inertia > 0
    assert everything.powers().tolist() == pytest.approx([1.0, 0.0, -1.0])

    committed = apply_dispatch(base, problem, result, DampingConfig(), committed_only=True)
    assert committed.bus(1).is_generator
    assert committed.bus(2).kind is BusKind.LOAD
    assert committed.bus(2).inertia == 0.0
    assert committed.bus(2).damping > 0
