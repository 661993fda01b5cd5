from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from inertiaforge.errors import GridInputError
from inertiaforge.grid import (
    Bus,
    BusKind,
    GeneratorRecord,
    GridModel,
    Line,
    Technology,
    largest_connected_component,
    line_susceptance,
    merge_parallel_lines,
    parse_technology,
    scale_regional_inertia,
    validate,
)


def _si_two_bus(p_load_mw: float = -100.0) -> GridModel:
    return GridModel(
        buses=(
            Bus(1, BusKind.GENERATOR, 380.0, (50.0, 8.0), power=100e6, inertia=1e7, damping=1e6),
            Bus(2, BusKind.LOAD, 380.0, (50.1, 8.1), power=p_load_mw * 1e6, damping=1e6),
        ),
        lines=(Line(1, 2, 0.03),),
    )


def _triangle(first_id: int, size: int) -> tuple[list[Bus], list[Line]]:
    ids = list(range(first_id, first_id + size))
    buses = [Bus(i, BusKind.LOAD, 1.0, damping=0.1) for i in ids]
    lines = [Line(ids[k], ids[(k + 1) % size], 1.0) for k in range(size)]
    return buses, lines


def test_balanced_two_bus_is_valid() -> None:
    report = validate(_si_two_bus())
    assert report.ok
    assert report.summary() == "grid valid: no violations"


def test_power_imbalance_reported() -> None:
    report = validate(_si_two_bus(-90.0))
    assert report.rules() == ["power-imbalance"]


def test_self_loop_reported() -> None:
    grid = _si_two_bus()
    grid = replace(grid, lines=grid.lines + (Line(2, 2, 0.01),))
    assert report_rules(grid) == ["self-loop"]


def test_violations_are_sorted_by_rule_then_element() -> None:
    grid = _si_two_bus(-90.0)
    buses = list(grid.buses)
    buses[1] = replace(buses[1], damping=0.0, inertia=5.0)
    grid = replace(grid, buses=tuple(buses), lines=grid.lines + (Line(1, 9, 0.01),))
    rules = report_rules(grid)
    assert rules == sorted(rules)
    assert {"damping", "inertia", "dangling-line", "power-imbalance"} <= set(rules)


def report_rules(grid: GridModel) -> list[str]:
    return validate(grid).rules()


def test_largest_component_keeps_bigger_triangle() -> None:
    small_buses, small_lines = _triangle(1, 3)
    big_buses, big_lines = _triangle(10, 4)
    grid = GridModel(tuple(small_buses + big_buses), tuple(small_lines + big_lines), units="pu", coordinates="planar")
    kept = largest_connected_component(grid)
    assert sorted(b.id for b in kept.buses) == [10, 11, 12, 13]
    assert len(kept.lines) == 4


def test_largest_component_tie_prefers_smallest_id() -> None:
    first_buses, first_lines = _triangle(20, 3)
    second_buses, second_lines = _triangle(5, 3)
    grid = GridModel(tuple(first_buses + second_buses), tuple(first_lines + second_lines), units="pu", coordinates="planar")
    assert [b.id for b in largest_connected_component(grid).buses] == [5, 6, 7]


def test_connected_grid_returned_unchanged(barbell: GridModel) -> None:
    assert largest_connected_component(barbell) is barbell


def test_empty_grid_rejected() -> None:
    with pytest.raises(GridInputError, match="empty grid"):
        largest_connected_component(GridModel((), ()))


def test_parallel_lines_merge_susceptance() -> None:
    merged = merge_parallel_lines([Line(1, 2, 0.5, 10.0), Line(2, 1, 0.25, 12.0), Line(2, 3, 1.0)])
    assert len(merged) == 2
    assert merged[0].susceptance == pytest.approx(0.75)
    assert merged[0].length_km == 10.0


@pytest.mark.parametrize(
    ("length", "voltage", "expected"),
    [
        (100.0, 380.0, 3.774e-2),
        (100.0, 220.0, 2.778e-2),
        (50.0, 380.0, 7.547e-2),
    ],
)
def test_line_susceptance_defaults(length: float, voltage: float, expected: float) -> None:
    assert line_susceptance(length, voltage) == pytest.approx(expected, rel=1e-3)


def test_line_susceptance_unknown_voltage() -> None:
    with pytest.raises(GridInputError, match="no default reactance"):
        line_susceptance(10.0, 110.0)


def test_technology_defaults() -> None:
    record = GeneratorRecord.from_technology(3, "Hard Coal", 500e6)
    assert record.technology is Technology.HARD_COAL
    assert record.inertia_constant == 6.0
    assert record.marginal_cost == 35.0
    assert GeneratorRecord.from_technology(3, "hydro", 1.0, inertia_constant=5.0).inertia_constant == 5.0


def test_unknown_technology() -> None:
    with pytest.raises(GridInputError, match="unknown technology 'wind'"):
        parse_technology("wind")


def test_regional_inertia_scaling(barbell: GridModel) -> None:
    scaled = scale_regional_inertia(barbell, {"A": 0.5, "B": 2.0})
    for before, after in zip(barbell.buses, scaled.buses):
        factor = 0.5 if before.region == "A" else 2.0
        assert after.inertia == pytest.approx(before.inertia * factor)
    with pytest.raises(GridInputError, match="unknown regions"):
        scale_regional_inertia(barbell, {"Z": 1.0})


def test_edge_weights_use_voltages() -> None:
    grid = _si_two_bus()
    _, _, weights = grid.edge_arrays()
    np.testing.assert_allclose(weights, [0.03 * 380e3 * 380e3])
    assert grid.power_scale == 1e6
    assert grid.omega0 == pytest.approx(2 * np.pi * 50)
