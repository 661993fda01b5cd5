from __future__ import annotations

import sys
from pathlib import Path

import pytest


ROOT = Path(__file__).resolve().parents[2]
SRC = ROOT / "src"
FIXTURES = ROOT / "tests" / "fixtures"

if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))

from inertiaforge.grid import Bus, BusKind, GridModel, Line, synth_two_cluster  # noqa: E402


@pytest.fixture
def grid_fixture_dir() -> Path:
    return FIXTURES / "grid"


@pytest.fixture
def barbell() -> GridModel:
    return synth_two_cluster(5, 1.0, 0.05, 1)


@pytest.fixture
def two_bus() -> GridModel:
    """Generator (m=1, d=0.1, P=+0.5) feeding a load (d=0.1) over B V^2 = 1 p.u."""
    return GridModel(
        buses=(
            Bus(1, BusKind.GENERATOR, 1.0, (0.0, 0.0), power=0.5, inertia=1.0, damping=0.1),
            Bus(2, BusKind.LOAD, 1.0, (10.0, 0.0), power=-0.5, damping=0.1),
        ),
        lines=(Line(1, 2, 1.0),),
        units="pu",
        coordinates="planar",
    )


def path_grid(weights: list[float], powers: list[float] | None = None) -> GridModel:
    """Chain 1-2-...-n in p.u.; bus 1 is a generator, the others loads."""
    n = len(weights) + 1
    powers = powers or [0.0] * n
    buses = tuple(
        Bus(
            i + 1,
            BusKind.GENERATOR if i == 0 else BusKind.LOAD,
            1.0,
            (float(i), 0.0),
            power=powers[i],
            inertia=1.0 if i == 0 else 0.0,
            damping=0.1,
        )
        for i in range(n)
    )
    lines = tuple(Line(i + 1, i + 2, w) for i, w in enumerate(weights))
    return GridModel(buses=buses, lines=lines, units="pu", coordinates="planar")


def complete_grid(n: int, weight: float = 1.0) -> GridModel:
    buses = tuple(
        Bus(i + 1, BusKind.GENERATOR, 1.0, (float(i), 0.0), inertia=1.0, damping=0.1) for i in range(n)
    )
    lines = tuple(Line(i + 1, j + 1, weight) for i in range(n) for j in range(i + 1, n))
    return GridModel(buses=buses, lines=lines, units="pu", coordinates="planar")
