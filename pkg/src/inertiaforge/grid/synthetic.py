from __future__ import annotations

from dataclasses import replace
import math

import numpy as np

from ..errors import GridInputError
from .model import Bus, BusKind, GridModel, Line

_BUS_SPACING_KM = 10.0
_CLUSTER_GAP_KM = 50.0


def synth_two_cluster(
    n_per_cluster: int,
    intra_susceptance: float,
    bridge_susceptance: float,
    seed: int,
    *,
    second_cluster_size: int | None = None,
    band: int = 2,
    load_pu: float = 0.05,
    inertia_pu: float = 1.0,
    damping_pu: float = 0.1,
    base_frequency: float = 50.0,
) -> GridModel:
    """Per-unit barbell grid: two banded chains joined by one weak line.

    Each cluster is a chain where bus i is linked to buses i+1 .. i+band. The
    bridge joins the middle buses of the two chains. Even positions within a
    cluster are generators, odd positions are loads; each cluster is balanced
    on its own so the bridge carries no pre-fault flow. ``second_cluster_size``
    makes the barbell asymmetric: the smaller cluster then holds most of the
    Fiedler mode weight.
    """
    sizes = (n_per_cluster, n_per_cluster if second_cluster_size is None else second_cluster_size)
    if min(sizes) < 3:
        raise GridInputError("clusters need at least 3 buses")
    if intra_susceptance <= 0 or bridge_susceptance <= 0:
        raise GridInputError("susceptances must be > 0")
    if bridge_susceptance >= intra_susceptance:
        raise GridInputError("bridge_susceptance must be smaller than intra_susceptance")
    if band < 1:
        raise GridInputError("band must be >= 1")
    if load_pu <= 0 or inertia_pu <= 0 or damping_pu <= 0:
        raise GridInputError("load_pu, inertia_pu and damping_pu must be > 0")

    rng = np.random.default_rng(seed)
    buses: list[Bus] = []
    lines: list[Line] = []
    middles: list[int] = []
    next_id = 1
    x_offset = 0.0
    for region, size in zip(("A", "B"), sizes):
        ids = list(range(next_id, next_id + size))
        next_id += size
        jitter = rng.uniform(-2.0, 2.0, size=(size, 2))
        positions = [
            (x_offset + _BUS_SPACING_KM * local + jitter[local, 0], jitter[local, 1])
            for local in range(size)
        ]
        x_offset += _BUS_SPACING_KM * size + _CLUSTER_GAP_KM

        loads = -load_pu * rng.uniform(0.5, 1.0, size=size)
        generator_locals = [local for local in range(size) if local % 2 == 0]
        generator_share = -float(loads[1::2].sum()) / len(generator_locals)
        for local, bus_id in enumerate(ids):
            is_generator = local % 2 == 0
            buses.append(
                Bus(
                    id=bus_id,
                    kind=BusKind.GENERATOR if is_generator else BusKind.LOAD,
                    voltage_kv=1.0,
                    position=(float(positions[local][0]), float(positions[local][1])),
                    power=generator_share if is_generator else float(loads[local]),
                    inertia=inertia_pu if is_generator else 0.0,
                    damping=damping_pu,
                    region=region,
                )
            )
        for local in range(size):
            for step in range(1, band + 1):
                other = local + step
                if other >= size:
                    break
                lines.append(
                    Line(
                        ids[local],
                        ids[other],
                        intra_susceptance,
                        _distance(positions[local], positions[other]),
                    )
                )
        middles.append(ids[size // 2])

    by_id = {b.id: b for b in buses}
    lines.append(
        Line(
            middles[0],
            middles[1],
            bridge_susceptance,
            _distance(by_id[middles[0]].position, by_id[middles[1]].position),
        )
    )
    return GridModel(
        buses=tuple(buses),
        lines=tuple(lines),
        base_frequency=base_frequency,
        units="pu",
        coordinates="planar",
    )


def homogeneous_variant(grid: GridModel, inertia: float, damping: float) -> GridModel:
    """Copy of ``grid`` where every bus is a generator with common inertia and damping."""
    if inertia <= 0 or damping <= 0:
        raise GridInputError("inertia and damping must be > 0")
    buses = [
        replace(b, kind=BusKind.GENERATOR, inertia=inertia, damping=damping)
        for b in grid.buses
    ]
    return grid.with_buses(buses)


def _distance(a: tuple[float, float] | None, b: tuple[float, float] | None) -> float:
    if a is None or b is None:
        return 1.0
    return max(math.hypot(a[0] - b[0], a[1] - b[1]), 1e-3)
