from __future__ import annotations

from dataclasses import replace
from enum import Enum
import logging
from typing import Mapping

import numpy as np

from ..errors import GridInputError
from ..grid.model import GridModel

logger = logging.getLogger(__name__)

_TARGET_RTOL = 1e-12


class Direction(str, Enum):
    REMOVE = "remove"
    ADD = "add"


def modify_inertia(
    grid: GridModel,
    weights: Mapping[int, float],
    target: float,
    direction: str | Direction,
    rng: np.random.Generator,
    increment_fraction: float = 0.1,
    reference: GridModel | None = None,
) -> GridModel:
    """Remove or add generator inertia by weighted random draws until M_sys hits ``target``.

    Removal draws buses still holding inertia without replacement and zeroes
    them; the last draw is only reduced by what is left to remove. Addition
    draws with replacement and adds max(increment_fraction * m0_i, base unit),
    where m0 comes from ``reference`` (default ``grid``) and the base unit is
    increment_fraction times the mean positive m0; the last increment is cut
    to the target.
    """
    direction = Direction(direction)
    current = grid.system_inertia()
    if target < 0:
        raise GridInputError("target system inertia must be >= 0")
    if np.isclose(target, current, rtol=_TARGET_RTOL, atol=0.0):
        return grid
    if direction is Direction.REMOVE and target > current:
        raise GridInputError(f"cannot remove inertia: target {target:.6g} exceeds current {current:.6g}")
    if direction is Direction.ADD and target < current:
        raise GridInputError(f"cannot add inertia: target {target:.6g} is below current {current:.6g}")

    ids = grid.generator_ids()
    m = np.array([grid.bus(b).inertia for b in ids], dtype=float)
    p = np.array([float(weights.get(b, 0.0)) for b in ids], dtype=float)
    tolerance = _TARGET_RTOL * max(current, target)

    if direction is Direction.REMOVE:
        available = m > 0
        while m.sum() - target > tolerance:
            candidates = np.flatnonzero(available)
            if candidates.size == 0:
                raise GridInputError("no inertia left to remove")
            i = _draw(rng, candidates, p)
            excess = m.sum() - target
            if m[i] <= excess:
                m[i] = 0.0
            else:
                m[i] -= excess
            available[i] = False
    else:
        reference = reference or grid
        m0 = np.array([reference.bus(b).inertia if b in reference.index_of else 0.0 for b in ids])
        positive = m0[m0 > 0]
        if positive.size == 0:
            raise GridInputError("reference grid holds no inertia to size increments")
        base_unit = increment_fraction * float(positive.mean())
        increments = np.maximum(increment_fraction * m0, base_unit)
        candidates = np.arange(len(ids))
        while target - m.sum() > tolerance:
            i = _draw(rng, candidates, p)
            m[i] += min(increments[i], target - m.sum())

    new_inertia = dict(zip(ids, m))
    buses = [replace(b, inertia=float(new_inertia[b.id])) if b.id in new_inertia else b for b in grid.buses]
    result = grid.with_buses(buses)
    logger.debug("%s inertia: M_sys %.6g -> %.6g", direction.value, current, result.system_inertia())
    return result


def shift_inertia(
    grid: GridModel,
    source_weights: Mapping[int, float],
    sink_weights: Mapping[int, float],
    amount: float,
    rng: np.random.Generator,
    unit: float,
) -> GridModel:
    """Move ``amount`` of inertia in paired draws of at most ``unit``: take from a
    source-weighted bus, give to a sink-weighted bus. M_sys stays constant."""
    if amount < 0 or unit <= 0:
        raise GridInputError("amount must be >= 0 and unit > 0")
    ids = grid.generator_ids()
    m = np.array([grid.bus(b).inertia for b in ids], dtype=float)
    if amount > m.sum():
        raise GridInputError(f"cannot shift {amount:.6g}, only {m.sum():.6g} available")
    p_source = np.array([float(source_weights.get(b, 0.0)) for b in ids])
    p_sink = np.array([float(sink_weights.get(b, 0.0)) for b in ids])
    every = np.arange(len(ids))

    moved = 0.0
    tolerance = _TARGET_RTOL * max(amount, 1.0)
    while amount - moved > tolerance:
        holders = np.flatnonzero(m > 0)
        if holders.size == 0:
            raise GridInputError("no inertia left to shift")
        source = _draw(rng, holders, p_source)
        take = min(unit, amount - moved, m[source])
        m[source] -= take
        sink = _draw(rng, every, p_sink)
        m[sink] += take
        moved += take

    new_inertia = dict(zip(ids, m))
    return grid.with_buses(
        replace(b, inertia=float(new_inertia[b.id])) if b.id in new_inertia else b for b in grid.buses
    )


def _draw(rng: np.random.Generator, candidates: np.ndarray, weights: np.ndarray) -> int:
    p = weights[candidates]
    total = p.sum()
    if not total > 0:
        logger.warning("Placement weights vanish on the %s remaining bus(es); drawing uniformly", candidates.size)
        return int(candidates[rng.integers(candidates.size)])
    return int(candidates[rng.choice(candidates.size, p=p / total)])
