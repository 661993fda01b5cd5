from __future__ import annotations

from collections import defaultdict
import logging

import numpy as np
from scipy.sparse.linalg import spsolve

from ..errors import GridInputError, NumericalError
from ..grid.model import GridModel, balance_tolerance
from ..spectral.laplacian import build_laplacian

logger = logging.getLogger(__name__)


def default_slack(grid: GridModel) -> int:
    """Generator bus with the largest capacity; lowest id on ties.

    Capacity is the summed rated power of the bus's generator records, or the
    power setpoint for grids without records.
    """
    candidates = [b for b in grid.buses if b.is_generator]
    if not candidates:
        raise GridInputError("grid has no generator bus to act as slack")
    capacity: dict[int, float] = defaultdict(float)
    if grid.generators:
        for record in grid.generators:
            capacity[record.bus_id] += record.rated_power
    else:
        for bus in candidates:
            capacity[bus.id] = bus.power
    return min(candidates, key=lambda b: (-capacity.get(b.id, 0.0), b.id)).id


def dc_power_flow(grid: GridModel, injections: np.ndarray, slack: int | None = None) -> np.ndarray:
    """Angles solving L theta = P with theta at the slack bus fixed to 0."""
    injections = np.asarray(injections, dtype=float)
    if injections.shape != (grid.n,):
        raise GridInputError(f"injections have shape {injections.shape}, expected ({grid.n},)")
    imbalance = float(injections.sum())
    if abs(imbalance) > balance_tolerance(injections) + 1e-12 * float(np.abs(injections).sum()):
        raise GridInputError(f"unbalanced injections: sum is {imbalance:.6g}")

    theta = np.zeros(grid.n)
    if grid.n == 1 or not np.any(injections):
        return theta
    slack_index = grid.index_of[default_slack(grid) if slack is None else slack]
    keep = np.flatnonzero(np.arange(grid.n) != slack_index)
    L = build_laplacian(grid).tocsc()
    reduced = L[keep][:, keep]
    theta[keep] = spsolve(reduced, injections[keep])

    scale = float(np.abs(injections).max())
    residual = float(np.abs(L @ theta - injections).max())
    if not np.isfinite(residual) or residual >= 1e-9 * scale:
        raise NumericalError(f"DC power flow residual {residual:.3e} too large (is the grid connected?)")
    return theta
