from __future__ import annotations

import logging
import time

import numpy as np
from scipy.sparse.linalg import spsolve

from ..config import DynamicsConfig
from ..dispatch.power_flow import dc_power_flow, default_slack
from ..errors import NumericalError
from ..grid.model import GridModel
from ..spectral.laplacian import build_laplacian

logger = logging.getLogger(__name__)

_POLISH_STEPS = 2


def electrical_power(grid: GridModel, theta: np.ndarray) -> np.ndarray:
    """P^e_i = sum_j B_ij V_i V_j sin(theta_i - theta_j)."""
    rows, cols, weights = grid.edge_arrays()
    flow = weights * np.sin(theta[rows] - theta[cols])
    return np.bincount(rows, weights=flow, minlength=grid.n) - np.bincount(cols, weights=flow, minlength=grid.n)


def power_flow_residual(grid: GridModel, theta: np.ndarray) -> np.ndarray:
    return grid.powers() - electrical_power(grid, np.asarray(theta, dtype=float))


def steady_state(
    grid: GridModel,
    cfg: DynamicsConfig | None = None,
    slack: int | None = None,
) -> np.ndarray:
    """Stationary angles of the lossless AC flow, by Newton from the DC solution.

    After convergence a couple of extra Newton steps bring the residual to
    round-off so an unfaulted simulation stays put.
    """
    cfg = cfg or DynamicsConfig()
    powers = grid.powers()
    scale = float(np.abs(powers).max()) if grid.n else 0.0
    theta = dc_power_flow(grid, powers, slack=slack)
    if scale == 0.0:
        return theta

    started = time.perf_counter()
    slack_index = grid.index_of[default_slack(grid) if slack is None else slack]
    keep = np.flatnonzero(np.arange(grid.n) != slack_index)
    tolerance = cfg.newton_tol * scale
    residual = power_flow_residual(grid, theta)
    converged_at = None
    for iteration in range(1, cfg.newton_max_iter + _POLISH_STEPS + 1):
        if converged_at is None and iteration > cfg.newton_max_iter:
            break
        jacobian = build_laplacian(grid, theta).tocsc()[keep][:, keep]
        step = spsolve(jacobian, residual[keep])
        if not np.all(np.isfinite(step)):
            break
        theta[keep] += step
        residual = power_flow_residual(grid, theta)
        error = float(np.abs(residual).max())
        logger.debug("Newton iteration %s: max residual %.3e", iteration, error)
        if not np.isfinite(error):
            break
        if converged_at is None and error < tolerance:
            converged_at = iteration
        if converged_at is not None and iteration >= converged_at + _POLISH_STEPS:
            break

    error = float(np.abs(residual).max())
    if converged_at is None or not error < tolerance:
        raise NumericalError(
            f"no stationary state found: max residual {error:.3e} after "
            f"{cfg.newton_max_iter} Newton iterations (tolerance {tolerance:.3e})"
        )
    logger.info(
        "Stationary state in %s Newton iterations (max residual %.3e) in %.3fs",
        converged_at,
        error,
        time.perf_counter() - started,
    )
    return theta
