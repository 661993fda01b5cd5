from __future__ import annotations

import logging
from typing import Callable, Protocol

import numpy as np

from ..config import DynamicsConfig
from ..dispatch.power_flow import dc_power_flow
from ..grid.model import GridModel
from ..spectral.laplacian import build_laplacian, incidence_matrix
from .steady_state import steady_state

logger = logging.getLogger(__name__)

PowerFunction = Callable[[np.ndarray], np.ndarray]


class DynamicsEngine(Protocol):
    name: str

    def power_function(self, grid: GridModel) -> PowerFunction:
        ...

    def initial_state(self, grid: GridModel, cfg: DynamicsConfig) -> np.ndarray:
        ...


class NonlinearEngine:
    """Full lossless AC coupling, sin of angle differences."""

    name = "nonlinear"

    def power_function(self, grid: GridModel) -> PowerFunction:
        incidence = incidence_matrix(grid)
        transpose = incidence.T.tocsr()
        _, _, weights = grid.edge_arrays()

        def network_power(theta: np.ndarray) -> np.ndarray:
            return incidence @ (weights * np.sin(transpose @ theta))

        return network_power

    def initial_state(self, grid: GridModel, cfg: DynamicsConfig) -> np.ndarray:
        return steady_state(grid, cfg)


class LinearEngine:
    """Small-angle coupling L theta, for validation against the spectral response."""

    name = "linear"

    def power_function(self, grid: GridModel) -> PowerFunction:
        laplacian = build_laplacian(grid)

        def network_power(theta: np.ndarray) -> np.ndarray:
            return laplacian @ theta

        return network_power

    def initial_state(self, grid: GridModel, cfg: DynamicsConfig) -> np.ndarray:
        return dc_power_flow(grid, grid.powers())


_ENGINES: dict[str, DynamicsEngine] = {
    "nonlinear": NonlinearEngine(),
    "linear": LinearEngine(),
}


def get_dynamics_engine(name: str) -> DynamicsEngine:
    key = (name or "").strip().lower()
    engine = _ENGINES.get(key)
    if engine is None:
        supported = ", ".join(sorted(_ENGINES.keys()))
        raise ValueError(f"Unsupported dynamics engine '{name}'. Supported: {supported}")
    return engine
