from __future__ import annotations

from dataclasses import dataclass
import logging

import numpy as np
import pandas as pd

from ..errors import GridInputError, OverdampedModeError
from ..grid.model import GridModel
from .modes import SpectralModes

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HomogeneousParams:
    m: float
    d: float

    def __post_init__(self) -> None:
        if self.m <= 0 or self.d <= 0:
            raise GridInputError("homogeneous inertia and damping must be > 0")

    @property
    def gamma(self) -> float:
        return self.d / self.m

    @staticmethod
    def from_grid(grid: GridModel) -> "HomogeneousParams":
        return HomogeneousParams(m=float(grid.inertias().mean()), d=float(grid.dampings().mean()))


@dataclass(frozen=True)
class ModeTimescale:
    alpha: int
    eigenvalue: float
    frequency: float
    product: float
    overdamped: bool = False


def mode_frequencies(modes: SpectralModes, params: HomogeneousParams) -> np.ndarray:
    """Damped angular frequencies sqrt(lambda/m - gamma^2/4) of modes 2..k."""
    radicand = modes.eigenvalues[1:] / params.m - params.gamma**2 / 4.0
    for offset, value in enumerate(radicand):
        if value <= 0:
            raise OverdampedModeError(offset + 2, float(value))
    return np.sqrt(radicand)


def analytic_delta_omega(
    modes: SpectralModes,
    params: HomogeneousParams,
    fault_bus: int,
    delta_p: float,
    t: float | np.ndarray,
) -> np.ndarray:
    """Linear-response frequency deviation after losing ``delta_p`` at ``fault_bus``.

    Returns shape (N,) for scalar ``t`` or (len(t), N) for an array. A power
    loss pulls frequencies down, so the result is negative for ``delta_p > 0``:
    it is -1 times the usual textbook spectral sum, which is written with a
    positive ``delta_p`` prefactor, and the uniform mode tends to
    -delta_p / sum(d) rather than +delta_p / sum(d). The sum runs over the
    modes held in ``modes``; pass k = N for the exact linear response.
    """
    times = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(times < 0):
        raise ValueError("t must be >= 0")
    b = _bus_index(modes, fault_bus)
    omega = mode_frequencies(modes, params)
    u = modes.eigenvectors
    gamma = params.gamma

    coupling = u[:, 1:] * u[b, 1:]
    oscillation = np.exp(-gamma * times / 2.0)[:, None] * np.sin(np.outer(times, omega)) / omega
    result = -(delta_p / params.m) * oscillation @ coupling.T
    drift = -delta_p * u[:, 0] * u[b, 0] / params.d
    result += np.outer(-np.expm1(-gamma * times), drift)
    return result[0] if np.ndim(t) == 0 else result


def analytic_rocof(
    modes: SpectralModes,
    params: HomogeneousParams,
    fault_bus: int,
    delta_p: float,
    t: float | np.ndarray,
    dt: float,
) -> np.ndarray:
    """RoCoF in Hz/s as the forward difference of ``analytic_delta_omega``."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    later = analytic_delta_omega(modes, params, fault_bus, delta_p, np.asarray(t, dtype=float) + dt)
    now = analytic_delta_omega(modes, params, fault_bus, delta_p, t)
    return (later - now) / (2.0 * np.pi * dt)


def analytic_rocof_closed_form(
    modes: SpectralModes,
    params: HomogeneousParams,
    fault_bus: int,
    delta_p: float,
    t: float | np.ndarray,
    dt: float,
) -> np.ndarray:
    """RoCoF in Hz/s with the window difference expanded per mode.

    Algebraically equal to ``analytic_rocof``; kept separate as a cross-check.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    times = np.atleast_1d(np.asarray(t, dtype=float))
    b = _bus_index(modes, fault_bus)
    omega = mode_frequencies(modes, params)
    u = modes.eigenvectors
    gamma = params.gamma

    phase = np.outer(times, omega)
    decay = np.exp(-gamma * times / 2.0)[:, None]
    window = np.exp(-gamma * dt / 2.0)
    bracket = window * (np.sin(phase) * np.cos(omega * dt) + np.cos(phase) * np.sin(omega * dt)) - np.sin(phase)
    oscillatory = -(delta_p / params.m) * (decay * bracket / omega) @ (u[:, 1:] * u[b, 1:]).T

    uniform = -delta_p * u[:, 0] * u[b, 0] / params.d
    uniform_term = np.outer(np.exp(-gamma * times) * -np.expm1(-gamma * dt), uniform)
    result = (oscillatory + uniform_term) / (2.0 * np.pi * dt)
    return result[0] if np.ndim(t) == 0 else result


def mode_timescale_report(
    modes: SpectralModes,
    params: HomogeneousParams,
    dt: float,
    *,
    strict: bool = True,
) -> list[ModeTimescale]:
    """sqrt(lambda/m - gamma^2/4) * dt for modes 2..k, ascending.

    With ``strict=False`` overdamped modes are kept as rows flagged
    ``overdamped`` with NaN frequency, listed after the oscillating ones.
    """
    if strict:
        omega = mode_frequencies(modes, params)
        report = [
            ModeTimescale(
                alpha=a + 2,
                eigenvalue=float(modes.eigenvalues[a + 1]),
                frequency=float(w),
                product=float(w * dt),
            )
            for a, w in enumerate(omega)
        ]
    else:
        radicand = modes.eigenvalues[1:] / params.m - params.gamma**2 / 4.0
        report = []
        for a, value in enumerate(radicand):
            overdamped = value <= 0
            w = float("nan") if overdamped else float(np.sqrt(value))
            report.append(
                ModeTimescale(
                    alpha=a + 2,
                    eigenvalue=float(modes.eigenvalues[a + 1]),
                    frequency=w,
                    product=w * dt,
                    overdamped=bool(overdamped),
                )
            )
    return sorted(report, key=lambda row: (row.overdamped, 0.0 if row.overdamped else row.product, row.alpha))


def regional_mode_mass(modes: SpectralModes, grid: GridModel) -> pd.DataFrame:
    """Sum of u_alpha^2 over the buses of each region; one column per mode."""
    if len(grid.buses) != modes.n:
        raise GridInputError("modes and grid disagree on the number of buses")
    frame = pd.DataFrame(
        modes.eigenvectors**2,
        columns=[f"mode_{a}" for a in range(1, modes.k + 1)],
    )
    frame["region"] = [b.region or "" for b in grid.buses]
    return frame.groupby("region", sort=True).sum()


def _bus_index(modes: SpectralModes, bus_id: int) -> int:
    matches = np.flatnonzero(modes.bus_ids == bus_id)
    if matches.size == 0:
        raise GridInputError(f"unknown bus id {bus_id}")
    return int(matches[0])
