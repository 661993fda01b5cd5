from __future__ import annotations

from dataclasses import dataclass
import logging
import time

import numpy as np
from scipy.linalg import eigh
from scipy.sparse import csr_matrix
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigsh
from scipy.sparse.linalg import norm as sparse_norm

from ..errors import NumericalError

logger = logging.getLogger(__name__)

DENSE_LIMIT = 2000
RESIDUAL_TOLERANCE = 1e-8
DEGENERACY_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class SpectralModes:
    """The k smallest Laplacian eigenpairs.

    ``eigenvectors[:, a]`` belongs to ``eigenvalues[a]``; mode numbers used by
    the accessors are 1-based so mode 2 is the Fiedler mode.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    bus_ids: np.ndarray

    @property
    def n(self) -> int:
        return self.eigenvectors.shape[0]

    @property
    def k(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def fiedler_value(self) -> float:
        return float(self.eigenvalues[1])

    @property
    def fiedler_vector(self) -> np.ndarray:
        return self.eigenvectors[:, 1]

    def mode(self, alpha: int) -> np.ndarray:
        if not 1 <= alpha <= self.k:
            raise ValueError(f"mode {alpha} outside 1..{self.k}")
        return self.eigenvectors[:, alpha - 1]

    def mode_weight(self, alpha: int) -> np.ndarray:
        return self.mode(alpha) ** 2

    def fiedler_group(self) -> list[int]:
        """Mode numbers sharing the Fiedler eigenvalue (more than one on symmetric graphs)."""
        lam2 = self.eigenvalues[1]
        tol = DEGENERACY_RTOL * max(abs(lam2), 1e-300)
        return [a + 1 for a in range(1, self.k) if abs(self.eigenvalues[a] - lam2) <= tol]

    def fiedler_weight(self) -> np.ndarray:
        """u_2^2 per bus, summed over a degenerate Fiedler eigenspace."""
        group = self.fiedler_group()
        if len(group) > 1:
            logger.debug("Fiedler eigenvalue is %s-fold degenerate", len(group))
        return sum(self.mode_weight(a) for a in group)

    def weight_by_bus(self, weights: np.ndarray | None = None) -> dict[int, float]:
        values = self.fiedler_weight() if weights is None else weights
        return {int(b): float(v) for b, v in zip(self.bus_ids, values)}


def slow_modes(L: csr_matrix, k: int, bus_ids: np.ndarray | None = None) -> SpectralModes:
    n = L.shape[0]
    if not 2 <= k <= n:
        raise ValueError(f"k must satisfy 2 <= k <= N, got k={k}, N={n}")
    started = time.perf_counter()
    if n <= DENSE_LIMIT:
        values, vectors = _dense(L, k)
        method = "dense"
    else:
        try:
            values, vectors = _sparse(L, k)
            method = "shift-invert"
        except (ArpackNoConvergence, ArpackError) as exc:
            logger.warning("Iterative eigen-solver failed (%s); falling back to dense solve", exc)
            values, vectors = _dense(L, k)
            method = "dense"

    order = np.argsort(values)
    values = values[order]
    vectors = vectors[:, order]
    _check_residual(L, values, vectors)
    vectors = _fix_signs(vectors)
    logger.info("Computed %s slow modes (%s, N=%s) in %.3fs", k, method, n, time.perf_counter() - started)
    ids = np.arange(1, n + 1) if bus_ids is None else np.asarray(bus_ids)
    return SpectralModes(eigenvalues=values, eigenvectors=vectors, bus_ids=ids)


def fiedler(L: csr_matrix) -> tuple[float, np.ndarray]:
    modes = slow_modes(L, 2)
    return modes.fiedler_value, modes.fiedler_vector


def _dense(L: csr_matrix, k: int) -> tuple[np.ndarray, np.ndarray]:
    return eigh(L.toarray(), subset_by_index=[0, k - 1])


def _sparse(L: csr_matrix, k: int) -> tuple[np.ndarray, np.ndarray]:
    # L is singular; shift just below zero so the factorisation exists
    sigma = -1e-6 * float(L.diagonal().max())
    return eigsh(L.tocsc(), k=k, sigma=sigma, which="LM", tol=1e-12)


def _check_residual(L: csr_matrix, values: np.ndarray, vectors: np.ndarray) -> None:
    scale = float(sparse_norm(L))
    residual = np.linalg.norm(L @ vectors - vectors * values, axis=0)
    worst = int(np.argmax(residual))
    if residual[worst] >= RESIDUAL_TOLERANCE * max(scale, 1e-300):
        raise NumericalError(
            f"eigenpair {worst + 1} residual {residual[worst]:.3e} exceeds "
            f"{RESIDUAL_TOLERANCE:g} * ||L|| = {RESIDUAL_TOLERANCE * scale:.3e} "
            f"(lambda={values[worst]:.6g})"
        )


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    fixed = vectors.copy()
    for a in range(fixed.shape[1]):
        column = fixed[:, a]
        significant = np.flatnonzero(np.abs(column) > 1e-8 * np.abs(column).max())
        if significant.size and column[significant[0]] < 0:
            fixed[:, a] = -column
    return fixed
