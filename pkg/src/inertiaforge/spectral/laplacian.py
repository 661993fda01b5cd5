from __future__ import annotations

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix, diags

from ..grid.model import GridModel


def build_laplacian(grid: GridModel, theta: np.ndarray | None = None) -> csr_matrix:
    """Weighted grid Laplacian with edge weights B_ij V_i V_j.

    With ``theta`` the weights are multiplied by cos(theta_i - theta_j), which
    is the Jacobian of the AC power flow at that operating point.
    """
    rows, cols, weights = grid.edge_arrays()
    if theta is not None:
        weights = weights * np.cos(theta[rows] - theta[cols])
    n = grid.n
    adjacency = coo_matrix(
        (np.concatenate([weights, weights]), (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
        shape=(n, n),
    ).tocsr()
    degree = np.asarray(adjacency.sum(axis=1)).ravel()
    return (diags(degree) - adjacency).tocsr()


def incidence_matrix(grid: GridModel) -> csr_matrix:
    """Oriented bus-line incidence: +1 at the from bus, -1 at the to bus."""
    rows, cols, _ = grid.edge_arrays()
    n_lines = len(rows)
    lines = np.arange(n_lines)
    return coo_matrix(
        (
            np.concatenate([np.ones(n_lines), -np.ones(n_lines)]),
            (np.concatenate([rows, cols]), np.concatenate([lines, lines])),
        ),
        shape=(grid.n, n_lines),
    ).tocsr()
