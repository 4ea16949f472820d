"""Dense reference implementation, used as an oracle and a benchmark baseline.

Everything here is written from the definitions with explicit loops and
dense arrays.  It does not call into the sparse kernels, so a bug there
cannot hide behind an identical bug here.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError
from .gi_layer import GILayerParams, apply_activation, pool_forward
from .sparse_adjacency import SparseAdjacency


def dense_augmented(adj: SparseAdjacency, lam: float) -> np.ndarray:
    """Dense ``(A + lam*I)|_{V1,V2}`` built entry by entry."""
    n1, n2 = adj.shape
    out = np.zeros((n1, n2), dtype=np.float64)
    pos = 0
    for i in range(n1):
        for _ in range(int(adj.indptr[i + 1] - adj.indptr[i])):
            out[i, int(adj.indices[pos])] = float(adj.data[pos])
            pos += 1
    col_of = {int(g): j for j, g in enumerate(adj.col_keys)}
    for i in range(n1):
        j = col_of.get(int(adj.row_keys[i]))
        if j is not None:
            out[i, j] = out[i, j] + lam
    return out


def assemble_w_tilde(adj: SparseAdjacency, lam: float, params: GILayerParams) -> np.ndarray:
    """Materialize the ``(n1*K, F, n2)`` weight tensor.

    Row ``k*n1 + i`` of filter ``l`` is ``w[k, l, i]`` times row ``i`` of the
    augmented matrix.
    """
    n1, n2 = adj.shape
    K, F, nw = params.weights.shape
    if nw != n1:
        raise ShapeError(f"weights are sized for {nw} nodes, adjacency has {n1} rows")
    if params.bias.shape != (n2, F):
        raise ShapeError(f"bias must be {(n2, F)}, got {params.bias.shape}")
    a_hat = dense_augmented(adj, lam)
    w_tilde = np.zeros((n1 * K, F, n2), dtype=np.float64)
    for l in range(F):
        for k in range(K):
            for i in range(n1):
                w_tilde[k * n1 + i, l, :] = params.weights[k, l, i] * a_hat[i, :]
    return w_tilde


def vertcat(X: np.ndarray) -> np.ndarray:
    """Stack the columns of an ``(n, K)`` matrix: index ``(i, k) -> k*n + i``."""
    n, K = X.shape
    out = np.empty(n * K, dtype=X.dtype)
    for k in range(K):
        out[k * n:(k + 1) * n] = X[:, k]
    return out


def forward_dense(
    w_tilde: np.ndarray,
    X: np.ndarray,
    bias: np.ndarray | None,
    activation: str,
    pool: str | None = None,
) -> np.ndarray:
    """``act(W~^T vertcat(X_m) + B)`` for each batch element, then optional pooling."""
    rows, F, n2 = w_tilde.shape
    X = np.asarray(X)
    if X.ndim != 3 or X.shape[1] * X.shape[2] != rows:
        raise ShapeError(f"input {X.shape} does not match W~ with {rows} rows")
    if bias is not None and bias.shape != (n2, F):
        raise ShapeError(f"bias must be {(n2, F)}, got {bias.shape}")
    M = X.shape[0]
    pre = np.zeros((M, n2, F), dtype=np.float64)
    for m in range(M):
        v = vertcat(X[m])
        for l in range(F):
            pre[m, :, l] = w_tilde[:, l, :].T @ v
    if bias is not None:
        pre = pre + bias
    return pool_forward(pool, apply_activation(activation, pre))


def constrained_dense_equivalence(adj: SparseAdjacency, w: np.ndarray) -> np.ndarray:
    """Fully-connected weights ``W[i, j] = w[i]`` where ``a_ij != 0`` or ``i == j``.

    For an unweighted graph ``W.T @ x`` is the pre-activation of the
    single-feature layer with unit self-loops.
    """
    n = adj.n_rows
    if adj.n_cols != n:
        raise ShapeError(f"needs a square adjacency, got {adj.shape}")
    a = np.zeros((n, n))
    for i, j, v in adj.entries():
        a[i, j] = v
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if a[i, j] != 0 or i == j:
                out[i, j] = w[i]
    return out


def dense_memory_count(n1: int, n2: int, K: int, F: int) -> int:
    """Value slots of a dense layer: the full weight tensor plus the biases."""
    return n1 * K * F * n2 + n2 * F


def sparse_memory_count(nnz: int, n1: int, n2: int, K: int, F: int) -> int:
    """Value slots of a sparse layer: index+value per stored entry, weights, biases."""
    return 2 * nnz + n1 * K * F + n2 * F
