"""Sparse (sub)adjacency matrices with global node labels.

A :class:`SparseAdjacency` stores the ``n1 x n2`` block of a graph's
adjacency matrix between an ordered node set ``V1`` (rows) and ``V2``
(columns).  Rows and columns keep the *global* node index they stand for
(``row_keys`` / ``col_keys``), so self-loops can be placed correctly on
submatrices that are not principal.

Execution uses CSR arrays; construction and interchange go through
coordinate triples and the adjacency dictionary format::

    {
        "keys": [(i, j), ...],          # local coordinates of stored entries
        "values": [a_ij, ...],
        "rowkeys_custom": [...] | None, # global labels of V1
        "colkeys_custom": [...] | None, # global labels of V2
        "keys_custom": [(gi, gj), ...] | None,
    }
"""

from __future__ import annotations

import warnings
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import DuplicateEntry, InvalidValue, MalformedDict, SelfLoopWarning, ShapeError

__all__ = [
    "SparseAdjacency",
    "from_edge_list",
    "from_dict",
    "sparse2dict",
    "add_scaled_selfloops",
    "transpose_apply",
    "as_adjacency",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SparseAdjacency:
    """Immutable CSR matrix whose rows/columns carry global node labels.

    Use :meth:`from_coo` (or the module-level constructors) rather than
    calling the initializer with raw CSR arrays.
    """

    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    shape: tuple[int, int]
    row_keys: np.ndarray
    col_keys: np.ndarray

    @classmethod
    def from_coo(
        cls,
        rows: Sequence[int] | np.ndarray,
        cols: Sequence[int] | np.ndarray,
        values: Sequence[float] | np.ndarray,
        shape: tuple[int, int],
        row_keys: Sequence[int] | np.ndarray | None = None,
        col_keys: Sequence[int] | np.ndarray | None = None,
        dtype: Any = np.float64,
    ) -> SparseAdjacency:
        """Build from local coordinate triples.

        Zero values are kept as structural entries.  Duplicate positions
        raise :class:`DuplicateEntry`.
        """
        n1, n2 = int(shape[0]), int(shape[1])
        if n1 < 0 or n2 < 0:
            raise ShapeError(f"negative shape {shape}")
        rows = np.asarray(rows, dtype=np.int64).reshape(-1)
        cols = np.asarray(cols, dtype=np.int64).reshape(-1)
        vals = np.asarray(values, dtype=dtype).reshape(-1)
        if not (len(rows) == len(cols) == len(vals)):
            raise ShapeError("rows, cols and values must have equal length")
        if len(vals) and not np.all(np.isfinite(vals)):
            raise InvalidValue("stored values must be finite")
        if len(rows):
            if rows.min() < 0 or rows.max() >= n1:
                raise ShapeError(f"row index out of range for {n1} rows")
            if cols.min() < 0 or cols.max() >= n2:
                raise ShapeError(f"column index out of range for {n2} columns")

        rk = np.arange(n1, dtype=np.int64) if row_keys is None else np.asarray(row_keys, dtype=np.int64)
        ck = np.arange(n2, dtype=np.int64) if col_keys is None else np.asarray(col_keys, dtype=np.int64)
        if rk.shape != (n1,) or ck.shape != (n2,):
            raise ShapeError("row_keys/col_keys length must match the shape")
        if np.any(np.diff(rk) <= 0) or np.any(np.diff(ck) <= 0):
            raise ShapeError("row_keys and col_keys must be strictly ascending")

        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if len(rows) > 1:
            dup = (rows[1:] == rows[:-1]) & (cols[1:] == cols[:-1])
            if dup.any():
                k = int(np.argmax(dup))
                raise DuplicateEntry(f"duplicate entry at ({rows[k]}, {cols[k]})")

        indptr = np.zeros(n1 + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n1), out=indptr[1:])
        return cls(
            _frozen(indptr),
            _frozen(np.ascontiguousarray(cols)),
            _frozen(np.ascontiguousarray(vals)),
            (n1, n2),
            _frozen(rk),
            _frozen(ck),
        )

    @property
    def n_rows(self) -> int:
        return self.shape[0]

    @property
    def n_cols(self) -> int:
        return self.shape[1]

    @property
    def nnz(self) -> int:
        return int(self.data.shape[0])

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    def row_indices(self) -> np.ndarray:
        """Local row index of every stored entry, in CSR order."""
        return np.repeat(np.arange(self.n_rows, dtype=np.int64), np.diff(self.indptr))

    def entries(self) -> list[tuple[int, int, float]]:
        """Stored entries as ``(row, col, value)`` in CSR order."""
        return [
            (int(i), int(j), float(v))
            for i, j, v in zip(self.row_indices(), self.indices, self.data)
        ]

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=self.data.dtype)
        out[self.row_indices(), self.indices] = self.data
        return out

    def has_default_keys(self) -> bool:
        return bool(
            np.array_equal(self.row_keys, np.arange(self.n_rows))
            and np.array_equal(self.col_keys, np.arange(self.n_cols))
        )

    def astype(self, dtype: Any) -> SparseAdjacency:
        return SparseAdjacency.from_coo(
            self.row_indices(), self.indices, self.data.astype(dtype), self.shape,
            self.row_keys, self.col_keys, dtype=dtype,
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseAdjacency):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.data, other.data)
            and np.array_equal(self.row_keys, other.row_keys)
            and np.array_equal(self.col_keys, other.col_keys)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"SparseAdjacency(shape={self.shape}, nnz={self.nnz})"


def _check_subset(subset: Iterable[int] | None, name: str) -> np.ndarray | None:
    if subset is None:
        return None
    arr = np.asarray(sorted(int(s) for s in subset), dtype=np.int64)
    if len(arr) and arr[0] < 0:
        raise InvalidValue(f"{name} contains a negative node index")
    if np.any(np.diff(arr) == 0):
        raise InvalidValue(f"{name} contains duplicate nodes")
    return arr


def from_edge_list(
    edges: Iterable[tuple[int, int] | tuple[int, int, float]],
    row_subset: Iterable[int] | None = None,
    col_subset: Iterable[int] | None = None,
    n_nodes: int | None = None,
) -> SparseAdjacency:
    """Restrict a global edge list to the block ``A[row_subset, col_subset]``.

    Edges are ``(i, j)`` or ``(i, j, value)`` over global node indices;
    missing values default to 1.0 and zero-valued edges are dropped.  With
    no subset, all nodes ``0..n_nodes-1`` are used (``n_nodes`` defaults to
    one past the largest endpoint).  Repeated edges must agree in value.
    """
    merged: dict[tuple[int, int], float] = {}
    for e in edges:
        if len(e) == 2:
            i, j = e  # type: ignore[misc]
            v = 1.0
        else:
            i, j, v = e  # type: ignore[misc]
        i, j, v = int(i), int(j), float(v)
        if i < 0 or j < 0:
            raise InvalidValue(f"negative node index in edge ({i}, {j})")
        if not np.isfinite(v):
            raise InvalidValue(f"non-finite value on edge ({i}, {j})")
        prev = merged.get((i, j))
        if prev is not None and prev != v:
            raise DuplicateEntry(f"edge ({i}, {j}) given values {prev} and {v}")
        merged[(i, j)] = v

    merged = {k: v for k, v in merged.items() if v != 0.0}
    loops = [k for k in merged if k[0] == k[1]]
    if loops:
        warnings.warn(
            f"adjacency has {len(loops)} nonzero diagonal entries (first at node {loops[0][0]});"
            " they are summed with the self-loop value",
            SelfLoopWarning,
            stacklevel=2,
        )

    if n_nodes is None:
        n_nodes = 1 + max((max(i, j) for i, j in merged), default=-1)
    rk = _check_subset(row_subset, "row_subset")
    ck = _check_subset(col_subset, "col_subset")
    if rk is None:
        rk = np.arange(n_nodes, dtype=np.int64)
    if ck is None:
        ck = np.arange(n_nodes, dtype=np.int64)

    rpos = {int(g): p for p, g in enumerate(rk)}
    cpos = {int(g): p for p, g in enumerate(ck)}
    rows, cols, vals = [], [], []
    for (i, j), v in merged.items():
        if i in rpos and j in cpos:
            rows.append(rpos[i])
            cols.append(cpos[j])
            vals.append(v)
    return SparseAdjacency.from_coo(rows, cols, vals, (len(rk), len(ck)), rk, ck)


def sparse2dict(m: SparseAdjacency) -> dict[str, Any]:
    """Export to the adjacency dictionary format, entries in CSR order.

    Custom key fields are emitted only when the labels are not the default
    ``0..n-1`` or when the shape could not be recovered from ``keys`` alone.
    """
    rows = m.row_indices()
    keys = [(int(i), int(j)) for i, j in zip(rows, m.indices)]
    values = [float(v) for v in m.data]
    inferred_rows = 1 + int(rows.max()) if len(rows) else 0
    inferred_cols = 1 + int(m.indices.max()) if len(rows) else 0
    custom = not m.has_default_keys() or (inferred_rows, inferred_cols) != m.shape
    d: dict[str, Any] = {
        "keys": keys,
        "values": values,
        "rowkeys_custom": None,
        "colkeys_custom": None,
        "keys_custom": None,
    }
    if custom:
        rk = [int(g) for g in m.row_keys]
        ck = [int(g) for g in m.col_keys]
        d["rowkeys_custom"] = rk
        d["colkeys_custom"] = ck
        d["keys_custom"] = [(rk[i], ck[j]) for i, j in keys]
    return d


def from_dict(d: Mapping[str, Any]) -> SparseAdjacency:
    """Inverse of :func:`sparse2dict`."""
    try:
        keys = [tuple(int(x) for x in k) for k in d["keys"]]
        values = [float(v) for v in d["values"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedDict(f"cannot read keys/values: {exc}") from exc
    if len(keys) != len(values):
        raise MalformedDict(f"{len(keys)} keys but {len(values)} values")
    if any(len(k) != 2 for k in keys):
        raise MalformedDict("every key must be an (i, j) pair")
    if any(i < 0 or j < 0 for i, j in keys):
        raise MalformedDict("negative local index in keys")

    rk = d.get("rowkeys_custom")
    ck = d.get("colkeys_custom")
    kc = d.get("keys_custom")
    rows = [k[0] for k in keys]
    cols = [k[1] for k in keys]
    n1 = len(rk) if rk is not None else 1 + max(rows, default=-1)
    n2 = len(ck) if ck is not None else 1 + max(cols, default=-1)
    rk_arr = np.arange(n1) if rk is None else np.asarray([int(g) for g in rk], dtype=np.int64)
    ck_arr = np.arange(n2) if ck is None else np.asarray([int(g) for g in ck], dtype=np.int64)
    if any(i >= n1 for i in rows) or any(j >= n2 for j in cols):
        raise MalformedDict("key index exceeds the number of row/column keys")

    if kc is not None:
        if len(kc) != len(keys):
            raise MalformedDict(f"{len(keys)} keys but {len(kc)} keys_custom")
        for (i, j), gk in zip(keys, kc):
            if tuple(int(x) for x in gk) != (int(rk_arr[i]), int(ck_arr[j])):
                raise MalformedDict(f"keys_custom {tuple(gk)} does not translate key ({i}, {j})")

    diag = [(i, j) for (i, j), v in zip(keys, values) if rk_arr[i] == ck_arr[j] and v != 0.0]
    if diag:
        warnings.warn(
            f"adjacency has {len(diag)} nonzero diagonal entries; they are summed with the"
            " self-loop value",
            SelfLoopWarning,
            stacklevel=2,
        )
    try:
        return SparseAdjacency.from_coo(rows, cols, values, (n1, n2), rk_arr, ck_arr)
    except ShapeError as exc:
        raise MalformedDict(str(exc)) from exc


def as_adjacency(
    adj_mat: Any,
    rowkeys: Sequence[int] | None = None,
    colkeys: Sequence[int] | None = None,
) -> SparseAdjacency:
    """Coerce a dictionary, a ``SparseAdjacency`` or any ``tocoo()`` matrix.

    ``rowkeys``/``colkeys`` label a bare matrix's rows and columns (sorted
    ascending); they are ignored when ``adj_mat`` is a dictionary.
    """
    if isinstance(adj_mat, Mapping) and not hasattr(adj_mat, "tocoo"):
        return from_dict(adj_mat)
    if isinstance(adj_mat, SparseAdjacency):
        if rowkeys is None and colkeys is None:
            return adj_mat
        m = adj_mat
        return SparseAdjacency.from_coo(
            m.row_indices(), m.indices, m.data, m.shape,
            m.row_keys if rowkeys is None else sorted(rowkeys),
            m.col_keys if colkeys is None else sorted(colkeys),
        )
    if hasattr(adj_mat, "tocoo"):
        coo = adj_mat.tocoo()
        return SparseAdjacency.from_coo(
            coo.row, coo.col, coo.data, coo.shape,
            None if rowkeys is None else sorted(rowkeys),
            None if colkeys is None else sorted(colkeys),
        )
    raise TypeError(f"cannot interpret {type(adj_mat).__name__} as an adjacency matrix")


def add_scaled_selfloops(m: SparseAdjacency, lam: float) -> SparseAdjacency:
    """Return ``(A + lam*I)`` restricted to the block's rows and columns.

    The identity contributes at local ``(i, j)`` exactly when
    ``row_keys[i] == col_keys[j]``.  Those positions are always stored, even
    if the sum is zero, so the sparsity pattern does not depend on ``lam``.
    """
    lam = float(lam)
    if not np.isfinite(lam):
        raise InvalidValue(f"self-loop value must be finite, got {lam}")
    entries: dict[tuple[int, int], Any] = {
        (int(i), int(j)): v for i, j, v in zip(m.row_indices(), m.indices, m.data)
    }
    pos = np.searchsorted(m.col_keys, m.row_keys)
    for i, j in enumerate(pos):
        i, j = int(i), int(j)
        if j >= m.n_cols or m.col_keys[j] != m.row_keys[i]:
            continue
        prev = entries.get((i, j))
        entries[(i, j)] = m.data.dtype.type(lam) if prev is None else prev + m.data.dtype.type(lam)
    if entries:
        rows, cols = zip(*entries)
        vals = np.fromiter(entries.values(), dtype=m.data.dtype, count=len(entries))
    else:
        rows, cols, vals = (), (), np.zeros(0, dtype=m.data.dtype)
    return SparseAdjacency.from_coo(rows, cols, vals, m.shape, m.row_keys, m.col_keys, dtype=m.data.dtype)


def transpose_apply(
    m: SparseAdjacency,
    scale: np.ndarray | None,
    x: np.ndarray,
) -> np.ndarray:
    """Compute ``(diag(scale) @ M).T @ x`` touching only stored entries.

    ``x`` has shape ``(n_rows, C)`` (a 1-D vector is treated as ``C = 1``
    and a 1-D result is returned).  ``scale=None`` means no row scaling.
    Entries are accumulated per output row in CSR order.
    """
    x = np.asarray(x)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] != m.n_rows:
        raise ShapeError(f"x must have {m.n_rows} rows, got shape {x.shape}")
    if scale is not None:
        scale = np.asarray(scale)
        if scale.shape != (m.n_rows,):
            raise ShapeError(f"scale must have length {m.n_rows}, got shape {scale.shape}")
        x = scale[:, None] * x

    n_out = x.shape[1]
    dtype = np.result_type(m.data, x)
    y = np.zeros((m.n_cols, n_out), dtype=dtype)
    if m.nnz:
        contrib = m.data[:, None] * x[m.row_indices()]
        for c in range(n_out):
            y[:, c] = np.bincount(m.indices, weights=contrib[:, c], minlength=m.n_cols)
    return y[:, 0] if squeeze else y


def apply(m: SparseAdjacency, x: np.ndarray) -> np.ndarray:
    """Compute ``M @ x`` for ``x`` of shape ``(n_cols, C)``; ``C`` may be absent."""
    x = np.asarray(x)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] != m.n_cols:
        raise ShapeError(f"x must have {m.n_cols} rows, got shape {x.shape}")
    rows = m.row_indices()
    dtype = np.result_type(m.data, x)
    y = np.zeros((m.n_rows, x.shape[1]), dtype=dtype)
    if m.nnz:
        contrib = m.data[:, None] * x[m.indices]
        for c in range(x.shape[1]):
            y[:, c] = np.bincount(rows, weights=contrib[:, c], minlength=m.n_rows)
    return y[:, 0] if squeeze else y
