"""Readers and writers for graph files.

Two formats are understood:

* Matrix Market coordinate files (``real``/``integer``/``pattern`` fields,
  ``general``/``symmetric`` symmetry).  Indices are 1-based on disk.
* Plain edge lists: one ``i j [value]`` per line (tab or space separated,
  0-based), ``#`` starts a comment, the value defaults to 1.0.
"""

from __future__ import annotations

import os
from pathlib import Path

from .errors import GraphFormatError

Edge = tuple[int, int, float]


def read_matrix_market(path: str | os.PathLike) -> tuple[list[Edge], int]:
    """Return ``(edges, n_nodes)`` with 0-based indices.

    ``n_nodes`` is ``max(rows, cols)`` from the size line.
    """
    path = Path(path)
    with path.open() as fh:
        header = fh.readline()
        tokens = header.strip().lower().split()
        if len(tokens) != 5 or tokens[0] != "%%matrixmarket":
            raise GraphFormatError(f"{path}:1: missing '%%MatrixMarket' banner")
        obj, fmt, field, symmetry = tokens[1:]
        if obj != "matrix" or fmt != "coordinate":
            raise GraphFormatError(f"{path}:1: only 'matrix coordinate' files are supported")
        if field not in ("real", "integer", "pattern"):
            raise GraphFormatError(f"{path}:1: unsupported field '{field}'")
        if symmetry not in ("general", "symmetric"):
            raise GraphFormatError(f"{path}:1: unsupported symmetry '{symmetry}'")

        lineno = 1
        size = None
        for line in fh:
            lineno += 1
            s = line.strip()
            if not s or s.startswith("%"):
                continue
            size = s.split()
            break
        if size is None or len(size) != 3:
            raise GraphFormatError(f"{path}:{lineno}: expected 'rows cols nnz' size line")
        try:
            n_rows, n_cols, nnz = (int(t) for t in size)
        except ValueError:
            raise GraphFormatError(f"{path}:{lineno}: size line is not integral") from None

        edges: list[Edge] = []
        want = 2 if field == "pattern" else 3
        for line in fh:
            lineno += 1
            s = line.strip()
            if not s or s.startswith("%"):
                continue
            parts = s.split()
            if len(parts) != want:
                raise GraphFormatError(f"{path}:{lineno}: expected {want} fields, got {len(parts)}")
            try:
                i, j = int(parts[0]) - 1, int(parts[1]) - 1
                v = 1.0 if field == "pattern" else float(parts[2])
            except ValueError:
                raise GraphFormatError(f"{path}:{lineno}: cannot parse entry '{s}'") from None
            if not (0 <= i < n_rows and 0 <= j < n_cols):
                raise GraphFormatError(f"{path}:{lineno}: index out of range")
            edges.append((i, j, v))
            if symmetry == "symmetric" and i != j:
                edges.append((j, i, v))
        stored = sum(1 for i, j, _ in edges if symmetry == "general" or i >= j)
        if stored != nnz:
            raise GraphFormatError(f"{path}: header declares {nnz} entries, found {stored}")
    return edges, max(n_rows, n_cols)


def read_edge_list(path: str | os.PathLike) -> tuple[list[Edge], int]:
    """Return ``(edges, n_nodes)``; ``n_nodes`` is one past the largest index."""
    path = Path(path)
    edges: list[Edge] = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.split("#", 1)[0].strip()
            if not s:
                continue
            parts = s.split()
            if len(parts) not in (2, 3):
                raise GraphFormatError(f"{path}:{lineno}: expected 'i j [value]', got '{s}'")
            try:
                i, j = int(parts[0]), int(parts[1])
                v = float(parts[2]) if len(parts) == 3 else 1.0
            except ValueError:
                raise GraphFormatError(f"{path}:{lineno}: cannot parse '{s}'") from None
            if i < 0 or j < 0:
                raise GraphFormatError(f"{path}:{lineno}: negative node index")
            edges.append((i, j, v))
    n_nodes = 1 + max((max(i, j) for i, j, _ in edges), default=-1)
    return edges, n_nodes


def load_graph(path: str | os.PathLike) -> tuple[list[Edge], int]:
    """Dispatch on the first line: Matrix Market banner or edge list."""
    with open(path) as fh:
        first = fh.readline()
    if first.lower().startswith("%%matrixmarket"):
        return read_matrix_market(path)
    return read_edge_list(path)


def write_edge_list(path: str | os.PathLike, edges: list[Edge], comment: str | None = None) -> None:
    with open(path, "w") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        for i, j, v in edges:
            fh.write(f"{i}\t{j}\t{float(v)!r}\n")


def write_matrix_market(path: str | os.PathLike, edges: list[Edge], n_nodes: int) -> None:
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        fh.write(f"{n_nodes} {n_nodes} {len(edges)}\n")
        for i, j, v in edges:
            fh.write(f"{i + 1} {j + 1} {float(v)!r}\n")
