"""Delimited numeric text for training data, inputs and predictions.

One sample per line, values separated by whitespace or commas, ``#``
comments.  A sample's node-by-feature matrix is flattened node-major
(``value[i*C + c]`` is node ``i``, feature ``c``).  Training files hold the
flattened input followed by the flattened target on the same line.
"""

from __future__ import annotations

import os
import re

import numpy as np

from .errors import GraphFormatError, ShapeError

_SPLIT = re.compile(r"[,\s]+")


def read_rows(path: str | os.PathLike) -> np.ndarray:
    """Parse a file into a 2-D float array; ragged rows are an error."""
    rows: list[list[float]] = []
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.split("#", 1)[0].strip()
            if not s:
                continue
            try:
                vals = [float(t) for t in _SPLIT.split(s) if t]
            except ValueError:
                raise GraphFormatError(f"{path}:{lineno}: non-numeric value in '{s[:40]}'") from None
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise ShapeError(f"{path}:{lineno}: row has {len(vals)} values, previous rows have {width}")
            rows.append(vals)
    return np.asarray(rows, dtype=np.float64).reshape(len(rows), width or 0)


def split_training_rows(
    data: np.ndarray, n_in: int, k_in: int, n_out: int, f_out: int, path: str = "data"
) -> tuple[np.ndarray, np.ndarray]:
    want = n_in * k_in + n_out * f_out
    if data.shape[1] != want:
        raise ShapeError(
            f"{path}: rows have {data.shape[1]} values, expected {want}"
            f" (input nodes {n_in} x features {k_in} + output nodes {n_out} x filters {f_out})"
        )
    M = data.shape[0]
    X = data[:, : n_in * k_in].reshape(M, n_in, k_in)
    Y = data[:, n_in * k_in:].reshape(M, n_out, f_out)
    return X, Y


def reshape_inputs(data: np.ndarray, n_in: int, k_in: int, path: str = "input") -> np.ndarray:
    if data.shape[1] != n_in * k_in:
        raise ShapeError(
            f"{path}: rows have {data.shape[1]} values, expected {n_in * k_in}"
            f" (input nodes {n_in} x features {k_in})"
        )
    return data.reshape(data.shape[0], n_in, k_in)


def write_rows(path: str | os.PathLike, batch: np.ndarray, header: str | None = None) -> None:
    """Write a ``(M, n, C)`` batch one sample per line with round-trip exact floats."""
    batch = np.asarray(batch)
    flat = batch.reshape(batch.shape[0], -1)
    with open(path, "w") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for row in flat:
            fh.write("\t".join(repr(float(v)) for v in row) + "\n")
