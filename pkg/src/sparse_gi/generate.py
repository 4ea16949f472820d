"""Seeded random graphs and layer instances."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gi_layer import ACTIVATIONS, GILayer, GILayerConfig, GILayerParams
from .sparse_adjacency import SparseAdjacency, from_edge_list


def erdos_renyi_edges(
    n: int,
    p: float,
    rng: np.random.Generator | int | None = None,
    symmetric: bool = False,
    weighted: bool = False,
) -> list[tuple[int, int, float]]:
    """Sample G(n, p) without self-loops.

    Directed by default: each ordered pair ``i != j`` is an edge with
    probability ``p``.  With ``symmetric=True`` each unordered pair is drawn
    once and mirrored.  Weighted edges get values uniform in ``[0.5, 1.5)``.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")
    if n < 0:
        raise ValueError("n must be non-negative")
    rng = np.random.default_rng(rng)
    mask = rng.random((n, n)) < p
    np.fill_diagonal(mask, False)
    if symmetric:
        mask = np.triu(mask, 1)
    vals = rng.uniform(0.5, 1.5, size=(n, n)) if weighted else np.ones((n, n))
    if symmetric:
        vals = np.triu(vals, 1)
        vals = vals + vals.T
        mask = mask | mask.T
    ii, jj = np.nonzero(mask)
    return [(int(i), int(j), float(vals[i, j])) for i, j in zip(ii, jj)]


def random_subset(rng: np.random.Generator, n: int, min_size: int = 1) -> list[int]:
    size = int(rng.integers(min_size, n + 1))
    return sorted(int(v) for v in rng.choice(n, size=size, replace=False))


@dataclass
class LayerInstance:
    """A random layer with random parameters and a matching input batch."""

    n_nodes: int
    edges: list[tuple[int, int, float]]
    layer: GILayer
    X: np.ndarray

    @property
    def adjacency(self) -> SparseAdjacency:
        return self.layer.adjacency


def random_instance(
    rng: np.random.Generator,
    n_range: tuple[int, int] = (2, 30),
    density_max: float = 0.4,
    max_features: int = 4,
    max_filters: int = 4,
    max_batch: int = 5,
    lambdas: tuple[float, ...] = (0.0, 0.5, 1.0, 2.0),
    subsets: bool = True,
    activation: str | None = None,
    pool: str | None | bool = False,
    weighted: bool | None = None,
    K: int | None = None,
    F: int | None = None,
    lam: float | None = None,
    n: int | None = None,
    density: float | None = None,
) -> LayerInstance:
    """Draw graph, node subsets, hyperparameters, parameters and input.

    Any keyword left as ``None`` is drawn at random; ``pool=False`` means no
    pooling and ``pool=None`` means draw it.
    """
    n = int(rng.integers(n_range[0], n_range[1] + 1)) if n is None else n
    density = float(rng.uniform(0.0, density_max)) if density is None else density
    weighted = bool(rng.integers(2)) if weighted is None else weighted
    edges = erdos_renyi_edges(n, density, rng, weighted=weighted)
    rows = random_subset(rng, n) if subsets else None
    cols = random_subset(rng, n) if subsets else None
    adj = from_edge_list(edges, rows, cols, n_nodes=n)

    K = int(rng.integers(1, max_features + 1)) if K is None else K
    F = int(rng.integers(1, max_filters + 1)) if F is None else F
    lam = float(rng.choice(lambdas)) if lam is None else lam
    activation = str(rng.choice(ACTIVATIONS)) if activation is None else activation
    if pool is None:
        pool = [None, "mean", "max", "sum"][int(rng.integers(4))]
    elif pool is False:
        pool = None
    cfg = GILayerConfig(selfloop_value=lam, num_filters=F, activation=activation, pool=pool)
    layer = GILayer.build(adj, cfg, K, init_seed=int(rng.integers(2**31)))
    params = GILayerParams(
        rng.normal(0.0, 0.5, size=(K, F, adj.n_rows)),
        rng.normal(0.0, 0.5, size=(adj.n_cols, F)),
    )
    layer = layer.with_params(params)
    M = int(rng.integers(1, max_batch + 1))
    X = rng.normal(size=(M, adj.n_rows, K))
    return LayerInstance(n, edges, layer, X)
