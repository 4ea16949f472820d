"""Verification and benchmark drivers behind the ``check`` and ``bench`` commands."""

from __future__ import annotations

import json
import statistics
import time
import tracemalloc
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .dense_reference import assemble_w_tilde, dense_memory_count, forward_dense, sparse_memory_count
from .generate import LayerInstance, erdos_renyi_edges, random_instance, random_subset
from .gi_layer import ACTIVATIONS, GILayer, GILayerConfig, GILayerParams, apply_activation
from .sparse_adjacency import from_dict, from_edge_list, sparse2dict

FORWARD_RTOL = 1e-10
GRAD_H = 1e-5
GRAD_RTOL = 1e-5
GRAD_ATOL = 1e-8


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    """``max|a - b| / max|b|`` (0 when both are identically zero)."""
    diff = float(np.max(np.abs(a - b))) if a.size else 0.0
    scale = float(np.max(np.abs(b))) if b.size else 0.0
    if diff == 0.0:
        return 0.0
    return diff / scale if scale > 0 else float("inf")


def oracle_forward(layer: GILayer, X: np.ndarray) -> np.ndarray:
    """Evaluate ``layer`` through the dense weight tensor."""
    w_tilde = assemble_w_tilde(layer.adjacency, layer.config.selfloop_value, layer.params)
    bias = layer.params.bias if layer.config.use_bias else None
    return forward_dense(w_tilde, X, bias, layer.config.activation, layer.config.pool)


def _half_sq(layer: GILayer, X: np.ndarray) -> float:
    y = layer.forward(X)
    return 0.5 * float(np.sum(y * y))


def fd_safe(layer: GILayer, X: np.ndarray, h: float = GRAD_H) -> bool:
    """True when no kink of relu or max pooling lies within FD reach.

    A step ``h`` in any parameter or input moves a pre-activation by at
    most ``h * max|Ahat| * max(|X|, |w|, 1)``.
    """
    cfg = layer.config
    if cfg.activation != "relu" and cfg.pool != "max":
        return True
    a = float(np.max(np.abs(layer.adj_hat.data))) if layer.adj_hat.nnz else 0.0
    reach = 4 * h * max(a, 1.0) * max(float(np.max(np.abs(X))), float(np.max(np.abs(layer.params.weights))), 1.0)
    pre = layer.preactivation(X)
    if cfg.activation == "relu" and np.min(np.abs(pre)) <= reach:
        return False
    if cfg.pool == "max" and cfg.num_filters > 1:
        act = np.sort(apply_activation(cfg.activation, pre), axis=2)
        if np.min(act[..., -1] - act[..., -2]) <= reach:
            return False
    return True


def gradient_check(
    layer: GILayer,
    X: np.ndarray,
    h: float = GRAD_H,
    rtol: float = GRAD_RTOL,
    atol: float = GRAD_ATOL,
) -> dict[str, float]:
    """Compare :meth:`GILayer.backward` against central differences of ``sum(Y**2)/2``.

    Returns the worst scaled error per block: ``|g - fd| / max(|fd|, atol/rtol)``,
    which is ``<= rtol`` exactly when the component passes.
    """
    y = layer.forward(X)
    gw, gb, gx = layer.backward(X, y)
    floor = atol / rtol
    worst: dict[str, float] = {}

    def scaled(analytic: float, fd: float) -> float:
        return abs(analytic - fd) / max(abs(fd), floor)

    W = layer.params.weights
    err = 0.0
    for idx in np.ndindex(W.shape):
        w = W.copy()
        w[idx] += h
        lp = _half_sq(layer.with_params(GILayerParams(w, layer.params.bias)), X)
        w[idx] -= 2 * h
        lm = _half_sq(layer.with_params(GILayerParams(w, layer.params.bias)), X)
        err = max(err, scaled(gw[idx], (lp - lm) / (2 * h)))
    worst["weights"] = err

    B = layer.params.bias
    err = 0.0
    for idx in np.ndindex(B.shape):
        b = B.copy()
        b[idx] += h
        lp = _half_sq(layer.with_params(GILayerParams(W, b)), X)
        b[idx] -= 2 * h
        lm = _half_sq(layer.with_params(GILayerParams(W, b)), X)
        err = max(err, scaled(gb[idx], (lp - lm) / (2 * h)))
    worst["bias"] = err

    err = 0.0
    for idx in np.ndindex(X.shape):
        x = X.copy()
        x[idx] += h
        lp = _half_sq(layer, x)
        x[idx] -= 2 * h
        lm = _half_sq(layer, x)
        err = max(err, scaled(gx[idx], (lp - lm) / (2 * h)))
    worst["input"] = err
    return worst


@dataclass
class TrialResult:
    trial: int
    n_nodes: int
    n1: int
    n2: int
    K: int
    F: int
    lam: float
    activation: str
    pool: str | None
    M: int
    forward_rel_err: float
    grad_err: float | None
    passed: bool

    def row(self) -> dict[str, Any]:
        return {
            "trial": self.trial, "n": self.n_nodes, "n1": self.n1, "n2": self.n2,
            "K": self.K, "F": self.F, "lam": self.lam, "activation": self.activation,
            "pool": self.pool or "none", "M": self.M,
            "forward_rel_err": f"{self.forward_rel_err:.3e}",
            "grad_err": "" if self.grad_err is None else f"{self.grad_err:.3e}",
            "status": "pass" if self.passed else "FAIL",
        }


@dataclass
class CheckReport:
    trials: list[TrialResult] = field(default_factory=list)
    failures: list[Path] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(t.passed for t in self.trials)

    @property
    def max_forward_rel_err(self) -> float:
        return max((t.forward_rel_err for t in self.trials), default=0.0)


def instance_record(inst: LayerInstance) -> dict[str, Any]:
    layer = inst.layer
    adj = sparse2dict(layer.adjacency)
    return {
        "n_nodes": inst.n_nodes,
        "config": layer.config.to_dict(),
        "adjacency": {k: (None if v is None else [list(t) if isinstance(t, tuple) else t for t in v])
                      for k, v in adj.items()},
        "weights": layer.params.weights.tolist(),
        "bias": layer.params.bias.tolist(),
        "X": inst.X.tolist(),
    }


def load_instance(path: str | Path) -> LayerInstance:
    """Rebuild a serialized failing instance for replay."""
    rec = json.loads(Path(path).read_text())
    adj = from_dict(rec["adjacency"])
    cfg = GILayerConfig(**rec["config"])
    weights = np.asarray(rec["weights"], dtype=np.float64)
    layer = GILayer.build(adj, cfg, weights.shape[0])
    layer = layer.with_params(GILayerParams(weights, np.asarray(rec["bias"], dtype=np.float64)))
    return LayerInstance(rec["n_nodes"], [], layer, np.asarray(rec["X"], dtype=np.float64))


def _corrupt(layer: GILayer) -> GILayer:
    """Flip the sign of one weight on a row that has stored entries."""
    w = layer.params.weights.copy()
    counts = np.diff(layer.adj_hat.indptr)
    i = int(np.argmax(counts)) if counts.size else 0
    w[0, 0, i] = -w[0, 0, i] if w[0, 0, i] != 0 else 1.0
    return layer.with_params(GILayerParams(w, layer.params.bias))


def run_check(
    trials: int,
    seed: int,
    n_range: tuple[int, int] = (2, 30),
    density: float | None = None,
    density_max: float = 0.4,
    K: int | None = None,
    F: int | None = None,
    lam: float | None = None,
    lambdas: tuple[float, ...] = (0.0, 0.5, 1.0, 2.0),
    graph: tuple[list[tuple[int, int, float]], int] | None = None,
    gradients: bool = True,
    grad_max_nodes: int | None = None,
    failure_dir: str | Path | None = None,
    corrupt: bool = False,
) -> CheckReport:
    """Sparse-vs-dense equivalence sweep plus finite-difference gradient checks.

    Each trial draws a graph (or uses ``graph`` with random node subsets),
    hyperparameters, parameters and an input batch.  Gradients are checked
    only on trials whose instance is at most ``grad_max_nodes`` nodes, when
    given.  Failing instances are written as JSON under ``failure_dir``.
    ``corrupt`` flips a weight after the sparse forward pass; it exists to
    show that the harness catches a wrong layer.
    """
    rng = np.random.default_rng(seed)
    report = CheckReport()
    for t in range(trials):
        activation = ACTIVATIONS[t % len(ACTIVATIONS)]
        pool = [None, "mean", "max", "sum"][(t // len(ACTIVATIONS)) % 4]
        for _ in range(100):
            if graph is None:
                inst = random_instance(
                    rng, n_range=n_range, density_max=density_max, density=density, K=K, F=F,
                    lam=lam, lambdas=lambdas, activation=activation,
                    pool=False if pool is None else pool,
                )
            else:
                inst = _instance_on_graph(rng, graph, K, F, lam, lambdas, activation, pool)
            if not gradients or fd_safe(inst.layer, inst.X):
                break
        layer, X = inst.layer, inst.X
        y_sparse = layer.forward(X)
        if corrupt:
            layer = _corrupt(layer)
        y_dense = oracle_forward(layer, X)
        rel = relative_error(y_sparse, y_dense)
        ok = rel <= FORWARD_RTOL

        gerr = None
        if gradients and (grad_max_nodes is None or max(layer.n_in, layer.n_out) <= grad_max_nodes):
            gerr = max(gradient_check(inst.layer, X).values())
            ok = ok and gerr <= GRAD_RTOL

        cfg = layer.config
        report.trials.append(TrialResult(
            t, inst.n_nodes, layer.n_in, layer.n_out, layer.num_features, cfg.num_filters,
            cfg.selfloop_value, cfg.activation, cfg.pool, X.shape[0], rel, gerr, ok,
        ))
        if not ok and failure_dir is not None:
            out = Path(failure_dir)
            out.mkdir(parents=True, exist_ok=True)
            path = out / f"failure_seed{seed}_trial{t}.json"
            path.write_text(json.dumps(instance_record(LayerInstance(inst.n_nodes, inst.edges, layer, X))))
            report.failures.append(path)
    return report


def _instance_on_graph(rng, graph, K, F, lam, lambdas, activation, pool) -> LayerInstance:
    edges, n = graph
    adj = from_edge_list(edges, random_subset(rng, n), random_subset(rng, n), n_nodes=n)
    K = int(rng.integers(1, 5)) if K is None else K
    F = int(rng.integers(1, 5)) if F is None else F
    lam = float(rng.choice(lambdas)) if lam is None else lam
    cfg = GILayerConfig(selfloop_value=lam, num_filters=F, activation=activation, pool=pool)
    layer = GILayer.build(adj, cfg, K)
    layer = layer.with_params(GILayerParams(
        rng.normal(0.0, 0.5, size=(K, F, adj.n_rows)), rng.normal(0.0, 0.5, size=(adj.n_cols, F))
    ))
    X = rng.normal(size=(int(rng.integers(1, 6)), adj.n_rows, K))
    return LayerInstance(n, edges, layer, X)


BENCH_COLUMNS = ("mode", "n", "nnz", "value_slots", "bytes_counted", "bytes_measured", "time_median_s", "status")


def _retained_bytes(fn):
    tracemalloc.start()
    try:
        before = tracemalloc.get_traced_memory()[0]
        obj = fn()
        after = tracemalloc.get_traced_memory()[0]
    finally:
        tracemalloc.stop()
    return obj, after - before


def _median_time(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def run_bench(
    n: int,
    density: float,
    K: int = 2,
    F: int = 2,
    M: int = 8,
    repeats: int = 5,
    seed: int = 0,
    symmetric: bool = False,
    dense_cap: int = 10**8,
    measure: bool = True,
    edges: list[tuple[int, int, float]] | None = None,
) -> list[dict[str, Any]]:
    """Forward-pass memory and time for the sparse layer and the dense baseline.

    ``value_slots`` follows the counting model; ``bytes_measured`` is the
    memory retained by building the layer state (tracemalloc), when enabled.
    The dense row is ``skipped(cap)`` when ``n*K*F*n > dense_cap``.
    """
    rng = np.random.default_rng(seed)
    if edges is None:
        edges = erdos_renyi_edges(n, density, rng, symmetric=symmetric)
    adj = from_edge_list(edges, n_nodes=n)
    cfg = GILayerConfig(selfloop_value=1.0, num_filters=F, activation="relu")
    X = rng.normal(size=(M, n, K))
    width = np.dtype(np.float64).itemsize

    if measure:
        layer, sparse_bytes = _retained_bytes(lambda: GILayer.build(adj, cfg, K, init_seed=seed))
    else:
        layer, sparse_bytes = GILayer.build(adj, cfg, K, init_seed=seed), None
    nnz = layer.adj_hat.nnz
    slots = sparse_memory_count(nnz, n, n, K, F)
    rows = [{
        "mode": "sparse", "n": n, "nnz": nnz, "value_slots": slots, "bytes_counted": slots * width,
        "bytes_measured": "" if sparse_bytes is None else sparse_bytes,
        "time_median_s": _median_time(lambda: layer.forward(X), repeats), "status": "ok",
    }]

    dslots = dense_memory_count(n, n, K, F)
    drow = {"mode": "dense", "n": n, "nnz": nnz, "value_slots": dslots, "bytes_counted": dslots * width}
    if n * K * F * n > dense_cap:
        drow.update(bytes_measured="", time_median_s="", status="skipped(cap)")
    else:
        def build_dense():
            return assemble_w_tilde(adj, cfg.selfloop_value, layer.params), layer.params.bias.copy()

        if measure:
            (w_tilde, bias), dense_bytes = _retained_bytes(build_dense)
        else:
            (w_tilde, bias), dense_bytes = build_dense(), None
        t = _median_time(lambda: forward_dense(w_tilde, X, bias, cfg.activation), repeats)
        drow.update(bytes_measured="" if dense_bytes is None else dense_bytes, time_median_s=t, status="ok")
    rows.append(drow)
    return rows
