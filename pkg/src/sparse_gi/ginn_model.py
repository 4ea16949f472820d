"""Stacks of GI layers, plain SGD training and checkpoint files."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import DivergenceError, IntegrityError, InvalidValue, MalformedDict, ShapeError
from .gi_layer import GILayer, GILayerConfig, GILayerParams
from .sparse_adjacency import from_dict, sparse2dict

CHECKPOINT_FORMAT = "sparse-gi-checkpoint"
CHECKPOINT_VERSION = 1


class GinnModel:
    """An ordered stack of built layers whose shapes chain."""

    def __init__(self, layers: list[GILayer]):
        if not layers:
            raise ShapeError("a model needs at least one layer")
        for t in range(len(layers) - 1):
            a, b = layers[t], layers[t + 1]
            if (a.n_out, a.out_features) != (b.n_in, b.num_features):
                raise ShapeError(
                    f"layer {t} outputs (n={a.n_out}, features={a.out_features}) but layer {t + 1}"
                    f" expects (n={b.n_in}, features={b.num_features})"
                )
        self.layers = list(layers)

    @property
    def input_shape(self) -> tuple[int, int]:
        return self.layers[0].n_in, self.layers[0].num_features

    @property
    def output_shape(self) -> tuple[int, int]:
        return self.layers[-1].n_out, self.layers[-1].out_features

    @property
    def params(self) -> list[GILayerParams]:
        return [layer.params for layer in self.layers]

    def set_params(self, params: list[GILayerParams]) -> None:
        if len(params) != len(self.layers):
            raise ShapeError(f"expected {len(self.layers)} parameter sets, got {len(params)}")
        self.layers = [layer.with_params(p) for layer, p in zip(self.layers, params)]

    def shape_chain(self) -> list[tuple[int, int]]:
        chain = [self.input_shape]
        chain.extend((layer.n_out, layer.out_features) for layer in self.layers)
        return chain


def model_forward(model: GinnModel, X: np.ndarray, training: bool = False) -> np.ndarray:
    h = np.asarray(X)
    for t, layer in enumerate(model.layers):
        if h.ndim != 3 or h.shape[1:] != (layer.n_in, layer.num_features):
            raise ShapeError(
                f"layer {t} expects input (M, {layer.n_in}, {layer.num_features}), got {h.shape}"
            )
        h = layer.forward(h, training=training)
    return h


def model_backward(
    model: GinnModel, X: np.ndarray, grad_out: np.ndarray
) -> tuple[list[tuple[np.ndarray, np.ndarray]], np.ndarray]:
    """Per-layer ``(grad_weights, grad_bias)`` and the gradient w.r.t. ``X``.

    Recomputes the layer inputs with a training-mode forward pass.
    """
    inputs = [np.asarray(X)]
    for layer in model.layers[:-1]:
        inputs.append(layer.forward(inputs[-1], training=True))
    model.layers[-1].forward(inputs[-1], training=True)
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(model.layers)  # type: ignore[list-item]
    g = np.asarray(grad_out)
    for t in range(len(model.layers) - 1, -1, -1):
        gw, gb, g = model.layers[t].backward(inputs[t], g)
        grads[t] = (gw, gb)
    return grads, g


def sgd_step(params: GILayerParams, grads: tuple[np.ndarray, np.ndarray], lr: float) -> GILayerParams:
    gw, gb = grads
    if gw.shape != params.weights.shape or gb.shape != params.bias.shape:
        raise ShapeError("gradient shapes do not match the parameters")
    return GILayerParams(params.weights - lr * gw, params.bias - lr * gb)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 100
    batch_size: int | None = None  # None: full batch
    seed: int = 0
    loss: str = "mse"

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValueError(f"learning_rate must be non-negative, got {self.learning_rate}")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.loss != "mse":
            raise ValueError(f"unsupported loss {self.loss!r}")


def mse_loss(pred: np.ndarray, target: np.ndarray) -> float:
    """Half the mean squared error over every batch element and output entry."""
    return 0.5 * float(np.mean((pred - target) ** 2))


def train_mse(
    model: GinnModel, X_train: np.ndarray, Y_train: np.ndarray, cfg: TrainConfig
) -> list[float]:
    """Minimize :func:`mse_loss` with plain SGD.

    Returns the training-set loss measured after each epoch.  Mini-batches
    are drawn by a permutation seeded from ``cfg.seed``.
    """
    X_train = np.asarray(X_train)
    Y_train = np.asarray(Y_train)
    M = X_train.shape[0]
    if M < 1:
        raise ShapeError("need at least one training sample")
    if Y_train.shape[0] != M:
        raise ShapeError(f"{M} inputs but {Y_train.shape[0]} targets")
    if Y_train.shape[1:] != model.output_shape:
        raise ShapeError(f"targets have shape {Y_train.shape[1:]}, model outputs {model.output_shape}")
    if X_train.shape[1:] != model.input_shape:
        raise ShapeError(f"inputs have shape {X_train.shape[1:]}, model expects {model.input_shape}")

    history: list[float] = []
    with np.errstate(over="ignore", invalid="ignore"):
        _run_epochs(model, X_train, Y_train, cfg, history)
    return history


def _run_epochs(
    model: GinnModel, X_train: np.ndarray, Y_train: np.ndarray, cfg: TrainConfig, history: list[float]
) -> None:
    rng = np.random.default_rng(cfg.seed)
    M = X_train.shape[0]
    bs = M if cfg.batch_size is None else min(cfg.batch_size, M)
    for epoch in range(cfg.epochs):
        order = rng.permutation(M) if bs < M else np.arange(M)
        for start in range(0, M, bs):
            idx = order[start:start + bs]
            xb, yb = X_train[idx], Y_train[idx]
            pred = model_forward(model, xb)
            grad_out = (pred - yb) / pred.size
            grads, _ = model_backward(model, xb, grad_out)
            try:
                model.set_params([sgd_step(p, g, cfg.learning_rate) for p, g in zip(model.params, grads)])
            except InvalidValue:
                raise DivergenceError(epoch, float("inf")) from None
        loss = mse_loss(model_forward(model, X_train), Y_train)
        if not np.isfinite(loss):
            raise DivergenceError(epoch, loss)
        history.append(loss)


def _layer_record(layer: GILayer) -> dict[str, Any]:
    adj = sparse2dict(layer.adjacency)
    return {
        "config": layer.config.to_dict(),
        "num_features": layer.num_features,
        "n_in": layer.n_in,
        "n_out": layer.n_out,
        "adjacency": {
            "keys": [list(k) for k in adj["keys"]],
            "values": adj["values"],
            "rowkeys_custom": adj["rowkeys_custom"],
            "colkeys_custom": adj["colkeys_custom"],
            "keys_custom": None if adj["keys_custom"] is None else [list(k) for k in adj["keys_custom"]],
        },
        "weights": [float(v) for v in layer.params.weights.reshape(-1)],
        "bias": [float(v) for v in layer.params.bias.reshape(-1)],
    }


def _digest(layers: list[dict[str, Any]]) -> str:
    body = json.dumps(layers, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(body.encode()).hexdigest()


def checkpoint_document(model: GinnModel) -> str:
    """Serialize to JSON text.

    Layers are written in order, weights in ``(k, l, i)`` order and biases
    in ``(j, l)`` order, so the same model always yields the same bytes.
    """
    layers = [_layer_record(layer) for layer in model.layers]
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "layers": layers,
        "sha256": _digest(layers),
    }
    return json.dumps(doc, allow_nan=False) + "\n"


def save_checkpoint(model: GinnModel, path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        fh.write(checkpoint_document(model))


def model_from_document(text: str) -> GinnModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise IntegrityError(f"checkpoint is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != CHECKPOINT_FORMAT:
        raise IntegrityError("not a sparse-gi checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise IntegrityError(f"unsupported checkpoint version {doc.get('version')}")
    layers = doc.get("layers")
    if not isinstance(layers, list) or doc.get("sha256") != _digest(layers):
        raise IntegrityError("checkpoint checksum mismatch")

    built = []
    try:
        for t, rec in enumerate(layers):
            cfg = GILayerConfig(**rec["config"])
            adj = from_dict(rec["adjacency"])
            K = int(rec["num_features"])
            if adj.shape != (rec["n_in"], rec["n_out"]):
                raise IntegrityError(f"layer {t}: adjacency shape disagrees with n_in/n_out")
            layer = GILayer.build(adj, cfg, K)
            weights = np.asarray(rec["weights"], dtype=np.float64).reshape(K, cfg.num_filters, adj.n_rows)
            bias = np.asarray(rec["bias"], dtype=np.float64).reshape(adj.n_cols, cfg.num_filters)
            built.append(layer.with_params(GILayerParams(weights, bias)))
    except (KeyError, TypeError, ValueError, MalformedDict) as exc:
        if isinstance(exc, IntegrityError):
            raise
        raise IntegrityError(f"checkpoint layer {len(built)} is malformed: {exc}") from exc
    return GinnModel(built)


def load_checkpoint(path: str | os.PathLike) -> GinnModel:
    with open(path) as fh:
        return model_from_document(fh.read())
