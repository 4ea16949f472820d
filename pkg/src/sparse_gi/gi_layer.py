"""Sparse versatile Graph-Informed layer.

The layer maps a batch ``X`` of shape ``(M, n1, K)`` (features of the
nodes in ``V1``) to ``Y`` of shape ``(M, n2, F)`` (filters of the nodes in
``V2``)::

    Y[m, j, l] = act( sum_k sum_i Ahat[i, j] * w[k, l, i] * X[m, i, k] + B[j, l] )

with ``Ahat = (A + lam*I)|_{V1,V2}``.  The row-scaled copies of ``Ahat``
are never formed: the input is first contracted with the weights over the
feature axis and the result is pushed through one transposed sparse
product.  An optional pooling step then reduces over the filter axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from .errors import InvalidValue, ShapeError
from .sparse_adjacency import SparseAdjacency, add_scaled_selfloops, apply, transpose_apply

ACTIVATIONS = ("identity", "relu", "tanh", "sigmoid")
POOLS = ("mean", "max", "sum")
_POOL_ALIASES = {"reduce_mean": "mean", "reduce_max": "max", "reduce_sum": "sum"}


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def apply_activation(kind: str, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float) if not isinstance(z, np.ndarray) else z
    if kind == "identity":
        return z.copy()
    if kind == "relu":
        return np.maximum(z, 0)
    if kind == "tanh":
        return np.tanh(z)
    if kind == "sigmoid":
        return _sigmoid(z)
    raise ValueError(f"unknown activation {kind!r}")


def activation_derivative(kind: str, z: np.ndarray) -> np.ndarray:
    """Elementwise derivative at ``z``; ``relu'(0)`` is 0."""
    z = np.asarray(z, dtype=float) if not isinstance(z, np.ndarray) else z
    if kind == "identity":
        return np.ones_like(z)
    if kind == "relu":
        return (z > 0).astype(z.dtype)
    if kind == "tanh":
        t = np.tanh(z)
        return 1 - t * t
    if kind == "sigmoid":
        s = _sigmoid(z)
        return s * (1 - s)
    raise ValueError(f"unknown activation {kind!r}")


def pool_forward(kind: str | None, y: np.ndarray) -> np.ndarray:
    """Reduce ``(M, n, F)`` over the filter axis to ``(M, n, 1)``."""
    if kind is None:
        return y
    if kind == "mean":
        return y.mean(axis=2, keepdims=True)
    if kind == "max":
        return y.max(axis=2, keepdims=True)
    if kind == "sum":
        return y.sum(axis=2, keepdims=True)
    raise ValueError(f"unknown pool {kind!r}")


def pool_backward(kind: str | None, y: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Map a gradient w.r.t. the pooled output back to the filter axis.

    Max pooling routes the gradient to the first maximal filter.
    """
    if kind is None:
        return grad
    F = y.shape[2]
    if kind == "mean":
        return np.broadcast_to(grad / F, y.shape).copy()
    if kind == "sum":
        return np.broadcast_to(grad, y.shape).copy()
    if kind == "max":
        out = np.zeros_like(y)
        idx = np.argmax(y, axis=2)[..., None]
        np.put_along_axis(out, idx, grad, axis=2)
        return out
    raise ValueError(f"unknown pool {kind!r}")


@dataclass(frozen=True)
class GILayerConfig:
    """Hyperparameters of one layer.

    ``pool`` also accepts ``"reduce_mean"``-style names.
    """

    selfloop_value: float = 1.0
    num_filters: int = 1
    activation: str = "identity"
    use_bias: bool = True
    pool: str | None = None

    def __post_init__(self):
        if not np.isfinite(self.selfloop_value):
            raise InvalidValue(f"selfloop_value must be finite, got {self.selfloop_value}")
        if int(self.num_filters) != self.num_filters or self.num_filters < 1:
            raise ValueError(f"num_filters must be a positive integer, got {self.num_filters}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")
        pool = _POOL_ALIASES.get(self.pool, self.pool) if self.pool is not None else None
        if pool is not None and pool not in POOLS:
            raise ValueError(f"pool must be None or one of {POOLS}, got {self.pool!r}")
        object.__setattr__(self, "pool", pool)
        object.__setattr__(self, "selfloop_value", float(self.selfloop_value))
        object.__setattr__(self, "num_filters", int(self.num_filters))

    def to_dict(self) -> dict[str, Any]:
        return {
            "selfloop_value": self.selfloop_value,
            "num_filters": self.num_filters,
            "activation": self.activation,
            "use_bias": self.use_bias,
            "pool": self.pool,
        }


@dataclass(frozen=True)
class GILayerParams:
    """Trainable arrays: ``weights`` is ``(K, F, n1)``, ``bias`` is ``(n2, F)``."""

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        # own read-only copies, so later edits to the caller's arrays cannot leak in
        for name in ("weights", "bias"):
            arr = np.array(getattr(self, name), copy=True)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if self.weights.ndim != 3 or self.bias.ndim != 2:
            raise ShapeError("weights must be rank 3 and bias rank 2")
        if self.weights.shape[1] != self.bias.shape[1]:
            raise ShapeError(
                f"weights have {self.weights.shape[1]} filters but bias has {self.bias.shape[1]}"
            )
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise InvalidValue("parameters must be finite")

    @property
    def num_features(self) -> int:
        return self.weights.shape[0]

    def copy(self) -> GILayerParams:
        return GILayerParams(self.weights.copy(), self.bias.copy())


@dataclass(eq=False)
class GILayer:
    """A built layer bound to one (sub)adjacency matrix.

    ``adjacency`` holds ``A|_{V1,V2}`` as given; ``adj_hat`` the self-loop
    augmented matrix used for computation.  ``params`` may be replaced by
    an optimizer but is never mutated by :meth:`forward`/:meth:`backward`.
    """

    adjacency: SparseAdjacency
    adj_hat: SparseAdjacency
    config: GILayerConfig
    params: GILayerParams
    _cache: tuple | None = field(default=None, repr=False)

    @classmethod
    def build(
        cls,
        adj: SparseAdjacency,
        cfg: GILayerConfig,
        num_features: int,
        init_seed: int = 0,
        dtype: Any = np.float64,
    ) -> GILayer:
        """Augment the adjacency and draw initial parameters.

        Weights are uniform in ``(-s, s)`` with
        ``s = sqrt(6 / (n1*K + n2*F))``; biases start at zero.
        """
        K, F = int(num_features), cfg.num_filters
        if K < 1:
            raise ValueError(f"num_features must be >= 1, got {num_features}")
        n1, n2 = adj.shape
        if n1 == 0 or n2 == 0:
            raise ShapeError(f"adjacency must be non-empty, got shape {adj.shape}")
        if adj.dtype != np.dtype(dtype):
            adj = adj.astype(dtype)
        adj_hat = add_scaled_selfloops(adj, cfg.selfloop_value)
        rng = np.random.default_rng(init_seed)
        s = np.sqrt(6.0 / (n1 * K + n2 * F))
        weights = rng.uniform(-s, s, size=(K, F, n1)).astype(dtype)
        bias = np.zeros((n2, F), dtype=dtype)
        return cls(adj, adj_hat, cfg, GILayerParams(weights, bias))

    @property
    def n_in(self) -> int:
        return self.adj_hat.n_rows

    @property
    def n_out(self) -> int:
        return self.adj_hat.n_cols

    @property
    def num_features(self) -> int:
        return self.params.num_features

    @property
    def num_filters(self) -> int:
        return self.config.num_filters

    @property
    def out_features(self) -> int:
        return 1 if self.config.pool is not None else self.config.num_filters

    def with_params(self, params: GILayerParams) -> GILayer:
        if params.weights.shape != self.params.weights.shape or params.bias.shape != self.params.bias.shape:
            raise ShapeError("replacement parameters have different shapes")
        return replace(self, params=params, _cache=None)

    def _check_input(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X)
        expected = (self.n_in, self.num_features)
        if X.ndim != 3 or X.shape[1:] != expected:
            raise ShapeError(f"expected input of shape (M, {expected[0]}, {expected[1]}), got {X.shape}")
        if not np.all(np.isfinite(X)):
            raise InvalidValue("input contains non-finite values")
        return X

    def preactivation(self, X: np.ndarray) -> np.ndarray:
        """Graph convolution plus bias, shape ``(M, n2, F)``."""
        X = self._check_input(X)
        M = X.shape[0]
        F = self.num_filters
        w = self.params.weights
        # z[i, m, l] = sum_k w[k, l, i] * X[m, i, k]
        z = np.einsum("mik,kli->iml", X, w).reshape(self.n_in, M * F)
        y = transpose_apply(self.adj_hat, None, z).reshape(self.n_out, M, F)
        y = y.transpose(1, 0, 2)
        if self.config.use_bias:
            y = y + self.params.bias
        return np.ascontiguousarray(y)

    def forward(self, X: np.ndarray, training: bool = False) -> np.ndarray:
        """Layer output of shape ``(M, n2, F)``, or ``(M, n2, 1)`` when pooled.

        With ``training=True`` the pre-activation is kept for :meth:`backward`.
        """
        pre = self.preactivation(X)
        act = apply_activation(self.config.activation, pre)
        if training:
            self._cache = (X, self.params, pre, act)
        return pool_forward(self.config.pool, act)

    def backward(
        self, X: np.ndarray, grad_out: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Gradients ``(d weights, d bias, d X)`` for upstream ``grad_out``.

        ``grad_out`` has the shape of :meth:`forward`'s output.
        """
        cache = self._cache
        if cache is not None and cache[0] is X and cache[1] is self.params:
            _, _, pre, act = cache
        else:
            pre = self.preactivation(X)
            act = apply_activation(self.config.activation, pre)
        X = np.asarray(X)
        M = X.shape[0]
        F = self.num_filters
        grad_out = np.asarray(grad_out)
        expected = (M, self.n_out, self.out_features)
        if grad_out.shape != expected:
            raise ShapeError(f"grad_out must have shape {expected}, got {grad_out.shape}")

        g_act = pool_backward(self.config.pool, act, grad_out)
        delta = g_act * activation_derivative(self.config.activation, pre)

        if self.config.use_bias:
            grad_bias = delta.sum(axis=0)
        else:
            grad_bias = np.zeros_like(self.params.bias)
        # p[i, m, l] = sum_j Ahat[i, j] * delta[m, j, l]
        d = delta.transpose(1, 0, 2).reshape(self.n_out, M * F)
        p = apply(self.adj_hat, d).reshape(self.n_in, M, F)
        grad_weights = np.einsum("mik,iml->kli", X, p)
        grad_input = np.einsum("kli,iml->mik", self.params.weights, p)
        return grad_weights, grad_bias, grad_input


def simple_form_forward(
    adj: SparseAdjacency,
    w: np.ndarray,
    b: np.ndarray,
    activation: str,
    x: np.ndarray,
) -> np.ndarray:
    """Single-feature, single-filter action ``act((diag(w)(A+I)).T x + b)``."""
    if adj.n_rows != adj.n_cols or not np.array_equal(adj.row_keys, adj.col_keys):
        raise ShapeError(f"simple form needs a square full-graph adjacency, got {adj.shape}")
    a_hat = add_scaled_selfloops(adj, 1.0)
    return apply_activation(activation, transpose_apply(a_hat, np.asarray(w), np.asarray(x)) + b)
