"""Regenerate the committed fixtures in this directory.

    python3 tests/fixtures/make_fixtures.py

Golden predictions are produced by the dense reference path, not by the
sparse layers they are compared against.
"""

import json
from pathlib import Path

import numpy as np

from sparse_gi import GILayer, GILayerConfig, GILayerParams, GinnModel, from_edge_list, save_checkpoint
from sparse_gi.datafiles import write_rows
from sparse_gi.dense_reference import assemble_w_tilde, forward_dense
from sparse_gi.generate import erdos_renyi_edges
from sparse_gi.graph_io import write_edge_list

HERE = Path(__file__).parent
N = 12


def dense_model_forward(model, X):
    h = X
    for layer in model.layers:
        w_tilde = assemble_w_tilde(layer.adjacency, layer.config.selfloop_value, layer.params)
        bias = layer.params.bias if layer.config.use_bias else None
        h = forward_dense(w_tilde, h, bias, layer.config.activation, layer.config.pool)
    return h


def main():
    rng = np.random.default_rng(2024)
    edges = erdos_renyi_edges(N, 0.3, rng, symmetric=True)
    write_edge_list(HERE / "graph.tsv", edges, comment=f"symmetric G({N}, 0.3), seed 2024")

    # teacher-student training set for a single identity layer
    layer_cfg = {"selfloop_value": 1.0, "num_filters": 1, "activation": "identity",
                 "use_bias": True, "pool": None}
    adj = from_edge_list(edges, n_nodes=N)
    teacher = GILayer.build(adj, GILayerConfig(**layer_cfg), 1, init_seed=77)
    teacher = teacher.with_params(
        GILayerParams(teacher.params.weights, rng.normal(0.0, 0.5, size=(N, 1)))
    )
    X = rng.normal(size=(64, N, 1))
    Y = dense_model_forward(GinnModel([teacher]), X)
    write_rows(HERE / "train.tsv", np.concatenate([X.reshape(64, -1), Y.reshape(64, -1)], axis=1)[:, None, :],
               header="64 samples: 12 input values then 12 target values")
    config = {
        "num_features": 1,
        "init_seed": 5,
        "layers": [layer_cfg],
        "train": {"learning_rate": 1.0, "epochs": 500, "batch_size": None, "seed": 0},
    }
    (HERE / "train_config.json").write_text(json.dumps(config, indent=2) + "\n")

    # two-layer model for the eval golden file
    first = GILayer.build(adj, GILayerConfig(selfloop_value=1.0, num_filters=2, activation="tanh"), 1, 11)
    sub = from_edge_list(edges, None, [0, 2, 3, 5, 7, 8, 11], n_nodes=N)
    second = GILayer.build(sub, GILayerConfig(selfloop_value=0.5, num_filters=3, pool="mean"), 2, 12)
    first = first.with_params(GILayerParams(first.params.weights, rng.normal(0.0, 0.3, size=(N, 2))))
    second = second.with_params(GILayerParams(second.params.weights, rng.normal(0.0, 0.3, size=(7, 3))))
    model = GinnModel([first, second])
    save_checkpoint(model, HERE / "model_checkpoint.json")
    X_eval = rng.normal(size=(5, N, 1))
    write_rows(HERE / "eval_input.tsv", X_eval, header="5 samples of 12 nodes x 1 feature")
    write_rows(HERE / "golden_predictions.tsv", dense_model_forward(model, X_eval),
               header="dense reference predictions, shape 5 7 1")


if __name__ == "__main__":
    main()
