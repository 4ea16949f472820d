"""Command-line entry point: ``check``, ``bench``, ``train`` and ``eval``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Any, TextIO

import numpy as np

from . import datafiles
from .errors import DivergenceError, GIError
from .generate import erdos_renyi_edges
from .gi_layer import GILayer, GILayerConfig
from .ginn_model import GinnModel, TrainConfig, load_checkpoint, model_forward, save_checkpoint, train_mse
from .graph_io import load_graph
from .harness import BENCH_COLUMNS, run_bench, run_check
from .sparse_adjacency import from_edge_list


def _write_table(rows: list[dict[str, Any]], columns, out: TextIO, fmt: str = "csv") -> None:
    if fmt == "csv":
        writer = csv.DictWriter(out, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        return
    cells = [[str(c) for c in columns]] + [[_fmt_cell(r[c]) for c in columns] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(columns))]
    for row in cells:
        out.write("  ".join(v.rjust(w) for v, w in zip(row, widths)) + "\n")


def _fmt_cell(v: Any) -> str:
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def build_model_from_config(config: dict[str, Any], edges, n_nodes: int) -> GinnModel:
    """Instantiate the layer stack described by a training config."""
    layers = []
    K = int(config.get("num_features", 1))
    init_seed = int(config.get("init_seed", 0))
    for t, entry in enumerate(config["layers"]):
        entry = dict(entry)
        rows = entry.pop("rows", None)
        cols = entry.pop("cols", None)
        adj = from_edge_list(edges, rows, cols, n_nodes=n_nodes)
        layer = GILayer.build(adj, GILayerConfig(**entry), K, init_seed=init_seed + t)
        layers.append(layer)
        K = layer.out_features
    return GinnModel(layers)


def _graph_from_args(args) -> tuple[list, int]:
    if args.graph:
        return load_graph(args.graph)
    rng = np.random.default_rng(args.seed)
    return erdos_renyi_edges(args.n, args.density, rng, symmetric=args.symmetric), args.n


def cmd_check(args, out: TextIO) -> int:
    graph = load_graph(args.graph) if args.graph else None
    n_min = args.n_min if args.n_min is not None else args.n
    report = run_check(
        trials=args.trials,
        seed=args.seed,
        n_range=(n_min, args.n),
        density=args.density,
        K=args.K,
        F=args.F,
        lam=args.lam,
        graph=graph,
        gradients=not args.no_gradients,
        grad_max_nodes=args.grad_max_nodes,
        failure_dir=args.out,
        corrupt=args.inject_fault,
    )
    rows = [t.row() for t in report.trials]
    columns = list(rows[0]) if rows else ["trial", "status"]
    _write_table(rows, columns, out, args.format)
    status = "PASS" if report.passed else "FAIL"
    out.write(f"# {status}: {len(report.trials)} trials, max forward rel. error "
              f"{report.max_forward_rel_err:.3e}\n")
    for path in report.failures:
        out.write(f"# failing instance written to {path}\n")
    return 0 if report.passed else 1


def cmd_bench(args, out: TextIO) -> int:
    edges = None
    n = args.n
    if args.graph:
        edges, n = load_graph(args.graph)
    rows = run_bench(
        n=n, density=args.density, K=args.K, F=args.F, M=args.M, repeats=args.repeats,
        seed=args.seed, symmetric=args.symmetric, dense_cap=args.dense_cap,
        measure=not args.no_measure, edges=edges,
    )
    if args.out:
        with open(args.out, "w", newline="") as fh:
            _write_table(rows, BENCH_COLUMNS, fh, "csv")
    _write_table(rows, BENCH_COLUMNS, out, args.format)
    sparse, dense = rows
    out.write(f"# dense/sparse value-slot ratio: {dense['value_slots'] / sparse['value_slots']:.2f}\n")
    return 0


def cmd_train(args, out: TextIO) -> int:
    edges, n_nodes = load_graph(args.graph)
    config = json.loads(Path(args.config).read_text())
    model = build_model_from_config(config, edges, n_nodes)
    data = datafiles.read_rows(args.data)
    (n_in, k_in), (n_out, f_out) = model.input_shape, model.output_shape
    X, Y = datafiles.split_training_rows(data, n_in, k_in, n_out, f_out, path=str(args.data))

    tcfg = dict(config.get("train", {}))
    if args.seed is not None:
        tcfg["seed"] = args.seed
    if args.epochs is not None:
        tcfg["epochs"] = args.epochs
    try:
        history = train_mse(model, X, Y, TrainConfig(**tcfg))
    except DivergenceError as exc:
        sys.stderr.write(f"error: training diverged at epoch {exc.epoch}\n")
        return 3

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    save_checkpoint(model, outdir / "checkpoint.json")
    with open(outdir / "loss.txt", "w") as fh:
        for epoch, loss in enumerate(history):
            fh.write(f"{epoch}\t{loss!r}\n")
    final = f"{history[-1]:.6e}" if history else "n/a"
    out.write(f"trained {len(history)} epochs, final loss {final}; wrote {outdir}\n")
    return 0


def cmd_eval(args, out: TextIO) -> int:
    model = load_checkpoint(args.checkpoint)
    n_in, k_in = model.input_shape
    X = datafiles.reshape_inputs(datafiles.read_rows(args.input), n_in, k_in, path=str(args.input))
    Y = model_forward(model, X)
    n_out, f_out = model.output_shape
    datafiles.write_rows(args.out, Y, header=f"shape {Y.shape[0]} {n_out} {f_out}")
    out.write(f"wrote {Y.shape[0]} predictions to {args.out}\n")
    return 0


def _add_generator_flags(p: argparse.ArgumentParser, n_default: int, density_default: float | None):
    p.add_argument("--graph", help="Matrix Market or edge-list file")
    p.add_argument("--generate", choices=["er"], default="er", help="random graph family")
    p.add_argument("--n", type=int, default=n_default, help="number of nodes")
    p.add_argument("--density", type=float, default=density_default, help="edge probability")
    p.add_argument("--symmetric", action="store_true", help="undirected random graph")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=["csv", "table"], default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparse-gi", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="sparse vs dense oracle and gradient checks")
    _add_generator_flags(p, 30, None)
    p.add_argument("--n-min", type=int, default=None, help="smallest graph size (default: --n)")
    p.add_argument("--K", type=int, default=None, help="input features (random 1..4 if unset)")
    p.add_argument("--F", type=int, default=None, help="filters (random 1..4 if unset)")
    p.add_argument("--lam", type=float, default=None, help="self-loop value (random if unset)")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--no-gradients", action="store_true", help="skip finite-difference checks")
    p.add_argument("--grad-max-nodes", type=int, default=None,
                   help="check gradients only on layers with at most this many nodes")
    p.add_argument("--out", help="directory for failing instances")
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("bench", help="sparse vs dense memory and forward time")
    _add_generator_flags(p, 1000, 0.01)
    p.add_argument("--K", type=int, default=2)
    p.add_argument("--F", type=int, default=2)
    p.add_argument("--M", type=int, default=8, help="batch size")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--dense-cap", type=int, default=10**8, help="max dense value slots")
    p.add_argument("--no-measure", action="store_true", help="skip tracemalloc measurement")
    p.add_argument("--out", help="also write the CSV rows to this file")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("train", help="train a model on delimited data")
    p.add_argument("--graph", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--config", required=True, help="JSON model and training config")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the training seed")
    p.add_argument("--epochs", type=int, default=None, help="override the epoch count")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="predict with a saved checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True, help="predictions file")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: list[str] | None = None, out: TextIO | None = None) -> int:
    args = build_parser().parse_args(argv)
    out = sys.stdout if out is None else out
    try:
        return args.func(args, out)
    except (GIError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
