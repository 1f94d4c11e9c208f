"""Command-line interface.

Subcommands: precompute, train, sweep, spectrum, bench, validate-bundle.
Exit codes: 0 success, 1 usage, 2 data, 3 numeric, 4 resource.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from .classifier import TrainConfig, train
from .data import load_bundle, select_split
from .errors import GpnetError, UsageError
from .filters import FilterConfig
from .spectral import compute_spectrum, emit_spectrum_csv
from .sweep import MAX_GRID_DEFAULT, propagate_cached, run_sweep, write_results_csv

METRICS_SCHEMA_VERSION = 1

BENCH_WARMUP = 10
BENCH_EPOCHS = 100


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; route through UsageError for exit 1
    def error(self, message):
        raise UsageError(message)


def _parse_int_list(text: str) -> tuple:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip() != "")
    except ValueError as exc:
        raise UsageError(f"expected a comma-separated integer list, got {text!r}") from exc


def _add_dataset_flags(p, required=True):
    p.add_argument("--dataset", required=required, help="path to a bundle directory")
    p.add_argument("--split", type=int, default=0, help="index of the stored split to use")


def _add_filter_flags(p):
    p.add_argument("--m", type=int, default=1, help="number of channels")
    p.add_argument("--k", type=int, default=2, help="powers per channel")
    p.add_argument("--q0", type=int, default=1, help="global exponent offset")
    p.add_argument("--q", default="1", help="comma list of per-channel steps (each >= 1)")
    p.add_argument("--d", default="0", help="comma list of per-channel offsets")
    p.add_argument("--alpha", type=float, default=1.0, help="self-attention score")
    p.add_argument("--beta", type=float, default=1.0, help="sign factor, +1 or -1")
    p.add_argument("--agg", choices=("max", "min", "avg", "sum"), default="sum")
    p.add_argument("--self-loops", choices=("on", "off"), default="on")


def _add_train_flags(p):
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--dropout", type=float, default=0.0)
    p.add_argument("--weight-decay", type=float, default=0.0)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--relu", action="store_true", help="clamp propagated features at zero")
    p.add_argument("--bias", action="store_true", help="train a per-class bias")


def _add_cache_flag(p):
    p.add_argument("--cache-dir", default=None,
                   help="propagation cache directory (GPNET_CACHE_DIR overrides)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gpnet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("precompute", help="propagate features once and cache them")
    _add_dataset_flags(p)
    _add_filter_flags(p)
    _add_cache_flag(p)

    p = sub.add_parser("train", help="train the linear layer on propagated features")
    _add_dataset_flags(p)
    _add_filter_flags(p)
    _add_train_flags(p)
    _add_cache_flag(p)
    p.add_argument("--out", default=None, help="metrics JSON path")

    p = sub.add_parser("sweep", help="exhaustive grid search, selected on validation")
    _add_dataset_flags(p)
    _add_cache_flag(p)
    p.add_argument("--grid", default=None, help="JSON grid spec file (default: published menus)")
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--relu", action="store_true")
    p.add_argument("--bias", action="store_true")
    p.add_argument("--allow-large", action="store_true",
                   help=f"run grids above {MAX_GRID_DEFAULT} configurations")
    p.add_argument("--out", default="sweep_results.csv", help="results CSV path")

    p = sub.add_parser("spectrum", help="export per-channel filter responses as CSV")
    _add_dataset_flags(p)
    _add_filter_flags(p)
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")

    p = sub.add_parser("bench", help="median per-epoch training time vs the reductions")
    _add_dataset_flags(p)
    _add_filter_flags(p)
    _add_train_flags(p)
    _add_cache_flag(p)
    p.add_argument("--out", default=None, help="timing JSON path")

    p = sub.add_parser("validate-bundle", help="load a bundle and print its statistics")
    _add_dataset_flags(p)

    return parser


def _filter_config(args) -> FilterConfig:
    return FilterConfig(
        m=args.m,
        k=args.k,
        q0=args.q0,
        q=_parse_int_list(args.q),
        d=_parse_int_list(args.d),
        alpha=args.alpha,
        beta=args.beta,
        aggregation=args.agg,
        self_loops=args.self_loops == "on",
    )


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        learning_rate=args.lr,
        weight_decay=args.weight_decay,
        dropout_rate=args.dropout,
        epochs=args.epochs,
        seed=args.seed,
        runs=args.runs,
        relu=args.relu,
        use_bias=args.bias,
    )


def _cache_dir(args) -> Path:
    env = os.environ.get("GPNET_CACHE_DIR")
    if env:
        return Path(env)
    if args.cache_dir:
        return Path(args.cache_dir)
    return Path.home() / ".cache" / "gpnet"


def cmd_precompute(args) -> int:
    dataset = load_bundle(args.dataset)
    config = _filter_config(args)
    cache = _cache_dir(args)
    t0 = time.perf_counter()
    pf, hit = propagate_cached(config, dataset, cache)
    elapsed = time.perf_counter() - t0
    path = cache / f"{dataset.name}-{pf.fingerprint}.gpf"
    if hit:
        print(f"cache hit: {path}")
    else:
        print(f"propagated {pf.H_bar.shape[0]}x{pf.H_bar.shape[1]} in {elapsed:.3f}s -> {path}")
    return 0


def _metrics_payload(dataset, config, tcfg, metrics) -> dict:
    return {
        "schema_version": METRICS_SCHEMA_VERSION,
        "dataset": dataset.name,
        "filter": config.to_dict(),
        "training": {
            "learning_rate": tcfg.learning_rate,
            "weight_decay": tcfg.weight_decay,
            "dropout_rate": tcfg.dropout_rate,
            "epochs": tcfg.epochs,
            "runs": tcfg.runs,
            "seed": tcfg.seed,
            "relu": tcfg.relu,
            "use_bias": tcfg.use_bias,
        },
        "metrics": {
            "accuracy": metrics.accuracy,
            "micro_f1": metrics.micro_f1,
            "selected_epoch": metrics.selected_epoch,
            "test_accuracy_mean": metrics.test_accuracy_mean,
            "test_accuracy_std": metrics.test_accuracy_std,
            "run_test_accuracies": list(metrics.run_test_accuracies),
            "run_val_accuracies": list(metrics.run_val_accuracies),
        },
    }


def cmd_train(args) -> int:
    dataset = load_bundle(args.dataset)
    config = _filter_config(args)
    tcfg = _train_config(args)
    pf, hit = propagate_cached(config, dataset, _cache_dir(args))
    if hit:
        print("using cached propagation")
    masks = select_split(dataset, args.split)
    _, metrics = train(pf, dataset.labels, masks, tcfg)
    acc = metrics.accuracy
    print(f"dataset={dataset.name} split={args.split} runs={tcfg.runs}")
    print(f"train={acc['train']:.4f} val={acc['val']:.4f} test={acc['test']:.4f}")
    print(
        f"test mean over runs: {100 * metrics.test_accuracy_mean:.2f}"
        f" +/- {100 * metrics.test_accuracy_std:.2f}"
    )
    if args.out:
        payload = _metrics_payload(dataset, config, tcfg, metrics)
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
        print(f"metrics written to {args.out}")
    return 0


def cmd_sweep(args) -> int:
    dataset = load_bundle(args.dataset)
    grid = None
    if args.grid:
        grid_path = Path(args.grid)
        if not grid_path.exists():
            raise UsageError(f"grid spec file not found: {grid_path}")
        grid = json.loads(grid_path.read_text())
    result = run_sweep(
        dataset,
        split_index=args.split,
        grid=grid,
        runs=args.runs,
        seed=args.seed,
        relu=args.relu,
        use_bias=args.bias,
        cache_dir=_cache_dir(args),
        allow_large=args.allow_large,
    )
    write_results_csv(args.out, result)
    best = result.rows[result.best_index]
    print(f"swept {len(result.rows)} configurations -> {args.out}")
    print(
        "best: m={m} k={k} q={q} d={d} alpha={alpha} beta={beta} agg={agg} "
        "lr={lr} dropout={dropout} wd={weight_decay} epochs={epochs} "
        "val={val_mean:.4f} test={test_mean:.4f}".format(**best)
    )
    return 0


def cmd_spectrum(args) -> int:
    dataset = load_bundle(args.dataset)
    config = _filter_config(args)
    report = compute_spectrum(config, dataset.adjacency(config.self_loops))
    if args.out:
        emit_spectrum_csv(report, args.out)
        print(f"spectrum written to {args.out} (filter class: {report.filter_class})")
    else:
        buffer = io.StringIO()
        emit_spectrum_csv(report, buffer)
        sys.stdout.write(buffer.getvalue())
    return 0


def _bench_configs(args):
    gp = _filter_config(args)
    sgc = FilterConfig(m=1, k=1, q0=2, q=(1,), d=(0,), alpha=0.0, beta=1.0,
                       aggregation="sum", self_loops=gp.self_loops)
    mlp = FilterConfig(m=1, k=1, q0=0, q=(1,), d=(0,), alpha=1.0, beta=1.0,
                       aggregation="sum", self_loops=gp.self_loops)
    return (("gpnet", gp), ("sgc-reduction", sgc), ("mlp-reduction", mlp))


def cmd_bench(args) -> int:
    dataset = load_bundle(args.dataset)
    masks = select_split(dataset, args.split)
    epochs = BENCH_WARMUP + max(BENCH_EPOCHS, args.epochs)
    rows = []
    for name, config in _bench_configs(args):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # the MLP reduction uses exponent 0
            pf, _ = propagate_cached(config, dataset, _cache_dir(args))
        tcfg = TrainConfig(
            learning_rate=args.lr,
            weight_decay=args.weight_decay,
            dropout_rate=args.dropout,
            epochs=epochs,
            seed=args.seed,
            runs=1,
            relu=args.relu,
            use_bias=args.bias,
        )
        _, metrics = train(pf, dataset.labels, masks, tcfg)
        per_epoch = float(np.median(metrics.epoch_seconds[BENCH_WARMUP:]))
        rows.append({"model": name, "median_epoch_seconds": per_epoch})
        print(f"{name}: {per_epoch * 1e3:.4f} ms/epoch (median of {epochs - BENCH_WARMUP})")
    base = {row["model"]: row["median_epoch_seconds"] for row in rows}
    ratio = base["gpnet"] / base["sgc-reduction"]
    print(f"gpnet / sgc-reduction per-epoch ratio: {ratio:.3f}")
    if args.out:
        payload = {"schema_version": METRICS_SCHEMA_VERSION, "dataset": dataset.name,
                   "rows": rows, "gpnet_sgc_ratio": ratio}
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
    return 0


def cmd_validate_bundle(args) -> int:
    dataset = load_bundle(args.dataset)
    print(f"name: {dataset.name}")
    print(f"nodes: {dataset.n}")
    print(f"edges: {dataset.num_edges}")
    print(f"features: {dataset.num_features}")
    print(f"classes: {dataset.num_classes}")
    print(f"splits: {len(dataset.splits)}")
    print(f"features_row_normalized: {dataset.features_row_normalized}")
    print("OK")
    return 0


_COMMANDS = {
    "precompute": cmd_precompute,
    "train": cmd_train,
    "sweep": cmd_sweep,
    "spectrum": cmd_spectrum,
    "bench": cmd_bench,
    "validate-bundle": cmd_validate_bundle,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except GpnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
