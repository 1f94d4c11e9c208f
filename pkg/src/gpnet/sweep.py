"""Exhaustive hyperparameter sweeps with cached propagation.

A grid spec is a mapping from flag name to a list of candidate values;
any flag left out falls back to the published search menu (model depth,
rates, epochs) or the published fixed value (q0, alpha, beta). Channel
exponent parameters q and d default to the per-channel menus, expanded
to every combination for each channel count in the grid.

Selection is by mean validation accuracy across runs, never test
accuracy. Exact ties break toward fewer filter degrees of freedom, then
smaller k, then enumeration order.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classifier import TrainConfig, train
from .data import GraphDataset, select_split
from .errors import UsageError
from .filters import FilterConfig, load_propagated, propagate, save_propagated

# Published search menus. Channel menus are indexed by channel position:
# the first channel always uses offset 0, the third always uses step 6.
LEARNING_RATES = (0.0003, 0.01, 0.05, 0.1)
DROPOUT_RATES = (0.0, 0.1, 0.3, 0.8, 0.95)
WEIGHT_DECAYS = (1e-10, 1e-7, 7e-6, 5e-5, 6e-5, 1e-4, 2e-4, 5e-4, 6e-3)
EPOCH_CHOICES = (700, 800, 1000, 1200, 2000, 2200, 5000, 7000, 50000)
K_CHOICES = (2, 3, 4, 5, 7, 8, 9, 13)
M_CHOICES = (2, 3)
CHANNEL_Q_MENU = ((2, 4, 5), (2, 5, 6), (6,))
CHANNEL_D_MENU = ((0,), (1, 3), (6, 9))

MAX_GRID_DEFAULT = 512

GRID_KEYS = (
    "m", "k", "q0", "q", "d", "alpha", "beta", "agg", "self_loops",
    "lr", "dropout", "weight_decay", "epochs",
)


def default_grid() -> dict:
    """The full published search space (q and d derived per channel count)."""
    return {
        "m": list(M_CHOICES),
        "k": list(K_CHOICES),
        "q0": [1],
        "alpha": [1.0],
        "beta": [1.0],
        "agg": ["sum"],
        "self_loops": [True],
        "lr": list(LEARNING_RATES),
        "dropout": list(DROPOUT_RATES),
        "weight_decay": list(WEIGHT_DECAYS),
        "epochs": list(EPOCH_CHOICES),
    }


def channel_combinations(m: int):
    """All (q, d) tuples for m channels drawn from the per-channel menus."""
    if m > len(CHANNEL_Q_MENU):
        raise UsageError(
            f"no default channel menu for m={m}; supply explicit q and d lists"
        )
    qs = list(itertools.product(*CHANNEL_Q_MENU[:m]))
    ds = list(itertools.product(*CHANNEL_D_MENU[:m]))
    return [(q, d) for q in qs for d in ds]


@dataclass(frozen=True)
class SweepPoint:
    filter_config: FilterConfig
    learning_rate: float
    weight_decay: float
    dropout_rate: float
    epochs: int


def enumerate_grid(spec: dict | None = None) -> list[SweepPoint]:
    """Expand a grid spec into deduplicated points in a stable order."""
    grid = default_grid()
    if spec:
        unknown = set(spec) - set(GRID_KEYS)
        if unknown:
            raise UsageError(f"unknown grid keys: {sorted(unknown)}")
        for key, values in spec.items():
            if not isinstance(values, (list, tuple)) or not values:
                raise UsageError(f"grid entry {key!r} must be a non-empty list")
            grid[key] = list(values)

    explicit_q = grid.get("q")
    explicit_d = grid.get("d")
    points, seen = [], set()
    for m in grid["m"]:
        if explicit_q is None and explicit_d is None:
            channel_choices = channel_combinations(m)
        else:
            q_choices = [tuple(q) for q in (explicit_q or [])] or [
                q for q, _ in channel_combinations(m)
            ]
            d_choices = [tuple(d) for d in (explicit_d or [])] or [
                d for _, d in channel_combinations(m)
            ]
            channel_choices = [
                (q, d)
                for q in q_choices
                for d in d_choices
                if len(q) == m and len(d) == m
            ]
        for k, q0, (q, d), alpha, beta, agg, loops in itertools.product(
            grid["k"], grid["q0"], channel_choices,
            grid["alpha"], grid["beta"], grid["agg"], grid["self_loops"],
        ):
            fc = FilterConfig(
                m=m, k=k, q0=q0, q=q, d=d, alpha=alpha, beta=beta,
                aggregation=agg, self_loops=loops,
            )
            for lr, dropout, wd, epochs in itertools.product(
                grid["lr"], grid["dropout"], grid["weight_decay"], grid["epochs"]
            ):
                point = SweepPoint(fc, lr, wd, dropout, epochs)
                if point not in seen:
                    seen.add(point)
                    points.append(point)
    if not points:
        raise UsageError("grid is empty; check that q/d lengths match some m")
    return points


def filter_dof(config: FilterConfig) -> int:
    """Scalar degrees of freedom in the filter: per-channel (q, d) plus globals."""
    return 2 * config.m + 4


def propagate_cached(config, dataset: GraphDataset, cache_dir=None):
    """Propagate with an on-disk cache keyed by dataset name and config.

    Returns (features, hit). A cache_dir of None disables caching.
    """
    if cache_dir is None:
        return propagate(config, dataset.operator(config.self_loops), dataset.X,
                         dataset_id=dataset.name), False
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    fp = config.fingerprint(dataset.name)
    path = cache_dir / f"{dataset.name}-{fp}.gpf"
    if path.exists():
        return load_propagated(path, expected_fingerprint=fp), True
    pf = propagate(config, dataset.operator(config.self_loops), dataset.X,
                   dataset_id=dataset.name)
    save_propagated(path, pf)
    return pf, False


@dataclass(frozen=True)
class SweepResult:
    points: tuple
    rows: tuple              # one dict per point, same order
    best_index: int

    @property
    def best(self) -> SweepPoint:
        return self.points[self.best_index]


def run_sweep(
    dataset: GraphDataset,
    split_index: int = 0,
    grid: dict | None = None,
    *,
    runs: int = 10,
    seed: int = 0,
    relu: bool = False,
    use_bias: bool = False,
    cache_dir=None,
    allow_large: bool = False,
    max_grid: int = MAX_GRID_DEFAULT,
    progress=None,
) -> SweepResult:
    points = enumerate_grid(grid)
    if len(points) > max_grid and not allow_large:
        raise UsageError(
            f"grid has {len(points)} configurations (limit {max_grid}); "
            "pass --allow-large to run it anyway"
        )
    masks = select_split(dataset, split_index)
    rows = []
    best_key, best_index = None, -1
    for index, point in enumerate(points):
        pf, _ = propagate_cached(point.filter_config, dataset, cache_dir)
        config = TrainConfig(
            learning_rate=point.learning_rate,
            weight_decay=point.weight_decay,
            dropout_rate=point.dropout_rate,
            epochs=point.epochs,
            seed=seed,
            runs=runs,
            relu=relu,
            use_bias=use_bias,
        )
        _, metrics = train(pf, dataset.labels, masks, config)
        row = point_row(point)
        row.update(
            val_mean=float(np.mean(metrics.run_val_accuracies)),
            val_std=float(np.std(metrics.run_val_accuracies)),
            test_mean=metrics.test_accuracy_mean,
            test_std=metrics.test_accuracy_std,
        )
        rows.append(row)
        # lower key wins; enumeration index is the final tie-breaker
        key = (-row["val_mean"], filter_dof(point.filter_config), point.filter_config.k, index)
        if best_key is None or key < best_key:
            best_key, best_index = key, index
        if progress is not None:
            progress(index, len(points), row)
    return SweepResult(points=tuple(points), rows=tuple(rows), best_index=best_index)


CSV_COLUMNS = (
    "index", "m", "k", "q0", "q", "d", "alpha", "beta", "agg", "self_loops",
    "lr", "dropout", "weight_decay", "epochs",
    "val_mean", "val_std", "test_mean", "test_std", "best",
)


def point_row(point: SweepPoint) -> dict:
    fc = point.filter_config
    return {
        "m": fc.m,
        "k": fc.k,
        "q0": fc.q0,
        "q": ";".join(str(v) for v in fc.q),
        "d": ";".join(str(v) for v in fc.d),
        "alpha": fc.alpha,
        "beta": fc.beta,
        "agg": fc.aggregation,
        "self_loops": fc.self_loops,
        "lr": point.learning_rate,
        "dropout": point.dropout_rate,
        "weight_decay": point.weight_decay,
        "epochs": point.epochs,
    }


def write_results_csv(path, result: SweepResult) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for index, row in enumerate(result.rows):
            out = dict(row, index=index, best=int(index == result.best_index))
            writer.writerow(out)
