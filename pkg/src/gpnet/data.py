"""Neutral graph-bundle format: load, validate, save.

A bundle directory holds five files:

- ``meta.json``: name, num_nodes, num_edges, num_features, num_classes,
  features_row_normalized.
- ``edges.bin``: little-endian u32 pairs, one record per edge as provided
  upstream. Records are kept verbatim (duplicates and orientation
  included) so conversion is reversible and counts stay auditable; the
  adjacency builder symmetrizes and deduplicates.
- ``features.bin``: little-endian f32, row-major n x d. Widened to f64 in
  memory; the loader never normalizes (the meta flag records whether the
  producer already did).
- ``labels.bin``: little-endian u16, length n.
- ``splits.json``: array of {train, val, test} index lists.

Known dataset names are checked against the published statistics table.
For the citation graphs the table quotes the historical citation-file
edge count, which exceeds the deduplicated pair count recoverable from
the standard pickled distribution, so both counts are accepted.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, UsageError
from .sparse import SparseMatrix, build_adjacency, sym_normalize
from .validation import as_edge_array, as_feature_matrix, as_label_vector

BUNDLE_FILES = ("meta.json", "edges.bin", "features.bin", "labels.bin", "splits.json")

# name -> (nodes, features, classes, accepted edge-record counts)
TABLE1 = {
    "cora": (2708, 1433, 7, (5429, 5278)),
    "citeseer": (3327, 3703, 6, (4732, 4552)),
    "pubmed": (19717, 500, 3, (44338, 44324)),
    "cornell": (183, 1703, 5, (295,)),
    "texas": (183, 1703, 5, (309,)),
    "wisconsin": (251, 1703, 5, (499,)),
    "chameleon": (2277, 2325, 5, (36101,)),
    "squirrel": (5201, 2089, 5, (198493,)),
}


@dataclass(frozen=True)
class Split:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray


@dataclass(frozen=True)
class GraphDataset:
    name: str
    X: np.ndarray
    labels: np.ndarray
    edges: np.ndarray
    splits: tuple[Split, ...]
    num_classes: int
    features_row_normalized: bool = False

    def __post_init__(self):
        X = as_feature_matrix(self.X, "X")
        object.__setattr__(self, "X", X)
        n = X.shape[0]
        if self.num_classes < 1:
            raise UsageError("num_classes must be >= 1")
        object.__setattr__(self, "labels", as_label_vector(self.labels, n, self.num_classes))
        object.__setattr__(self, "edges", as_edge_array(self.edges, n))
        cleaned = []
        for si, split in enumerate(self.splits):
            parts = {}
            for part in ("train", "val", "test"):
                idx = np.asarray(getattr(split, part), dtype=np.int64)
                if idx.ndim != 1:
                    raise UsageError(f"split {si} {part} indices must be 1-D")
                if len(idx) and (idx.min() < 0 or idx.max() >= n):
                    raise DataError(
                        f"split {si} {part} index outside [0, {n})",
                        code="index-out-of-range",
                    )
                parts[part] = idx
            combined = np.concatenate([parts["train"], parts["val"], parts["test"]])
            if len(np.unique(combined)) != len(combined):
                raise DataError(
                    f"split {si} has overlapping train/val/test indices",
                    code="split-overlap",
                )
            cleaned.append(Split(**parts))
        object.__setattr__(self, "splits", tuple(cleaned))
        check_table1(self.name, n, self.num_features, self.num_classes, self.num_edges)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def num_features(self) -> int:
        return self.X.shape[1]

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def adjacency(self, add_self_loops: bool = True) -> SparseMatrix:
        return build_adjacency(self.edges, self.n, add_self_loops=add_self_loops)

    def operator(self, add_self_loops: bool = True) -> SparseMatrix:
        """Symmetric-normalized propagation operator of this graph."""
        return sym_normalize(self.adjacency(add_self_loops=add_self_loops))


def check_table1(name, num_nodes, num_features, num_classes, num_edges) -> None:
    """Validate statistics of a known dataset name; unknown names pass."""
    row = TABLE1.get(str(name).lower())
    if row is None:
        return
    nodes, feats, classes, edge_counts = row
    problems = []
    if num_nodes != nodes:
        problems.append(f"nodes {num_nodes} != published {nodes}")
    if num_features != feats:
        problems.append(f"features {num_features} != published {feats}")
    if num_classes != classes:
        problems.append(f"classes {num_classes} != published {classes}")
    if num_edges not in edge_counts:
        accepted = " or ".join(str(c) for c in edge_counts)
        problems.append(f"edges {num_edges} != published {accepted}")
    if problems:
        raise DataError(
            f"dataset {name!r} statistics mismatch: " + "; ".join(problems),
            code="table1-mismatch",
        )


def load_bundle(directory) -> GraphDataset:
    directory = Path(directory)
    for fname in BUNDLE_FILES:
        if not (directory / fname).exists():
            raise DataError(f"bundle file missing: {directory / fname}", code="missing-file")

    meta = _read_json(directory / "meta.json")
    for key in ("name", "num_nodes", "num_edges", "num_features", "num_classes"):
        if key not in meta:
            raise DataError(f"meta.json missing key {key!r}", code="bad-format")
    n = int(meta["num_nodes"])
    d = int(meta["num_features"])
    num_edges = int(meta["num_edges"])

    raw = (directory / "edges.bin").read_bytes()
    if len(raw) != num_edges * 8:
        raise DataError(
            f"edges.bin is {len(raw)} bytes, expected {num_edges * 8} "
            f"for {num_edges} edges",
            code="count-mismatch",
        )
    edges = np.frombuffer(raw, dtype="<u4").reshape(-1, 2).astype(np.int64)

    raw = (directory / "features.bin").read_bytes()
    if len(raw) != n * d * 4:
        raise DataError(
            f"features.bin is {len(raw)} bytes, expected {n * d * 4} for {n}x{d}",
            code="count-mismatch",
        )
    X = np.frombuffer(raw, dtype="<f4").reshape(n, d).astype(np.float64)

    raw = (directory / "labels.bin").read_bytes()
    if len(raw) != n * 2:
        raise DataError(
            f"labels.bin is {len(raw)} bytes, expected {n * 2}", code="count-mismatch"
        )
    labels = np.frombuffer(raw, dtype="<u2").astype(np.int64)

    raw_splits = _read_json(directory / "splits.json")
    if not isinstance(raw_splits, list):
        raise DataError("splits.json must hold an array of split objects", code="bad-format")
    splits = []
    for si, obj in enumerate(raw_splits):
        if not isinstance(obj, dict) or not {"train", "val", "test"} <= set(obj):
            raise DataError(f"split {si} must carry train/val/test lists", code="bad-format")
        splits.append(
            Split(
                train=np.asarray(obj["train"], dtype=np.int64),
                val=np.asarray(obj["val"], dtype=np.int64),
                test=np.asarray(obj["test"], dtype=np.int64),
            )
        )

    return GraphDataset(
        name=str(meta["name"]),
        X=X,
        labels=labels,
        edges=edges,
        splits=tuple(splits),
        num_classes=int(meta["num_classes"]),
        features_row_normalized=bool(meta.get("features_row_normalized", False)),
    )


def save_bundle(dataset: GraphDataset, directory) -> None:
    """Inverse of load_bundle; identical input bytes on every re-save."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    meta = {
        "name": dataset.name,
        "num_nodes": dataset.n,
        "num_edges": dataset.num_edges,
        "num_features": dataset.num_features,
        "num_classes": dataset.num_classes,
        "features_row_normalized": dataset.features_row_normalized,
    }
    (directory / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    if dataset.num_edges and dataset.edges.max() >= 2**32:
        raise UsageError("edge endpoints exceed the u32 storage range")
    (directory / "edges.bin").write_bytes(
        np.ascontiguousarray(dataset.edges.astype("<u4")).tobytes()
    )
    (directory / "features.bin").write_bytes(
        np.ascontiguousarray(dataset.X.astype("<f4")).tobytes()
    )
    if dataset.labels.size and dataset.labels.max() >= 2**16:
        raise UsageError("labels exceed the u16 storage range")
    (directory / "labels.bin").write_bytes(
        np.ascontiguousarray(dataset.labels.astype("<u2")).tobytes()
    )
    payload = [
        {"train": s.train.tolist(), "val": s.val.tolist(), "test": s.test.tolist()}
        for s in dataset.splits
    ]
    (directory / "splits.json").write_text(json.dumps(payload, sort_keys=True) + "\n")


def select_split(dataset: GraphDataset, split_index: int):
    """Boolean train/val/test masks of one stored split."""
    if not 0 <= split_index < len(dataset.splits):
        raise UsageError(
            f"split {split_index} out of range; dataset has {len(dataset.splits)} splits"
        )
    split = dataset.splits[split_index]
    masks = []
    for idx in (split.train, split.val, split.test):
        m = np.zeros(dataset.n, dtype=bool)
        m[idx] = True
        masks.append(m)
    return tuple(masks)


def _read_json(path: Path):
    try:
        return json.loads(path.read_text())
    except (ValueError, UnicodeDecodeError) as exc:
        raise DataError(f"unparseable JSON in {path}: {exc}", code="bad-format") from exc
