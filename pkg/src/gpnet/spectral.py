"""Frequency-domain view of the propagation operator.

Every channel operator is a polynomial in the normalized adjacency, so on
the eigenbasis of the normalized Laplacian it acts as a scalar response
per eigenvalue: response(x) = alpha + beta * sum_i (1 - x)^{e_i}. This
module evaluates those responses, classifies them into the usual filter
shapes, verifies convergence of plain power propagation to its stationary
limit, and exports plot-ready CSV data.

Max/min aggregation has no single response curve (element-wise extrema of
matrices do not share an eigenbasis), so reports carry per-channel curves
plus a flag instead of an aggregated curve.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import UsageError
from .filters import FilterConfig, exponent_set
from .sparse import SparseMatrix, eigh_sym, sym_normalize

FILTER_CLASSES = ("low-pass", "high-pass", "all-pass", "mixed")

FLATNESS_TOL = 1e-9  # max-min below this counts as all-pass
BAND_RATIO = 2.0  # low/high band energy ratio for a pass-band verdict
CLASSIFY_GRID_STEP = 0.005


@dataclass(frozen=True)
class SpectrumReport:
    """Responses of one filter config on one graph's spectrum."""

    eigenvalues: np.ndarray
    responses: np.ndarray  # (channels, len(eigenvalues))
    aggregated: np.ndarray | None  # sum/avg only
    channel_classes: tuple[str, ...]
    filter_class: str
    per_channel_only: bool

    def __post_init__(self):
        lam = self.eigenvalues
        if lam.ndim != 1 or self.responses.shape != (len(self.channel_classes), len(lam)):
            raise UsageError("response grid does not match eigenvalues and channels")
        if len(lam) and (lam.min() < -1e-8 or lam.max() > 2.0 + 1e-8):
            raise UsageError("eigenvalues outside [0, 2]")
        if not np.all(np.isfinite(self.responses)):
            raise UsageError("responses must be finite")
        if self.aggregated is not None and self.aggregated.shape != lam.shape:
            raise UsageError("aggregated response length mismatch")
        if self.filter_class not in FILTER_CLASSES:
            raise UsageError(f"filter_class must be one of {FILTER_CLASSES}")


def filter_response(config: FilterConfig, lambdas) -> np.ndarray:
    """Per-channel scalar response at each eigenvalue, shape (m, len(lambdas))."""
    lam = np.asarray(lambdas, dtype=np.float64)
    if lam.ndim != 1:
        raise UsageError("lambdas must be a 1-D vector")
    out = np.empty((config.m, lam.size), dtype=np.float64)
    base = 1.0 - lam
    for c in range(config.m):
        exps = exponent_set(config, c).exponents
        acc = np.zeros_like(lam)
        for p in exps:
            acc += base**p
        out[c] = config.alpha + config.beta * acc
    return out


def aggregate_response(config: FilterConfig, responses: np.ndarray) -> np.ndarray | None:
    """Combined curve for sum/avg; None for max/min (no common eigenbasis)."""
    if config.aggregation == "sum":
        return responses.sum(axis=0)
    if config.aggregation == "avg":
        return responses.mean(axis=0)
    return None


def classify_filter(lambdas, responses) -> str:
    """Operational filter-shape verdict on a dense grid over [0, 2].

    All-pass when the curve is flat to within FLATNESS_TOL. Otherwise the
    verdict compares mean absolute response below eigenvalue 1 against
    above it; a BAND_RATIO advantage either way names the pass band, and
    anything else is mixed.
    """
    lam = np.asarray(lambdas, dtype=np.float64)
    resp = np.asarray(responses, dtype=np.float64)
    if lam.ndim != 1 or resp.shape != lam.shape:
        raise UsageError("classify_filter wants matching 1-D grids")
    if lam.size < 2:
        raise UsageError("grid too small to classify")
    order = np.argsort(lam)
    lam, resp = lam[order], resp[order]
    if lam[0] > 0.01 or lam[-1] < 1.99 or np.max(np.diff(lam)) > 0.01 + 1e-12:
        raise UsageError("classification grid must cover [0, 2] with step <= 0.01")
    if resp.max() - resp.min() < FLATNESS_TOL:
        return "all-pass"
    low = np.abs(resp[lam < 1.0]).mean()
    high = np.abs(resp[lam > 1.0]).mean()
    if low > BAND_RATIO * high:
        return "low-pass"
    if high > BAND_RATIO * low:
        return "high-pass"
    return "mixed"


def stationary_limit(adj: SparseMatrix, per_component: bool = False) -> np.ndarray:
    """Limit of repeated symmetric-normalized propagation.

    Entry (i, j) = sqrt(deg_i * deg_j) / total_degree, where degrees count
    self-loops and total_degree = sum of degrees (= 2 * edges + n when
    every node carries one self-loop). Requires a connected graph unless
    ``per_component`` is set, in which case the limit is block-diagonal
    with each block normalized by its component's degree total.
    """
    deg = adj.row_degrees()
    if np.any(deg <= 0):
        raise UsageError("stationary limit needs every node reachable; add self-loops")
    n_comp, labels = connected_components(adj.to_scipy(), directed=False)
    if n_comp == 1:
        return np.sqrt(np.outer(deg, deg)) / deg.sum()
    if not per_component:
        raise UsageError(
            f"graph has {n_comp} components; pass per_component=True for a block-diagonal limit"
        )
    out = np.zeros((adj.n, adj.n), dtype=np.float64)
    for comp in range(n_comp):
        idx = np.flatnonzero(labels == comp)
        block = np.sqrt(np.outer(deg[idx], deg[idx])) / deg[idx].sum()
        out[np.ix_(idx, idx)] = block
    return out


def compute_spectrum(config: FilterConfig, adj: SparseMatrix) -> SpectrumReport:
    """Full spectral report of a config on a graph's Laplacian spectrum."""
    S = sym_normalize(adj)
    lam, _ = eigh_sym(np.eye(adj.n) - S.to_dense())
    responses = filter_response(config, lam)
    aggregated = aggregate_response(config, responses)

    grid = np.linspace(0.0, 2.0, int(round(2.0 / CLASSIFY_GRID_STEP)) + 1)
    grid_resp = filter_response(config, grid)
    channel_classes = tuple(classify_filter(grid, grid_resp[c]) for c in range(config.m))
    if aggregated is not None:
        filter_class = classify_filter(grid, aggregate_response(config, grid_resp))
    elif len(set(channel_classes)) == 1:
        filter_class = channel_classes[0]
    else:
        filter_class = "mixed"
    return SpectrumReport(
        eigenvalues=lam,
        responses=responses,
        aggregated=aggregated,
        channel_classes=channel_classes,
        filter_class=filter_class,
        per_channel_only=aggregated is None,
    )


def emit_spectrum_csv(report: SpectrumReport, path) -> None:
    """Write rows (lambda, channel, response), sorted by lambda then channel.

    The aggregated curve, when present, follows the numbered channels at
    each eigenvalue under the label "agg".
    """
    m = report.responses.shape[0]
    fh = path if hasattr(path, "write") else open(path, "w", newline="")
    try:
        writer = csv.writer(fh)
        writer.writerow(["lambda", "channel", "response"])
        for i in np.argsort(report.eigenvalues, kind="stable"):
            for c in range(m):
                writer.writerow(
                    [repr(float(report.eigenvalues[i])), c, repr(float(report.responses[c, i]))]
                )
            if report.aggregated is not None:
                writer.writerow(
                    [repr(float(report.eigenvalues[i])), "agg", repr(float(report.aggregated[i]))]
                )
    finally:
        if fh is not path:
            fh.close()
