"""Multi-channel geometric polynomial filters over a normalized adjacency.

A filter configuration describes ``m`` channels. Channel ``c`` sums powers
of the normalized operator S at exponents in arithmetic progression

    exponents(c) = { i * q[c] + d[c] + q0 : i = 0 .. k-1 }

The channel operator is ``alpha * I + beta * sum_p S^p``. Channels combine
through a parameterless element-wise aggregation (max, min, avg, sum), and
the propagated features are the aggregate applied to the node features:
``H = S_agg @ X``, computed once before any training.

Two execution paths exist. Sum and avg aggregation commute with the final
right-multiplication by X, so those run entirely in feature space and never
build an n x n matrix. Max and min do not commute, so they build channel
matrices, densely for small graphs and by streaming row blocks above
``DENSE_NODE_CAP`` nodes.
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass
from hashlib import blake2b
from pathlib import Path

import numpy as np

from .errors import DataError, NumericError, ResourceError, UsageError
from .sparse import SparseMatrix, spmm
from .validation import as_feature_matrix

AGGREGATIONS = ("max", "min", "avg", "sum")

DENSE_NODE_CAP = 10_000
DEFAULT_BLOCK_ROWS = 512

CACHE_MAGIC = b"GPNETPROPFEATv1\x00"


@dataclass(frozen=True)
class FilterConfig:
    """Hyperparameters of the multi-channel geometric filter.

    ``m`` channels, ``k`` polynomial terms per channel. ``q0`` is the
    shared first-item coefficient, ``q[c]`` the per-channel common ratio
    (>= 1 so exponents strictly increase), ``d[c]`` the per-channel
    neighborhood coefficient. ``alpha`` weights the identity (self) term,
    ``beta`` is the +/-1 sign factor on the polynomial sum.
    """

    m: int = 1
    k: int = 1
    q0: int = 1
    q: tuple[int, ...] = (1,)
    d: tuple[int, ...] = (0,)
    alpha: float = 1.0
    beta: float = 1.0
    aggregation: str = "sum"
    self_loops: bool = True

    def __post_init__(self):
        if not isinstance(self.m, int) or self.m < 1:
            raise UsageError(f"m (channel count) must be an integer >= 1, got {self.m!r}")
        if not isinstance(self.k, int) or self.k < 1:
            raise UsageError(f"k (terms per channel) must be an integer >= 1, got {self.k!r}")
        if not isinstance(self.q0, int) or self.q0 < 0:
            raise UsageError(f"q0 must be an integer >= 0, got {self.q0!r}")
        q = tuple(self.q)
        d = tuple(self.d)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "d", d)
        if len(q) != self.m:
            raise UsageError(f"q must list one common ratio per channel ({self.m}), got {len(q)}")
        if len(d) != self.m:
            raise UsageError(
                f"d must list one neighborhood coefficient per channel ({self.m}), got {len(d)}"
            )
        for c, qc in enumerate(q):
            if not isinstance(qc, int) or qc < 1:
                raise UsageError(f"q[{c}] must be an integer >= 1, got {qc!r}")
        for c, dc in enumerate(d):
            if not isinstance(dc, int) or dc < 0:
                raise UsageError(f"d[{c}] must be an integer >= 0, got {dc!r}")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", float(self.beta))
        if not np.isfinite(self.alpha):
            raise UsageError(f"alpha must be finite, got {self.alpha!r}")
        if self.beta not in (1.0, -1.0):
            raise UsageError(f"beta must be +1 or -1, got {self.beta!r}")
        if self.aggregation not in AGGREGATIONS:
            raise UsageError(
                f"aggregation must be one of {AGGREGATIONS}, got {self.aggregation!r}"
            )
        object.__setattr__(self, "self_loops", bool(self.self_loops))

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "k": self.k,
            "q0": self.q0,
            "q": list(self.q),
            "d": list(self.d),
            "alpha": self.alpha,
            "beta": self.beta,
            "aggregation": self.aggregation,
            "self_loops": self.self_loops,
        }

    def fingerprint(self, dataset_id: str = "") -> str:
        """32-hex-digit key identifying this config applied to a dataset."""
        payload = dict(self.to_dict(), dataset=dataset_id)
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return blake2b(blob.encode("utf-8"), digest_size=16).hexdigest()


@dataclass(frozen=True)
class ExponentSet:
    channel: int
    exponents: tuple[int, ...]

    def __post_init__(self):
        exps = tuple(int(p) for p in self.exponents)
        object.__setattr__(self, "exponents", exps)
        if any(p < 0 for p in exps):
            raise UsageError("exponents must be non-negative")
        if any(b <= a for a, b in zip(exps, exps[1:])):
            raise UsageError("exponents must be strictly increasing")


@dataclass(frozen=True)
class PropagatedFeatures:
    """Precomputed propagated node features plus the config key they came from."""

    H_bar: np.ndarray
    fingerprint: str

    def __post_init__(self):
        if self.H_bar.ndim != 2:
            raise UsageError("propagated features must be a 2-D matrix")
        if not np.all(np.isfinite(self.H_bar)):
            raise NumericError("propagated features contain non-finite entries")
        self.H_bar.setflags(write=False)


def exponent_set(config: FilterConfig, channel: int) -> ExponentSet:
    """Exponents i*q[c] + d[c] + q0 for i = 0..k-1 of one channel.

    The identity power is not part of the list; the self term enters
    separately through alpha. When d[c] + q0 = 0 the list still starts at
    exponent 0, duplicating the identity inside the sum, which is legal
    but usually unintended, so it warns.
    """
    if not 0 <= channel < config.m:
        raise UsageError(f"channel {channel} out of range for m={config.m}")
    base = config.d[channel] + config.q0
    exps = tuple(i * config.q[channel] + base for i in range(config.k))
    if base == 0:
        warnings.warn(
            f"channel {channel} has d+q0 = 0: exponent 0 puts an identity term "
            "inside the polynomial sum in addition to the alpha term",
            stacklevel=2,
        )
    return ExponentSet(channel=channel, exponents=exps)


def channel_sum_features(S: SparseMatrix, exponents, X: np.ndarray) -> np.ndarray:
    """sum_p S^p @ X over the exponent list, by iterated products on X.

    Never materializes a matrix power; performs exactly max(exponents)
    sparse products.
    """
    exps = _as_exponents(exponents)
    X = as_feature_matrix(X, "X")
    if X.shape[0] != S.n:
        raise UsageError(f"X has {X.shape[0]} rows but operator has {S.n}")
    out = np.zeros_like(X)
    cur = X
    if exps[0] == 0:
        out += X
    for p in range(1, exps[-1] + 1):
        cur = spmm(S, cur)
        if p in exps:
            out += cur
    return out


def channel_sum_matrix(
    S: SparseMatrix,
    exponents,
    streaming: bool = False,
    dense_cap: int = DENSE_NODE_CAP,
    block_rows: int = DEFAULT_BLOCK_ROWS,
) -> np.ndarray:
    """Dense sum_p S^p over the exponent list.

    The result is n x n either way; ``streaming`` only changes how it is
    computed (row blocks against identity slabs instead of full dense
    power iteration). Needed by max/min aggregation, which operates on
    matrices rather than features.
    """
    exps = _as_exponents(exponents)
    if S.n > dense_cap and not streaming:
        raise ResourceError(
            f"graph has {S.n} nodes, above the {dense_cap}-node dense cap; "
            "request streaming=True (row-block computation) for max/min "
            "aggregation on graphs this size"
        )
    if not streaming:
        out = np.zeros((S.n, S.n), dtype=np.float64)
        cur = np.eye(S.n, dtype=np.float64)
        if exps[0] == 0:
            out += cur
        for p in range(1, exps[-1] + 1):
            cur = spmm(S, cur)
            if p in exps:
                out += cur
        return out
    out = np.empty((S.n, S.n), dtype=np.float64)
    for start, block in _iter_row_blocks(S, exps, block_rows):
        out[start : start + block.shape[0]] = block
    return out


def apply_alpha_beta(channel_sum: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    """Channel operator alpha * I + beta * channel_sum."""
    M = np.asarray(channel_sum, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise UsageError(f"channel sum must be square, got shape {M.shape}")
    out = float(beta) * M
    idx = np.arange(M.shape[0])
    out[idx, idx] += float(alpha)
    return out


def aggregate(channels: list[np.ndarray], mode: str) -> np.ndarray:
    """Element-wise max / min / mean / sum across channel matrices.

    Sum and avg accumulate in a canonical order (channels sorted by raw
    bytes) so the result is exactly invariant to channel permutation even
    though float addition is not associative. Max and min are order-free
    up to the sign of zero, which compares equal anyway.
    """
    if mode not in AGGREGATIONS:
        raise UsageError(f"aggregation must be one of {AGGREGATIONS}, got {mode!r}")
    if not channels:
        raise UsageError("aggregate needs at least one channel")
    mats = [np.asarray(c, dtype=np.float64) for c in channels]
    shape = mats[0].shape
    if any(m.shape != shape for m in mats):
        raise UsageError("all channels must have the same shape")
    if len(mats) == 1:
        return mats[0].copy()
    if mode == "max":
        out = mats[0].copy()
        for m in mats[1:]:
            np.maximum(out, m, out=out)
        return out
    if mode == "min":
        out = mats[0].copy()
        for m in mats[1:]:
            np.minimum(out, m, out=out)
        return out
    total = _canonical_sum(mats)
    if mode == "sum":
        return total
    total /= len(mats)
    return total


def propagate(
    config: FilterConfig,
    S: SparseMatrix,
    X: np.ndarray,
    dataset_id: str = "",
    dense_cap: int = DENSE_NODE_CAP,
    block_rows: int = DEFAULT_BLOCK_ROWS,
) -> PropagatedFeatures:
    """Propagated features H = aggregate_c(alpha*I + beta*f_c(S)) @ X.

    Sum aggregation expands to m*alpha*X + beta * sum_c f_c(S) X, avg to
    alpha*X + (beta/m) * sum_c f_c(S) X; both run in feature space. The
    alpha addition is skipped entirely when alpha is 0 so those configs
    reproduce plain power propagation bit-for-bit. Max/min build channel
    matrices, streaming in row blocks past ``dense_cap`` nodes.
    """
    X = as_feature_matrix(X, "X")
    if X.shape[0] != S.n:
        raise UsageError(f"X has {X.shape[0]} rows but operator has {S.n}")
    exps = [exponent_set(config, c).exponents for c in range(config.m)]
    if config.aggregation in ("sum", "avg"):
        parts = [channel_sum_features(S, e, X) for e in exps]
        total = _canonical_sum(parts)
        if config.aggregation == "sum":
            H = total if config.beta == 1.0 else -total
            if config.alpha != 0.0:
                H = H + (config.m * config.alpha) * X
        else:
            H = (config.beta / config.m) * total
            if config.alpha != 0.0:
                H = H + config.alpha * X
    elif S.n <= dense_cap:
        ext = None
        for e in exps:
            G = apply_alpha_beta(
                channel_sum_matrix(S, e, dense_cap=dense_cap), config.alpha, config.beta
            )
            if ext is None:
                ext = G
            elif config.aggregation == "max":
                np.maximum(ext, G, out=ext)
            else:
                np.minimum(ext, G, out=ext)
        H = ext @ X
    else:
        H = _propagate_streaming(config, S, X, exps, block_rows)
    if not np.all(np.isfinite(H)):
        raise NumericError("propagation produced non-finite values")
    return PropagatedFeatures(H_bar=H, fingerprint=config.fingerprint(dataset_id))


def _propagate_streaming(config, S, X, exps, block_rows):
    # one row-block slab per channel lives at a time, plus the running extrema
    reduce_fn = np.maximum if config.aggregation == "max" else np.minimum
    H = np.empty((S.n, X.shape[1]), dtype=np.float64)
    per_channel = [_iter_row_blocks(S, e, block_rows) for e in exps]
    for blocks in zip(*per_channel):
        start = blocks[0][0]
        ext = None
        for (_, F) in blocks:
            G = config.beta * F
            rows = np.arange(G.shape[0])
            G[rows, start + rows] += config.alpha
            ext = G if ext is None else reduce_fn(ext, G, out=ext)
        H[start : start + ext.shape[0]] = ext @ X
    return H


def _iter_row_blocks(S: SparseMatrix, exps: tuple[int, ...], block_rows: int):
    """Yield (start_row, rows of sum_p S^p) in fixed-size row blocks.

    Row i of S^p is e_i^T S^p, built by right-multiplying an identity slab,
    so memory stays at one block x n slab regardless of graph size.
    """
    if block_rows < 1:
        raise UsageError(f"block_rows must be >= 1, got {block_rows}")
    ST = S.to_scipy().T.tocsr()
    for start in range(0, S.n, block_rows):
        stop = min(start + block_rows, S.n)
        slab = np.zeros((stop - start, S.n), dtype=np.float64)
        slab[np.arange(stop - start), np.arange(start, stop)] = 1.0
        acc = np.zeros_like(slab)
        if exps[0] == 0:
            acc += slab
        for p in range(1, exps[-1] + 1):
            slab = (ST @ slab.T).T
            if p in exps:
                acc += slab
        yield start, acc


def _as_exponents(exponents) -> tuple[int, ...]:
    if isinstance(exponents, ExponentSet):
        return exponents.exponents
    exps = tuple(int(p) for p in exponents)
    if not exps:
        raise UsageError("exponent list must not be empty")
    if any(p < 0 for p in exps):
        raise UsageError("exponents must be non-negative")
    if any(b <= a for a, b in zip(exps, exps[1:])):
        raise UsageError("exponents must be strictly increasing")
    return exps


def _canonical_sum(mats: list[np.ndarray]) -> np.ndarray:
    """Sum in byte-sorted order: exact permutation invariance for m >= 3."""
    if len(mats) == 1:
        return mats[0].copy()
    ordered = sorted(mats, key=lambda m: m.tobytes())
    out = ordered[0].copy()
    for m in ordered[1:]:
        out += m
    return out


def save_propagated(path, pf: PropagatedFeatures) -> None:
    """Write the cache file: magic, n, d, fingerprint, row-major f64 LE."""
    H = np.ascontiguousarray(pf.H_bar, dtype="<f8")
    n, d = H.shape
    fp = pf.fingerprint.encode("ascii")
    if len(fp) != 32:
        raise UsageError(f"fingerprint must be 32 hex digits, got {pf.fingerprint!r}")
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<QQ", n, d))
        fh.write(fp)
        fh.write(H.tobytes(order="C"))


def load_propagated(path, expected_fingerprint: str | None = None) -> PropagatedFeatures:
    """Read a cache file back; optionally require a specific fingerprint."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"cache file not found: {path}", code="missing-file")
    raw = path.read_bytes()
    header = len(CACHE_MAGIC) + 16 + 32
    if len(raw) < header:
        raise DataError(f"cache file truncated: {path}", code="count-mismatch")
    if raw[: len(CACHE_MAGIC)] != CACHE_MAGIC:
        raise DataError(f"not a propagated-features cache file: {path}", code="bad-magic")
    n, d = struct.unpack_from("<QQ", raw, len(CACHE_MAGIC))
    fp = raw[len(CACHE_MAGIC) + 16 : header].decode("ascii", errors="replace")
    if not all(ch in "0123456789abcdef" for ch in fp):
        raise DataError(f"corrupt fingerprint in cache file: {path}", code="bad-magic")
    body = raw[header:]
    if len(body) != n * d * 8:
        raise DataError(
            f"cache payload is {len(body)} bytes, expected {n * d * 8} for {n}x{d}",
            code="count-mismatch",
        )
    if expected_fingerprint is not None and fp != expected_fingerprint:
        raise DataError(
            f"cache fingerprint {fp} does not match expected {expected_fingerprint}",
            code="fingerprint-mismatch",
        )
    H = np.frombuffer(body, dtype="<f8").reshape(n, d).astype(np.float64)
    return PropagatedFeatures(H_bar=H, fingerprint=fp)
