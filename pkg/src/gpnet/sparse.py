"""Sparse and dense linear-algebra primitives for graph operators.

The central type is :class:`SparseMatrix`, a frozen CSR representation of a
square graph operator. Construction symmetrizes and deduplicates edges, so
every operator derived from an undirected edge list is structurally
symmetric. All numerical work is 64-bit; products accumulate in a fixed
order (column order within each row) so repeated runs are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import NumericError, UsageError
from .validation import as_edge_array

DEFAULT_EIGH_CAP = 25_000


@dataclass(frozen=True)
class SparseMatrix:
    """Square CSR matrix.

    Invariants: ``row_offsets`` has length ``n + 1``, starts at 0, ends at
    ``len(values)`` and is non-decreasing; column indices are strictly
    increasing within each row and lie in ``[0, n)``.
    """

    n: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        ro, ci, vals = self.row_offsets, self.col_indices, self.values
        if ro.shape != (self.n + 1,) or ro[0] != 0 or ro[-1] != len(vals):
            raise UsageError("row_offsets inconsistent with stored entries")
        if np.any(np.diff(ro) < 0):
            raise UsageError("row_offsets must be non-decreasing")
        if len(ci) != len(vals):
            raise UsageError("col_indices and values length mismatch")
        if len(ci) and (ci.min() < 0 or ci.max() >= self.n):
            raise UsageError("column index out of range")
        for arr in (ro, ci, vals):
            arr.setflags(write=False)

    @property
    def nnz(self) -> int:
        return len(self.values)

    def to_scipy(self) -> sp.csr_matrix:
        """Scipy CSR over the stored arrays; used as the product kernel."""
        return sp.csr_matrix(
            (self.values, self.col_indices, self.row_offsets), shape=(self.n, self.n)
        )

    @classmethod
    def from_scipy(cls, mat: sp.spmatrix) -> "SparseMatrix":
        if mat.shape[0] != mat.shape[1]:
            raise UsageError(f"operator must be square, got {mat.shape}")
        csr = sp.csr_matrix(mat, dtype=np.float64)
        csr.sum_duplicates()
        csr.sort_indices()
        return cls(
            n=csr.shape[0],
            row_offsets=csr.indptr.astype(np.int64),
            col_indices=csr.indices.astype(np.int64),
            values=csr.data.astype(np.float64),
        )

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def row_degrees(self) -> np.ndarray:
        """Row sums (the degree vector when values are binary)."""
        return self.to_scipy() @ np.ones(self.n, dtype=np.float64)


def build_adjacency(edges, n: int, add_self_loops: bool = True) -> SparseMatrix:
    """Binary adjacency from an undirected edge list.

    Edges are symmetrized and deduplicated; raw self-loops are dropped.
    When ``add_self_loops`` is set, the diagonal is filled with ones
    afterwards.
    """
    if n <= 0:
        raise UsageError(f"node count must be positive, got {n}")
    arr = as_edge_array(edges, n)
    u, v = arr[:, 0], arr[:, 1]
    keep = u != v
    u, v = u[keep], v[keep]
    rows = np.concatenate([u, v])
    cols = np.concatenate([v, u])
    data = np.ones(len(rows), dtype=np.float64)
    coo = sp.coo_matrix((data, (rows, cols)), shape=(n, n))
    csr = coo.tocsr()
    csr.sum_duplicates()
    csr.data[:] = 1.0  # binary regardless of duplicate multiplicity
    if add_self_loops:
        csr = csr + sp.identity(n, format="csr", dtype=np.float64)
    return SparseMatrix.from_scipy(csr)


def degree_vector(adj: SparseMatrix) -> np.ndarray:
    """Per-node degrees, counting a stored self-loop once."""
    return adj.row_degrees()


def sym_normalize(adj: SparseMatrix) -> SparseMatrix:
    """Symmetric normalization: entry (i, j) becomes a_ij / sqrt(d_i d_j).

    Nodes with zero degree get zero rows and columns. That keeps the
    operator finite for isolated nodes, which only occur when self-loops
    are disabled.
    """
    if np.any(adj.values < 0):
        raise UsageError("adjacency must be non-negative")
    deg = adj.row_degrees()
    row_deg = np.repeat(deg, np.diff(adj.row_offsets))
    denom = np.sqrt(row_deg * deg[adj.col_indices])
    values = np.divide(
        adj.values, denom, out=np.zeros_like(adj.values), where=denom > 0
    )
    return SparseMatrix(
        n=adj.n,
        row_offsets=adj.row_offsets.copy(),
        col_indices=adj.col_indices.copy(),
        values=values,
    )


def spmm(S: SparseMatrix, X: np.ndarray) -> np.ndarray:
    """Sparse-dense product S @ X with deterministic accumulation."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != S.n:
        raise UsageError(f"operand rows ({X.shape}) must match operator size {S.n}")
    return S.to_scipy() @ X


def eigh_sym(M: np.ndarray, cap: int = DEFAULT_EIGH_CAP) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric dense matrix.

    Returns eigenvalues in ascending order and the eigenvector matrix U
    with columns matching the eigenvalues. Input must be symmetric within
    1e-10 and no larger than ``cap``.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise UsageError(f"matrix must be square, got shape {M.shape}")
    if M.shape[0] > cap:
        raise UsageError(f"matrix size {M.shape[0]} exceeds eigendecomposition cap {cap}")
    asym = np.max(np.abs(M - M.T)) if M.size else 0.0
    if asym > 1e-10:
        raise NumericError(f"matrix is not symmetric (max |M - M^T| = {asym:.3e})")
    try:
        lam, U = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition failed to converge: {exc}") from exc
    return lam, U
