"""Sparse matrices used as constant message-passing operators.

A thin, immutable wrapper over CSR storage.  Only the products needed by the
graph layers are exposed; gradients never flow *into* a sparse matrix (the
adjacency structure is data, not a parameter).
"""

from __future__ import annotations

import numpy as np
from scipy import sparse as _sp


class SparseMatrix:
    """Immutable sparse matrix built from (row, col, value) triples."""

    def __init__(self, rows, cols, values, shape: tuple[int, int]):
        rows = np.asarray(rows, dtype=np.intp)
        cols = np.asarray(cols, dtype=np.intp)
        values = np.asarray(values, dtype=np.float64)
        if not (rows.shape == cols.shape == values.shape):
            raise ValueError("rows, cols and values must have equal length")
        if rows.size:
            if rows.min() < 0 or rows.max() >= shape[0]:
                raise ValueError("row index out of range")
            if cols.min() < 0 or cols.max() >= shape[1]:
                raise ValueError("col index out of range")
            flat = rows * shape[1] + cols
            if np.unique(flat).size != flat.size:
                raise ValueError("duplicate (row, col) entries")
        self._csr = _sp.csr_matrix((values, (rows, cols)), shape=shape)
        self.shape = shape

    @classmethod
    def _from_csr(cls, csr) -> "SparseMatrix":
        obj = cls.__new__(cls)
        obj._csr = csr
        obj.shape = csr.shape
        return obj

    @property
    def nnz(self) -> int:
        return int(self._csr.nnz)

    def matmul(self, dense: np.ndarray) -> np.ndarray:
        out = self._csr @ dense
        return np.asarray(out, dtype=np.float64)

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix._from_csr(self._csr.T.tocsr())

    def to_dense(self) -> np.ndarray:
        return np.asarray(self._csr.todense(), dtype=np.float64)


def normalized_adjacency(
    edges: np.ndarray,
    weights: np.ndarray | None,
    n_nodes: int,
    add_reverse: bool = True,
) -> SparseMatrix:
    """Symmetric degree-normalized adjacency D^-1/2 A D^-1/2.

    ``edges`` is an (m, 2) array of node pairs; each undirected edge is
    materialized in both directions when ``add_reverse`` is set.  Degree is
    the weighted degree within this relation only; isolated nodes simply get
    all-zero rows.
    """
    edges = np.asarray(edges, dtype=np.intp).reshape(-1, 2)
    if weights is None:
        weights = np.ones(edges.shape[0], dtype=np.float64)
    else:
        weights = np.asarray(weights, dtype=np.float64)
    if add_reverse:
        fwd, rev = edges, edges[:, ::-1]
        keep = fwd[:, 0] != fwd[:, 1]  # do not double self-edges
        rows = np.concatenate([fwd[:, 0], rev[keep, 0]])
        cols = np.concatenate([fwd[:, 1], rev[keep, 1]])
        vals = np.concatenate([weights, weights[keep]])
    else:
        rows, cols, vals = edges[:, 0], edges[:, 1], weights

    # With both directions stored, the weighted row sum is the degree.
    degree = np.zeros(n_nodes, dtype=np.float64)
    np.add.at(degree, rows, vals)

    inv_sqrt = np.zeros(n_nodes, dtype=np.float64)
    nz = degree > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(degree[nz])
    norm_vals = vals * inv_sqrt[rows] * inv_sqrt[cols]
    return SparseMatrix(rows, cols, norm_vals, (n_nodes, n_nodes))
