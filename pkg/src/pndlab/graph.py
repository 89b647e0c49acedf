"""Sparse undirected graphs, the self-looped symmetric normalization, and graph metrics.

Graphs are stored in CSR form with every undirected edge present in both
directions.  All arrays are frozen (read-only) after construction so instances
can be shared freely.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import InputError, UndefinedMetricError


def _frozen(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class SparseGraph:
    """Undirected simple graph in CSR form (no stored self-loops)."""

    num_nodes: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    degrees: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "row_ptr", _frozen(self.row_ptr, np.int64))
        object.__setattr__(self, "col_idx", _frozen(self.col_idx, np.int64))
        if self.row_ptr.shape != (self.num_nodes + 1,):
            raise InputError("row_ptr must have num_nodes + 1 entries")
        object.__setattr__(self, "degrees", _frozen(np.diff(self.row_ptr), np.int64))

    @property
    def num_edges(self) -> int:
        """Number of undirected edges."""
        return len(self.col_idx) // 2

    def neighbors(self, i: int) -> np.ndarray:
        return self.col_idx[self.row_ptr[i]:self.row_ptr[i + 1]]

    def edges(self) -> np.ndarray:
        """Undirected edges as an (E, 2) array with u < v, sorted."""
        rows = np.repeat(np.arange(self.num_nodes), self.degrees)
        keep = rows < self.col_idx
        return np.stack([rows[keep], self.col_idx[keep]], axis=1)

    def adjacency(self) -> sp.csr_matrix:
        data = np.ones(len(self.col_idx))
        return sp.csr_matrix((data, self.col_idx, self.row_ptr),
                             shape=(self.num_nodes, self.num_nodes))

    def validate(self) -> None:
        """Check the structural invariants; raises InputError on violation."""
        for i in range(self.num_nodes):
            nb = self.neighbors(i)
            if len(nb) and (np.any(np.diff(nb) <= 0) or np.any(nb == i)):
                raise InputError(f"row {i} is not strictly increasing or has a self-loop")
        a = self.adjacency()
        if (a != a.T).nnz:
            raise InputError("adjacency is not symmetric")


@dataclass(frozen=True, eq=False)
class NormalizedAdjacency:
    """D̂^(-1/2)(A + I)D̂^(-1/2) in CSR form, diagonal entries stored explicitly."""

    num_nodes: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "row_ptr", _frozen(self.row_ptr, np.int64))
        object.__setattr__(self, "col_idx", _frozen(self.col_idx, np.int64))
        object.__setattr__(self, "weights", _frozen(self.weights, np.float64))
        mat = sp.csr_matrix((self.weights, self.col_idx, self.row_ptr),
                            shape=(self.num_nodes, self.num_nodes))
        # scipy must not re-sort or merge; the stored order defines summation order
        mat.has_sorted_indices = True
        object.__setattr__(self, "_mat", mat)

    @property
    def matrix(self) -> sp.csr_matrix:
        return self._mat

    def to_dense(self) -> np.ndarray:
        return self._mat.toarray()


def build_graph(edge_list, num_nodes: int) -> SparseGraph:
    """Deduplicate and symmetrize an edge list; input self-loops are dropped."""
    num_nodes = int(num_nodes)
    if num_nodes < 0:
        raise InputError("num_nodes must be non-negative")
    e = np.asarray(edge_list, dtype=np.int64).reshape(-1, 2)
    if e.size and (e.min() < 0 or e.max() >= num_nodes):
        bad = e[(e < 0).any(axis=1) | (e >= num_nodes).any(axis=1)][0]
        raise InputError(f"edge ({bad[0]}, {bad[1]}) references a node outside [0, {num_nodes})")
    e = e[e[:, 0] != e[:, 1]]
    both = np.concatenate([e, e[:, ::-1]])
    if len(both):
        key = np.unique(both[:, 0] * num_nodes + both[:, 1])
        src, dst = np.divmod(key, num_nodes)
    else:
        src = dst = np.zeros(0, dtype=np.int64)
    row_ptr = np.zeros(num_nodes + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=num_nodes), out=row_ptr[1:])
    return SparseGraph(num_nodes, row_ptr, dst)


def normalized_adjacency(g: SparseGraph) -> NormalizedAdjacency:
    n = g.num_nodes
    # splice the diagonal into each sorted row
    rows = np.repeat(np.arange(n), g.degrees)
    all_rows = np.concatenate([rows, np.arange(n)])
    all_cols = np.concatenate([g.col_idx, np.arange(n)])
    order = np.lexsort((all_cols, all_rows))
    all_rows, all_cols = all_rows[order], all_cols[order]
    dhat = (g.degrees + 1).astype(np.float64)
    w = 1.0 / np.sqrt(dhat[all_rows] * dhat[all_cols])
    row_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(g.degrees + 1, out=row_ptr[1:])
    return NormalizedAdjacency(n, row_ptr, all_cols, w)


def no_selfloop_adjacency(g: SparseGraph) -> NormalizedAdjacency:
    """D^(-1/2) A D^(-1/2) without self-loops; isolated nodes get an empty row."""
    rows = np.repeat(np.arange(g.num_nodes), g.degrees)
    d = g.degrees.astype(np.float64)
    w = 1.0 / np.sqrt(d[rows] * d[g.col_idx])
    return NormalizedAdjacency(g.num_nodes, g.row_ptr, g.col_idx, w)


def _as_matrix(P, name="P") -> np.ndarray:
    P = np.asarray(P, dtype=np.float64)
    if P.ndim == 1:
        P = P[:, None]
    if P.ndim != 2:
        raise InputError(f"{name} must be a 2-D matrix")
    return P


def apply_operator(m: NormalizedAdjacency, P) -> np.ndarray:
    """Exact CSR x dense product, summing each row in ascending column order."""
    P = _as_matrix(P)
    if P.shape[0] != m.num_nodes:
        raise InputError(f"operator has {m.num_nodes} rows, matrix has {P.shape[0]}")
    return np.asarray(m.matrix @ P)


def homophily(g: SparseGraph, labels) -> float:
    """Fraction of undirected edges whose endpoints share a label."""
    labels = np.asarray(labels)
    if labels.shape != (g.num_nodes,):
        raise InputError("labels must have one entry per node")
    if g.num_edges == 0:
        raise UndefinedMetricError("homophily is undefined on an edgeless graph")
    e = g.edges()
    return float(np.mean(labels[e[:, 0]] == labels[e[:, 1]]))


def dirichlet_energy(F, a_norm: NormalizedAdjacency) -> float:
    """tr(Fᵀ (I - Ã) F), without forming the Laplacian."""
    F = _as_matrix(F, "F")
    if F.shape[0] != a_norm.num_nodes:
        raise InputError(f"F has {F.shape[0]} rows, graph has {a_norm.num_nodes} nodes")
    return float(np.sum(F * (F - apply_operator(a_norm, F))))
