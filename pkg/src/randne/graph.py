"""Sparse undirected graphs: loading, validation, deltas, products, generators.

A graph is stored as the symmetric adjacency matrix in compressed sparse row
form. Instances are immutable after construction (the arrays are marked
read-only) and safe to share across concurrent workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DataError

__all__ = [
    "Graph",
    "GraphDelta",
    "load_edge_list",
    "load_delta_file",
    "apply_delta",
    "spmm",
    "generate_er",
    "generate_sbm",
]


@dataclass
class Graph:
    """Symmetric sparse adjacency in CSR form.

    row_offsets has length n_nodes + 1 and its last entry equals 2 * n_edges;
    col_indices are sorted within each row; entry (i, j) is present iff (j, i)
    is present with the same weight; no self-loops, no duplicates.
    """

    n_nodes: int
    n_edges: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray
    labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.labels:
            self.labels = [str(i) for i in range(self.n_nodes)]
        for a in (self.row_offsets, self.col_indices, self.values):
            a.flags.writeable = False
        self._csr = None
        self._degrees = None

    def to_csr(self) -> sp.csr_matrix:
        """Zero-copy scipy view of the adjacency matrix (cached)."""
        if self._csr is None:
            m = sp.csr_matrix(
                (self.values, self.col_indices, self.row_offsets),
                shape=(self.n_nodes, self.n_nodes),
                copy=False,
            )
            m.has_sorted_indices = True
            self._csr = m
        return self._csr

    def degrees(self) -> np.ndarray:
        """Weighted degree (row sums of the adjacency matrix)."""
        if self._degrees is None:
            d = np.asarray(self.to_csr().sum(axis=1)).ravel().astype(np.float64)
            d.flags.writeable = False
            self._degrees = d
        return self._degrees

    def neighbor_counts(self) -> np.ndarray:
        """Number of neighbors per node, ignoring weights."""
        return np.diff(self.row_offsets)

    def neighbors(self, u: int) -> np.ndarray:
        return self.col_indices[self.row_offsets[u]:self.row_offsets[u + 1]]

    def edge_pairs(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All undirected edges as (u, v, w) arrays with u < v."""
        us = np.repeat(np.arange(self.n_nodes), np.diff(self.row_offsets))
        keep = us < self.col_indices
        return us[keep], self.col_indices[keep], self.values[keep]

    def has_edge(self, u: int, v: int) -> bool:
        row = self.neighbors(u)
        i = np.searchsorted(row, v)
        return i < len(row) and row[i] == v

    def equal(self, other: "Graph") -> bool:
        """Entrywise structural equality (ignores labels)."""
        return (
            self.n_nodes == other.n_nodes
            and np.array_equal(self.row_offsets, other.row_offsets)
            and np.array_equal(self.col_indices, other.col_indices)
            and np.array_equal(self.values, other.values)
        )

    def validate(self):
        """Full-scan verification of the structural invariants."""
        off, col, val = self.row_offsets, self.col_indices, self.values
        if len(off) != self.n_nodes + 1 or off[0] != 0:
            raise DataError("row_offsets must have length n_nodes + 1 and start at 0")
        if np.any(np.diff(off) < 0):
            raise DataError("row_offsets must be non-decreasing")
        if off[-1] != 2 * self.n_edges or off[-1] != len(col) or len(col) != len(val):
            raise DataError("entry count inconsistent with n_edges")
        if len(col) == 0:
            return
        if col.min() < 0 or col.max() >= self.n_nodes:
            raise DataError("column index out of range")
        rows = np.repeat(np.arange(self.n_nodes), np.diff(off))
        if np.any(rows == col):
            raise DataError("self-loop present")
        # sortedness and no duplicates within each row
        same_row = rows[1:] == rows[:-1]
        if np.any(same_row & (col[1:] <= col[:-1])):
            raise DataError("col_indices must be strictly increasing within a row")
        # symmetry: the transposed entry list must match exactly
        order = np.lexsort((rows, col))
        if not (np.array_equal(rows, col[order]) and np.array_equal(col, rows[order])
                and np.array_equal(val, val[order])):
            raise DataError("adjacency matrix is not symmetric")
        if np.any(val < 0):
            raise DataError("negative edge weight")


@dataclass
class GraphDelta:
    """A batch of edge weight changes plus nodes appended at the high end.

    Each change is stored once with u < v and applied symmetrically; a
    positive delta_weight inserts or strengthens an edge, a negative one
    weakens or (when it cancels exactly) deletes it. Node deletion is
    expressed as deletion of all incident edges.
    """

    n_new_nodes: int = 0
    us: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    vs: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    dws: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.float64))

    def __post_init__(self):
        self.us = np.asarray(self.us, dtype=np.int64)
        self.vs = np.asarray(self.vs, dtype=np.int64)
        self.dws = np.asarray(self.dws, dtype=np.float64)
        if not (len(self.us) == len(self.vs) == len(self.dws)):
            raise DataError("delta arrays must have equal length")
        if np.any(self.us == self.vs):
            raise DataError("delta contains a self-loop change")
        lo = np.minimum(self.us, self.vs)
        hi = np.maximum(self.us, self.vs)
        self.us, self.vs = lo, hi

    @property
    def n_changes(self) -> int:
        return len(self.us)

    def is_empty(self) -> bool:
        return self.n_new_nodes == 0 and self.n_changes == 0

    def inverse(self) -> "GraphDelta":
        """Edge-only inverse; appended nodes cannot be removed."""
        if self.n_new_nodes:
            raise DataError("a delta that appends nodes has no inverse")
        return GraphDelta(0, self.us.copy(), self.vs.copy(), -self.dws)

    @staticmethod
    def from_edges(changes, n_new_nodes: int = 0) -> "GraphDelta":
        """Build from an iterable of (u, v, delta_weight) tuples."""
        if changes:
            us, vs, dws = map(np.asarray, zip(*changes))
        else:
            us = vs = dws = ()
        return GraphDelta(n_new_nodes, np.asarray(us), np.asarray(vs), np.asarray(dws))


def _build_graph(us, vs, ws, n_nodes, labels=None) -> Graph:
    """Assemble a Graph from unique undirected pairs (u < v, w > 0)."""
    us = np.asarray(us, dtype=np.int64)
    vs = np.asarray(vs, dtype=np.int64)
    ws = np.asarray(ws, dtype=np.float64)
    rows = np.concatenate([us, vs])
    cols = np.concatenate([vs, us])
    vals = np.concatenate([ws, ws])
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    offsets = np.zeros(n_nodes + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n_nodes), out=offsets[1:])
    g = Graph(int(n_nodes), len(us), offsets, cols, vals, labels or [])
    g.validate()
    return g


def load_edge_list(path, weighted: bool = False) -> Graph:
    """Parse a whitespace-separated edge list file.

    Lines are "u v" or "u v w"; '#' starts a comment. The graph is
    symmetrized, duplicate edges keep the first weight seen (counted and
    reported via the returned graph's ``load_report``), and self-loops are
    dropped. Labels are mapped to dense ids in first-appearance order.
    """
    label_to_id: dict[str, int] = {}
    us, vs, ws = [], [], []
    n_self = 0
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as e:
        raise DataError(f"cannot read edge list {path}: {e}") from e
    with fh:
        for lineno, line in enumerate(fh, 1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            tok = body.split()
            if len(tok) not in (2, 3):
                raise DataError(f"{path}:{lineno}: expected 'u v' or 'u v w'")
            if weighted and len(tok) == 3:
                try:
                    w = float(tok[2])
                except ValueError:
                    raise DataError(f"{path}:{lineno}: bad weight {tok[2]!r}") from None
                if not math.isfinite(w) or w <= 0:
                    raise DataError(f"{path}:{lineno}: non-positive weight {w}")
            else:
                w = 1.0
            uid = label_to_id.setdefault(tok[0], len(label_to_id))
            vid = label_to_id.setdefault(tok[1], len(label_to_id))
            if uid == vid:
                n_self += 1
                continue
            us.append(uid)
            vs.append(vid)
            ws.append(w)
    n = len(label_to_id)
    us = np.asarray(us, dtype=np.int64)
    vs = np.asarray(vs, dtype=np.int64)
    ws = np.asarray(ws, dtype=np.float64)
    lo, hi = np.minimum(us, vs), np.maximum(us, vs)
    codes = lo * n + hi
    _, first = np.unique(codes, return_index=True)
    first.sort()
    n_dup = len(codes) - len(first)
    labels = [None] * n
    for lab, i in label_to_id.items():
        labels[i] = lab
    g = _build_graph(lo[first], hi[first], ws[first], n, labels)
    g.load_report = {"duplicates_dropped": int(n_dup), "self_loops_dropped": n_self}
    return g


def load_delta_file(path) -> GraphDelta:
    """Parse a delta file: "+ u v [w]" / "- u v [w]" lines and an optional
    leading "nodes N'" header declaring appended nodes. Node references are
    integer internal ids."""
    n_new = 0
    us, vs, dws = [], [], []
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as e:
        raise DataError(f"cannot read delta file {path}: {e}") from e
    with fh:
        for lineno, line in enumerate(fh, 1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            tok = body.split()
            if tok[0] == "nodes":
                if len(tok) != 2:
                    raise DataError(f"{path}:{lineno}: expected 'nodes N'")
                n_new = int(tok[1])
                continue
            if tok[0] not in ("+", "-") or len(tok) not in (3, 4):
                raise DataError(f"{path}:{lineno}: expected '+ u v [w]' or '- u v [w]'")
            try:
                u, v = int(tok[1]), int(tok[2])
                w = float(tok[3]) if len(tok) == 4 else 1.0
            except ValueError:
                raise DataError(f"{path}:{lineno}: malformed delta line") from None
            if w <= 0:
                raise DataError(f"{path}:{lineno}: non-positive weight {w}")
            us.append(u)
            vs.append(v)
            dws.append(w if tok[0] == "+" else -w)
    return GraphDelta(n_new, np.asarray(us, dtype=np.int64),
                      np.asarray(vs, dtype=np.int64), np.asarray(dws))


def apply_delta(g: Graph, delta: GraphDelta) -> Graph:
    """Apply a batch of edge changes, appending any new nodes.

    Returns a new Graph; raises DataError for out-of-range ids, deletion of
    absent edges, or changes that would leave a negative weight.
    """
    n_new = g.n_nodes + delta.n_new_nodes
    if delta.n_changes:
        if delta.vs.max() >= n_new or delta.us.min() < 0:
            raise DataError("delta references a node id out of range")
    ou, ov, ow = g.edge_pairs()
    us = np.concatenate([ou, delta.us])
    vs = np.concatenate([ov, delta.vs])
    ws = np.concatenate([ow, delta.dws])
    codes = us * np.int64(n_new) + vs
    order = np.argsort(codes, kind="stable")
    codes, us, vs, ws = codes[order], us[order], vs[order], ws[order]
    boundaries = np.flatnonzero(np.diff(codes)) + 1
    starts = np.concatenate([[0], boundaries])
    total = np.add.reduceat(ws, starts) if len(ws) else np.empty(0)
    if np.any(total < 0):
        bad = int(np.argmax(total < 0))
        u, v = int(us[starts[bad]]), int(vs[starts[bad]])
        raise DataError(
            f"delta drives edge ({u},{v}) negative "
            f"(deleting a non-existent edge or over-deleting)"
        )
    keep = total > 0
    labels = list(g.labels) + [str(i) for i in range(g.n_nodes, n_new)]
    return _build_graph(us[starts][keep], vs[starts][keep], total[keep], n_new, labels)


def spmm(g: Graph, x: np.ndarray, normalization: str = "adjacency") -> np.ndarray:
    """Multiply the adjacency matrix (or the row-normalized transition
    matrix) by a dense N x k matrix.

    Per-entry accumulation follows ascending column index, so results are
    identical whether x is a full matrix or any column block of one.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != g.n_nodes:
        raise ValueError(f"x must be 2-D with {g.n_nodes} rows, got {x.shape}")
    y = g.to_csr() @ x
    if normalization == "transition":
        d = g.degrees()
        inv = np.zeros_like(d)
        nz = d > 0
        inv[nz] = 1.0 / d[nz]
        y *= inv[:, None]
    elif normalization != "adjacency":
        raise ValueError(f"unknown normalization {normalization!r}")
    return y


def generate_er(n: int, m: int, seed: int) -> Graph:
    """Uniform random simple graph with exactly m distinct edges."""
    max_m = n * (n - 1) // 2
    if m > max_m:
        raise DataError(f"m={m} exceeds the {max_m} possible edges on {n} nodes")
    rng = np.random.default_rng(seed)
    chosen = np.empty(0, dtype=np.uint64)
    while len(chosen) < m:
        batch = rng.integers(0, max_m, size=max(m - len(chosen), 1024), dtype=np.uint64)
        chosen = np.unique(np.concatenate([chosen, batch]))
    if len(chosen) > m:
        # uniform thinning keeps the sample exchangeable
        chosen = chosen[rng.permutation(len(chosen))[:m]]
        chosen.sort()
    us, vs = _linear_to_pair(chosen, n)
    return _build_graph(us, vs, np.ones(m), n)


def _linear_to_pair(k: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Decode linear indices over the strict upper triangle into (u, v), u < v.

    Index layout: row u owns (n-1-u) consecutive slots starting at
    u*n - u*(u+1)/2.
    """
    k = k.astype(np.float64)
    # solve u from the triangular offsets, then correct rounding
    b = 2 * n - 1
    u = np.floor((b - np.sqrt(b * b - 8.0 * k)) / 2.0).astype(np.int64)
    start = u * (2 * n - u - 1) // 2
    over = start > k.astype(np.int64)
    u[over] -= 1
    start = u * (2 * n - u - 1) // 2
    under = k.astype(np.int64) >= start + (n - 1 - u)
    u[under] += 1
    start = u * (2 * n - u - 1) // 2
    v = k.astype(np.int64) - start + u + 1
    return u, v


def generate_sbm(n: int, blocks: int, p_in: float, p_out: float, seed: int) -> Graph:
    """Planted-partition graph with near-equal blocks (sizes differ by at
    most one when blocks does not divide n)."""
    if not (0.0 <= p_out <= p_in <= 1.0):
        raise DataError("require 0 <= p_out <= p_in <= 1")
    if blocks < 1 or blocks > n:
        raise DataError("blocks must be in [1, n]")
    rng = np.random.default_rng(seed)
    sizes = np.full(blocks, n // blocks, dtype=np.int64)
    sizes[: n % blocks] += 1
    membership = np.repeat(np.arange(blocks), sizes)
    us_all, vs_all = [], []
    # row-by-row Bernoulli keeps memory at O(n) per step
    for u in range(n - 1):
        v = np.arange(u + 1, n)
        p = np.where(membership[v] == membership[u], p_in, p_out)
        hits = v[rng.random(len(v)) < p]
        if len(hits):
            us_all.append(np.full(len(hits), u, dtype=np.int64))
            vs_all.append(hits)
    if us_all:
        us = np.concatenate(us_all)
        vs = np.concatenate(vs_all)
    else:
        us = vs = np.empty(0, dtype=np.int64)
    return _build_graph(us, vs, np.ones(len(us)), n)
