"""Incremental maintenance of a ProjectionState under graph deltas.

Edge changes propagate through the recurrence

    change_i = A @ change_{i-1} + dA @ (part_{i-1} + change_{i-1})

iterated for i = 1..order with change_0 = 0, where A is the pre-delta
adjacency and dA the sparse change matrix. Only rows inside the i-hop
neighborhood of the touched nodes can change, so the work scales with the
churn, not the graph; rows outside the frontier keep their exact bytes.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import DataError
from .graph import Graph, GraphDelta
from .embed import EmbeddingMatrix, ProjectionState, RngSpec, Weights, orthogonalize, recombine

__all__ = ["extend_for_new_nodes", "update", "update_and_recombine"]


def extend_for_new_nodes(state: ProjectionState, n_new: int,
                         rng: RngSpec | None = None) -> ProjectionState:
    """Append n_new rows: the projection part continues each column's seeded
    Gaussian stream, the higher-order parts gain all-zero rows.

    New projection rows are used as drawn when n_new < dim (a block with
    fewer rows than columns cannot have orthonormal columns); when
    n_new >= dim the new block's columns are orthonormalized in isolation.
    """
    if n_new < 0:
        raise ValueError("n_new must be non-negative")
    if n_new == 0:
        return state
    rng = rng or state.rng
    scale = 1.0 / np.sqrt(state.dim)
    block = np.empty((n_new, state.dim), order="F")
    for j in range(state.dim):
        block[:, j] = rng.standard_normals(j, state.n_nodes, n_new) * scale
    if n_new >= state.dim:
        block = orthogonalize(block)
    n_total = state.n_nodes + n_new
    zeros = np.zeros((n_new, state.dim))
    parts = [np.vstack([state.parts[0], block])]
    parts += [np.vstack([p, zeros]) for p in state.parts[1:]]
    return ProjectionState(n_total, state.dim, state.order, rng,
                           state.normalization, parts, state.weights)


def _delta_matrix(delta: GraphDelta, n: int) -> sp.csr_matrix:
    rows = np.concatenate([delta.us, delta.vs])
    cols = np.concatenate([delta.vs, delta.us])
    data = np.concatenate([delta.dws, delta.dws])
    m = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
    m.sum_duplicates()
    m.sort_indices()
    return m


def _extended_csr(g: Graph, n_total: int) -> sp.csr_matrix:
    a = g.to_csr()
    if n_total == g.n_nodes:
        return a
    offsets = np.concatenate([
        g.row_offsets,
        np.full(n_total - g.n_nodes, g.row_offsets[-1], dtype=g.row_offsets.dtype),
    ])
    return sp.csr_matrix((g.values, g.col_indices, offsets), shape=(n_total, n_total))


def _scatter_rows(rows: np.ndarray, block: np.ndarray, n: int, d: int) -> sp.csr_matrix:
    coo_rows = np.repeat(rows, d)
    coo_cols = np.tile(np.arange(d, dtype=np.int64), len(rows))
    return sp.csr_matrix((block.ravel(), (coo_rows, coo_cols)), shape=(n, d))


def update(state: ProjectionState, g_old: Graph, delta: GraphDelta,
           rng: RngSpec | None = None, stats: dict | None = None) -> ProjectionState:
    """Fold a batch of changes into the state without recomputing it.

    Requires the adjacency normalization (degree changes make the transition
    matrix change nonlocally, which this recurrence cannot track). `stats`,
    when given, receives the per-order frontier sizes.
    """
    if state.normalization != "adjacency":
        raise DataError("dynamic updating supports only adjacency normalization")
    if state.n_nodes != g_old.n_nodes:
        raise ValueError(
            f"state has {state.n_nodes} nodes but graph has {g_old.n_nodes}")
    if delta.is_empty():
        if stats is not None:
            stats["frontier_sizes"] = [0] * state.order
        return state
    if delta.n_changes:
        if delta.vs.max() >= g_old.n_nodes + delta.n_new_nodes or delta.us.min() < 0:
            raise DataError("delta references a node id out of range")

    state = extend_for_new_nodes(state, delta.n_new_nodes, rng)
    n = state.n_nodes
    d = state.dim
    a_old = _extended_csr(g_old, n)
    da = _delta_matrix(delta, n)
    touched = np.unique(np.concatenate([delta.us, delta.vs]))
    da_rows = da[touched]

    new_parts = [state.parts[0]]
    change_prev: sp.csr_matrix | None = None
    frontier_sizes = []
    for i in range(1, state.order + 1):
        old_part = state.parts[i - 1]
        # rows of dA hit the pre-update part plus the accumulated change
        dense_rows = da_rows @ old_part
        if change_prev is not None:
            dense_rows += (da_rows @ change_prev).toarray()
        change = _scatter_rows(touched, dense_rows, n, d)
        if change_prev is not None:
            change = change + a_old @ change_prev
        rows = np.flatnonzero(np.diff(change.indptr) > 0)
        frontier_sizes.append(len(rows))
        updated = state.parts[i].copy()
        if len(rows):
            updated[rows] += change[rows].toarray()
        new_parts.append(updated)
        change_prev = change
    if stats is not None:
        stats["frontier_sizes"] = frontier_sizes
    return ProjectionState(n, d, state.order, state.rng, state.normalization,
                           new_parts, state.weights)


def update_and_recombine(state: ProjectionState, g_old: Graph, delta: GraphDelta,
                         weights: Weights, rng: RngSpec | None = None,
                         stats: dict | None = None
                         ) -> tuple[ProjectionState, EmbeddingMatrix]:
    new_state = update(state, g_old, delta, rng=rng, stats=stats)
    return new_state, recombine(new_state, weights)
