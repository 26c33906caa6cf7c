"""Column-partitioned embedding with an in-process worker pool.

Each embedding column's full hop chain depends only on the graph and that
column of the initial projection, so workers own disjoint column ranges and
never communicate: the graph and projection are shared read-only, and every
worker writes only its own columns of the outputs. Results are bitwise
identical for any worker count.
"""

from __future__ import annotations

import os
import queue
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .embed import (
    EmbeddingMatrix,
    ProjectionState,
    RngSpec,
    Weights,
    orthogonalize,
)
from .graph import Graph

__all__ = ["ColumnPartition", "partition_columns", "embed_parallel"]

_CHUNKS_PER_WORKER = 4  # ranges outnumber workers so idle workers keep pulling


@dataclass(frozen=True)
class ColumnPartition:
    """Disjoint contiguous column ranges covering [0, d)."""

    ranges: tuple[tuple[int, int], ...]

    def __iter__(self):
        return iter(self.ranges)

    def __len__(self):
        return len(self.ranges)


def partition_columns(d: int, n_workers: int) -> ColumnPartition:
    """Balanced contiguous ranges, sizes differing by at most one. Emits
    min(n_workers, d) ranges so none is empty."""
    if n_workers < 1:
        raise ValueError("n_workers must be at least 1")
    parts = min(n_workers, d)
    base, extra = divmod(d, parts)
    ranges = []
    lo = 0
    for i in range(parts):
        hi = lo + base + (1 if i < extra else 0)
        ranges.append((lo, hi))
        lo = hi
    return ColumnPartition(tuple(ranges))


def embed_parallel(
    g: Graph,
    dim: int,
    weights: Weights,
    rng: RngSpec,
    normalization: str = "adjacency",
    n_workers: int | None = None,
    ownership_log: list | None = None,
) -> tuple[ProjectionState, EmbeddingMatrix]:
    """Compute the same result as embed_static with a pool of workers.

    Work is split into more column ranges than workers; an idle worker pulls
    the next unclaimed range. `ownership_log`, when given, records
    (thread_name, lo, hi) per processed range for the write-ownership check.
    """
    if n_workers is None:
        n_workers = os.cpu_count() or 1
    if n_workers < 1:
        raise ValueError("n_workers must be at least 1")
    if dim > g.n_nodes:
        raise ValueError(f"dim {dim} exceeds node count {g.n_nodes}")
    n = g.n_nodes
    order = weights.order
    alpha = weights.alpha

    chunks = partition_columns(dim, min(dim, _CHUNKS_PER_WORKER * n_workers))

    # Phase 1: draw the Gaussian matrix, columns in parallel (each column's
    # stream is a pure function of the seed and column index).
    raw = np.empty((n, dim), order="F")
    scale = 1.0 / np.sqrt(dim)

    def fill(lo: int, hi: int):
        for j in range(lo, hi):
            raw[:, j] = rng.standard_normals(j, 0, n) * scale

    _run_chunks(fill, chunks, n_workers, None)

    # Phase 2: orthogonalization couples all columns; single-threaded.
    u0 = orthogonalize(raw)

    # Phase 3: hop chains and combination, workers own disjoint ranges.
    parts = [u0] + [np.empty((n, dim)) for _ in range(order)]
    emb = np.empty((n, dim))
    csr = g.to_csr()
    if normalization == "transition":
        deg = g.degrees()
        inv = np.zeros_like(deg)
        inv[deg > 0] = 1.0 / deg[deg > 0]
    elif normalization == "adjacency":
        inv = None
    else:
        raise ValueError(f"unknown normalization {normalization!r}")

    def chain(lo: int, hi: int):
        x = np.ascontiguousarray(u0[:, lo:hi])
        local = [x]
        for i in range(1, order + 1):
            y = csr @ x
            if inv is not None:
                y *= inv[:, None]
            parts[i][:, lo:hi] = y
            local.append(y)
            x = y
        acc = local[0] * alpha[0]
        for a, block in zip(alpha[1:], local[1:]):
            acc += block * a
        emb[:, lo:hi] = acc

    _run_chunks(chain, chunks, n_workers, ownership_log)

    for p in parts:
        p.flags.writeable = False
    state = ProjectionState(n, dim, order, rng, normalization,
                            parts, weights)
    return state, EmbeddingMatrix(emb, weights, rng, normalization)


def _run_chunks(fn, chunks: ColumnPartition, n_workers: int,
                ownership_log: list | None):
    """Drain the range queue with n_workers threads (one join barrier)."""
    if n_workers == 1 and ownership_log is None:
        for lo, hi in chunks:
            fn(lo, hi)
        return
    work: queue.SimpleQueue = queue.SimpleQueue()
    for r in chunks:
        work.put(r)
    log_lock = threading.Lock()

    def drain():
        while True:
            try:
                lo, hi = work.get_nowait()
            except queue.Empty:
                return
            fn(lo, hi)
            if ownership_log is not None:
                with log_lock:
                    ownership_log.append((threading.current_thread().name, lo, hi))

    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        futures = [pool.submit(drain) for _ in range(n_workers)]
        for f in futures:
            f.result()
