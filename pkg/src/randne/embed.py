"""Seeded Gaussian projection and the iterative high-order embedding.

The projection matrix is drawn column-by-column from counter-based streams
(Philox keyed by seed and column, Box-Muller transform), so any column can be
regenerated in isolation and appending rows continues each column's stream
deterministically. Embeddings are computed by repeated sparse products of the
adjacency matrix against the orthogonalized projection, then combined with
per-order weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg.blas import dgemm, dger

from .errors import NumericError
from .graph import Graph, spmm

__all__ = [
    "RngSpec",
    "Weights",
    "ProjectionState",
    "EmbeddingMatrix",
    "gaussian_matrix",
    "orthogonalize",
    "propagate",
    "embed_static",
    "recombine",
    "grid_search_weights",
    "normalize_rows",
    "default_weight_grid",
]

_MASK64 = (1 << 64) - 1
_PHILOX_WORDS = 4  # Philox4x64 emits 4 uint64 words per counter increment
_INV_2_53 = 2.0 ** -53


@dataclass(frozen=True)
class RngSpec:
    """Deterministic Gaussian source: Philox4x64 keyed by (seed, column),
    two raw words per variate through the Box-Muller transform.

    The variate stream of column j is a pure function of (seed, j),
    independent of how many columns are drawn or in what order.
    """

    seed: int
    algorithm: str = "philox4x64-boxmuller"

    def __post_init__(self):
        if self.algorithm != "philox4x64-boxmuller":
            raise ValueError(f"unknown rng algorithm {self.algorithm!r}")

    def _raws(self, column: int, start: int, count: int) -> np.ndarray:
        key = np.array([self.seed & _MASK64, column], dtype=np.uint64)
        bg = np.random.Philox(key=key)
        bg.advance(start // _PHILOX_WORDS)
        skip = start % _PHILOX_WORDS
        return bg.random_raw(skip + count)[skip:]

    def standard_normals(self, column: int, row_start: int, n_rows: int) -> np.ndarray:
        """N(0,1) variates for rows [row_start, row_start + n_rows) of a column."""
        raw = self._raws(column, 2 * row_start, 2 * n_rows)
        # u1 in (0,1] keeps the log finite; u2 in [0,1)
        u1 = ((raw[0::2] >> np.uint64(11)) + np.uint64(1)) * _INV_2_53
        u2 = (raw[1::2] >> np.uint64(11)) * _INV_2_53
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


@dataclass(frozen=True)
class Weights:
    """Per-order combination coefficients, index 0 .. order."""

    alpha: tuple[float, ...]

    def __init__(self, alpha):
        object.__setattr__(self, "alpha", tuple(float(a) for a in alpha))
        if len(self.alpha) < 2:
            raise ValueError("need coefficients for orders 0 and 1 at least")

    @property
    def order(self) -> int:
        return len(self.alpha) - 1

    def __add__(self, other: "Weights") -> "Weights":
        if self.order != other.order:
            raise ValueError("order mismatch")
        return Weights(tuple(a + b for a, b in zip(self.alpha, other.alpha)))


@dataclass
class ProjectionState:
    """The resumable projection: parts[0] is the orthogonalized Gaussian
    matrix, parts[i] = M @ parts[i-1] where M is the adjacency or transition
    matrix per the normalization tag."""

    n_nodes: int
    dim: int
    order: int
    rng: RngSpec
    normalization: str
    parts: list[np.ndarray]
    weights: Weights | None = None

    def __post_init__(self):
        if len(self.parts) != self.order + 1:
            raise ValueError("need one part per order 0..q")
        for p in self.parts:
            if p.shape != (self.n_nodes, self.dim):
                raise ValueError("part shape mismatch")
            p.flags.writeable = False


@dataclass
class EmbeddingMatrix:
    """Dense embedding with the provenance needed to reproduce it."""

    vectors: np.ndarray
    weights: Weights
    rng: RngSpec
    normalization: str

    @property
    def n_nodes(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def gaussian_matrix(rng: RngSpec, n: int, d: int) -> np.ndarray:
    """i.i.d. N(0, 1/d) matrix, column j reproducible from (seed, j) alone."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    scale = 1.0 / np.sqrt(d)
    out = np.empty((n, d), order="F")
    for j in range(d):
        out[:, j] = rng.standard_normals(j, 0, n) * scale
    return out


_MGS_BLOCK = 4  # column block fits cache for typical node counts


def orthogonalize(r: np.ndarray) -> np.ndarray:
    """Orthonormalize columns with the modified Gram-Schmidt recurrence,
    blocked so the trailing updates run as matrix products instead of
    column-at-a-time sweeps.

    Column j of the result lies in the span of input columns 0..j. Raises
    NumericError when a pivot norm falls below 1e-12.
    """
    r = np.asarray(r, dtype=np.float64)
    if r.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    n, d = r.shape
    if d > n:
        raise ValueError(f"cannot orthonormalize {d} columns in dimension {n}")
    q = np.array(r, order="F", copy=True)
    for b0 in range(0, d, _MGS_BLOCK):
        b1 = min(b0 + _MGS_BLOCK, d)
        for j in range(b0, b1):
            v = q[:, j]
            nrm = np.linalg.norm(v)
            if nrm < 1e-12:
                raise NumericError(
                    f"column {j} is numerically dependent (norm {nrm:.3e})")
            v /= nrm
            if j + 1 < b1:
                rest = q[:, j + 1:b1]
                coef = v @ rest
                out = dger(-1.0, v, coef, a=rest, overwrite_a=1)
                if out is not rest:  # pragma: no cover - rest is F-contiguous
                    rest[...] = out
        if b1 < d:
            block = q[:, b0:b1]
            trail = q[:, b1:]
            coef = block.T @ trail
            out = dgemm(-1.0, block, coef, beta=1.0, c=trail, overwrite_c=1)
            if out is not trail:  # pragma: no cover - trail is F-contiguous
                trail[...] = out
    return np.ascontiguousarray(q)


def propagate(g: Graph, u0: np.ndarray, order: int, normalization: str) -> list[np.ndarray]:
    """Iterate parts[i] = M @ parts[i-1] for i = 1..order from parts[0] = u0."""
    parts = [np.ascontiguousarray(u0)]
    for _ in range(order):
        parts.append(spmm(g, parts[-1], normalization))
    return parts


def embed_static(
    g: Graph,
    dim: int,
    weights: Weights,
    rng: RngSpec,
    normalization: str = "adjacency",
) -> tuple[ProjectionState, EmbeddingMatrix]:
    """Single-shot embedding: seeded projection, orthogonalization, `order`
    sparse products, weighted combination. Deterministic for fixed inputs."""
    if dim > g.n_nodes:
        raise ValueError(f"dim {dim} exceeds node count {g.n_nodes}")
    u0 = orthogonalize(gaussian_matrix(rng, g.n_nodes, dim))
    parts = propagate(g, u0, weights.order, normalization)
    state = ProjectionState(g.n_nodes, dim, weights.order, rng, normalization,
                            parts, weights)
    return state, recombine(state, weights)


def recombine(state: ProjectionState, weights: Weights) -> EmbeddingMatrix:
    """Weighted sum of the stored parts; never recomputes a part."""
    if weights.order != state.order:
        raise ValueError(f"weights order {weights.order} != state order {state.order}")
    acc = state.parts[0] * weights.alpha[0]
    buf = np.empty_like(acc)
    for a, p in zip(weights.alpha[1:], state.parts[1:]):
        np.multiply(p, a, out=buf)
        acc += buf
    return EmbeddingMatrix(acc, weights, state.rng, state.normalization)


def combine_block(parts: list[np.ndarray], alpha, lo: int, hi: int,
                  out: np.ndarray) -> None:
    """Accumulate sum_i alpha[i] * parts[i][:, lo:hi] into out[:, lo:hi] in
    ascending order of i (the same per-entry order as `recombine`)."""
    block = out[:, lo:hi]
    np.multiply(parts[0][:, lo:hi], alpha[0], out=block)
    for a, p in zip(alpha[1:], parts[1:]):
        block += p[:, lo:hi] * a


def normalize_rows(emb: EmbeddingMatrix) -> EmbeddingMatrix:
    """Scale each nonzero row to unit Euclidean norm; zero rows unchanged."""
    v = emb.vectors.copy()
    norms = np.linalg.norm(v, axis=1)
    nz = norms > 0
    v[nz] /= norms[nz, None]
    return EmbeddingMatrix(v, emb.weights, emb.rng, emb.normalization)


def default_weight_grid(order: int = 3) -> list[Weights]:
    """Order-0 coefficient fixed at zero; the rest sweep {0, 0.01, 0.1, 1, 10},
    excluding the all-zero point."""
    from itertools import product

    levels = (0.0, 0.01, 0.1, 1.0, 10.0)
    grid = []
    for combo in product(levels, repeat=order):
        if any(combo):
            grid.append(Weights((0.0,) + combo))
    return grid


def grid_search_weights(state: ProjectionState, grid: list[Weights],
                        validation, metric: str = "auc") -> Weights:
    """Pick the grid point with the best validation metric, recombining the
    stored parts per candidate. Ties keep the earliest grid entry.

    `validation` is an EdgeSplit whose held-out edges serve as positives;
    negatives are non-edge pairs sampled once per split (seeded by the split
    seed) and reused across candidates.
    """
    from . import evaluate

    if not grid:
        raise ValueError("empty weight grid")
    if metric != "auc":
        raise ValueError(f"unsupported metric {metric!r}")
    pos_u, pos_v = validation.test_us, validation.test_vs
    neg_u, neg_v = evaluate.sample_negative_pairs(
        validation.train, count=max(10 * len(pos_u), 1000),
        seed=validation.seed, also_exclude=(pos_u, pos_v),
    )
    best, best_score = None, -np.inf
    for w in grid:
        emb = recombine(state, w)
        pos = evaluate.score_pairs(emb, pos_u, pos_v).scores
        neg = evaluate.score_pairs(emb, neg_u, neg_v).scores
        score = evaluate.auc(pos, neg, seed=validation.seed)
        if score > best_score:
            best, best_score = w, score
    return best
