"""Reconstruction and link-prediction evaluation: splits, scoring, metrics,
and the neighborhood-based baselines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DataError
from .graph import Graph, _build_graph

__all__ = [
    "EdgeSplit",
    "ScoredPairs",
    "split_edges",
    "score_pairs",
    "auc",
    "precision_at_k",
    "enumerate_candidate_pairs",
    "candidate_pair_arrays",
    "sample_negative_pairs",
    "common_neighbors",
    "adamic_adar",
]

_EXACT_AUC_LIMIT = 10 ** 8
_AUC_SAMPLES = 10 ** 7
_ALL_PAIRS_LIMIT = 10 ** 8


@dataclass
class EdgeSplit:
    """A train graph plus the held-out edges that reassemble the original."""

    train: Graph
    test_us: np.ndarray
    test_vs: np.ndarray
    test_ws: np.ndarray
    hidden_fraction: float
    seed: int


@dataclass
class ScoredPairs:
    """Scored unordered node pairs; no duplicates, no self-pairs."""

    us: np.ndarray
    vs: np.ndarray
    scores: np.ndarray

    def __post_init__(self):
        if np.any(self.us == self.vs):
            raise DataError("self-pair in scored pairs")
        lo = np.minimum(self.us, self.vs)
        hi = np.maximum(self.us, self.vs)
        codes = _codes(lo, hi, int(hi.max()) + 1 if len(hi) else 1)
        if len(np.unique(codes)) != len(codes):
            raise DataError("duplicate unordered pair in scored pairs")
        self.us, self.vs = lo, hi

    def __len__(self):
        return len(self.us)

    def top_k(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Highest-scored k pairs, ties broken by (u, v) lexicographic order."""
        order = np.lexsort((self.vs, self.us, -self.scores))[:k]
        return self.us[order], self.vs[order]


def _codes(us, vs, n) -> np.ndarray:
    return us.astype(np.int64) * np.int64(n) + vs.astype(np.int64)


def _edge_code_set(g: Graph) -> np.ndarray:
    us, vs, _ = g.edge_pairs()
    return np.sort(_codes(us, vs, g.n_nodes))


def _contains(sorted_codes: np.ndarray, query: np.ndarray) -> np.ndarray:
    pos = np.searchsorted(sorted_codes, query)
    pos = np.minimum(pos, len(sorted_codes) - 1) if len(sorted_codes) else pos
    if len(sorted_codes) == 0:
        return np.zeros(len(query), dtype=bool)
    return sorted_codes[pos] == query


def split_edges(g: Graph, hidden_fraction: float, seed: int) -> EdgeSplit:
    """Uniformly hide round(fraction * M) edges; the rest form the train
    graph (isolated nodes permitted)."""
    if not (0.0 < hidden_fraction < 1.0):
        raise DataError(f"hidden fraction {hidden_fraction} not in (0, 1)")
    us, vs, ws = g.edge_pairs()
    m = len(us)
    n_hidden = int(round(hidden_fraction * m))
    rng = np.random.default_rng(seed)
    hidden = rng.choice(m, size=n_hidden, replace=False)
    mask = np.zeros(m, dtype=bool)
    mask[hidden] = True
    train = _build_graph(us[~mask], vs[~mask], ws[~mask], g.n_nodes, list(g.labels))
    return EdgeSplit(train, us[mask], vs[mask], ws[mask], hidden_fraction, seed)


def score_pairs(emb, us, vs) -> ScoredPairs:
    """Inner-product similarity of the embedding rows of each pair."""
    us = np.asarray(us, dtype=np.int64)
    vs = np.asarray(vs, dtype=np.int64)
    vectors = emb.vectors if hasattr(emb, "vectors") else np.asarray(emb)
    n = vectors.shape[0]
    if len(us) and (us.min() < 0 or vs.min() < 0 or us.max() >= n or vs.max() >= n):
        raise DataError("pair id out of range")
    scores = np.einsum("ij,ij->i", vectors[us], vectors[vs])
    return ScoredPairs(us, vs, scores)


def auc(positives, negatives, seed: int = 0) -> float:
    """Probability that a random positive outscores a random negative, ties
    counted as half. Exact via rank statistics when |pos| * |neg| <= 1e8,
    otherwise estimated from 1e7 seeded comparison pairs."""
    p = np.asarray(positives, dtype=np.float64).ravel()
    q = np.asarray(negatives, dtype=np.float64).ravel()
    if len(p) == 0 or len(q) == 0:
        raise ValueError("AUC needs non-empty positive and negative scores")
    if len(p) * len(q) <= _EXACT_AUC_LIMIT:
        both = np.concatenate([p, q])
        order = np.argsort(both, kind="mergesort")
        sorted_v = both[order]
        starts = np.r_[0, np.flatnonzero(np.diff(sorted_v)) + 1]
        ends = np.r_[starts[1:], len(both)]
        avg_rank = (starts + ends + 1) / 2.0  # 1-based average rank per tie group
        ranks = np.empty(len(both))
        ranks[order] = np.repeat(avg_rank, ends - starts)
        rank_sum = ranks[: len(p)].sum()
        return float((rank_sum - len(p) * (len(p) + 1) / 2.0) / (len(p) * len(q)))
    return _sampled_auc(p, q, seed)


def _sampled_auc(p: np.ndarray, q: np.ndarray, seed: int) -> float:
    rng = np.random.default_rng(seed)
    a = p[rng.integers(0, len(p), _AUC_SAMPLES)]
    b = q[rng.integers(0, len(q), _AUC_SAMPLES)]
    wins = np.count_nonzero(a > b) + 0.5 * np.count_nonzero(a == b)
    return float(wins / _AUC_SAMPLES)


def precision_at_k(ranked: ScoredPairs, truth, k: int) -> float:
    """Fraction of the k highest-scored pairs that are true edges."""
    if not (1 <= k <= len(ranked)):
        raise ValueError(f"k={k} out of range for {len(ranked)} pairs")
    if isinstance(truth, Graph):
        truth_codes = _edge_code_set(truth)
        n = truth.n_nodes
    else:
        tu, tv = np.asarray(truth[0]), np.asarray(truth[1])
        lo, hi = np.minimum(tu, tv), np.maximum(tu, tv)
        n = int(max(hi.max(initial=0), ranked.vs.max(initial=0))) + 1
        truth_codes = np.sort(_codes(lo, hi, n))
    us, vs = ranked.top_k(k)
    hits = _contains(truth_codes, _codes(us, vs, n))
    return float(np.count_nonzero(hits) / k)


def enumerate_candidate_pairs(g: Graph, mode: str = "all", rate: float = 0.01,
                              seed: int = 0, exclude: Graph | None = None):
    """Yield (us, vs) chunks of unordered candidate pairs, one source row at
    a time. Self-pairs never appear; pairs present in `exclude` are skipped.

    "sampled" mode keeps each pair independently with probability `rate`,
    decided by a seeded hash of (seed, u, v) so the stream is reproducible
    regardless of chunking.
    """
    n = g.n_nodes
    if mode == "all":
        if n * (n - 1) // 2 > _ALL_PAIRS_LIMIT:
            raise DataError("all-pairs enumeration too large; use sampled mode")
    elif mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    for u in range(n - 1):
        vs = np.arange(u + 1, n, dtype=np.int64)
        if mode == "sampled":
            vs = vs[_pair_hash_uniform(seed, u, vs) < rate]
        if exclude is not None and len(vs):
            row = exclude.neighbors(u)
            if len(row):
                pos = np.searchsorted(row, vs)
                pos = np.minimum(pos, len(row) - 1)
                vs = vs[row[pos] != vs]
        if len(vs):
            yield np.full(len(vs), u, dtype=np.int64), vs


def candidate_pair_arrays(g: Graph, **kw) -> tuple[np.ndarray, np.ndarray]:
    """Materialize enumerate_candidate_pairs into flat arrays."""
    us, vs = [], []
    for cu, cv in enumerate_candidate_pairs(g, **kw):
        us.append(cu)
        vs.append(cv)
    if not us:
        e = np.empty(0, dtype=np.int64)
        return e, e.copy()
    return np.concatenate(us), np.concatenate(vs)


def _pair_hash_uniform(seed: int, u: int, vs: np.ndarray) -> np.ndarray:
    """splitmix64-style mix of (seed, u, v) mapped to uniform [0, 1)."""
    with np.errstate(over="ignore"):
        z = vs.astype(np.uint64)
        z += np.uint64((u + 1) * 0x9E3779B97F4A7C15 & 0xFFFFFFFFFFFFFFFF)
        z += np.uint64(seed & 0xFFFFFFFFFFFFFFFF) * np.uint64(0xBF58476D1CE4E5B9)
        z ^= z >> np.uint64(30)
        z *= np.uint64(0xBF58476D1CE4E5B9)
        z ^= z >> np.uint64(27)
        z *= np.uint64(0x94D049BB133111EB)
        z ^= z >> np.uint64(31)
    return (z >> np.uint64(11)) * 2.0 ** -53


def sample_negative_pairs(g: Graph, count: int, seed: int,
                          also_exclude=None) -> tuple[np.ndarray, np.ndarray]:
    """Uniform non-edge pairs (u < v), excluding edges of g and the optional
    extra pair set. Rejection-sampled with a seeded generator."""
    rng = np.random.default_rng(seed)
    excl = _edge_code_set(g)
    if also_exclude is not None:
        eu, ev = np.asarray(also_exclude[0]), np.asarray(also_exclude[1])
        lo, hi = np.minimum(eu, ev), np.maximum(eu, ev)
        excl = np.sort(np.concatenate([excl, _codes(lo, hi, g.n_nodes)]))
    n = g.n_nodes
    count = min(count, n * (n - 1) // 2 - len(excl))
    chosen = np.empty(0, dtype=np.int64)
    while len(chosen) < count:
        k = max(2 * (count - len(chosen)), 1024)
        a = rng.integers(0, n, k)
        b = rng.integers(0, n, k)
        keep = a != b
        a, b = a[keep], b[keep]
        codes = _codes(np.minimum(a, b), np.maximum(a, b), n)
        codes = codes[~_contains(excl, codes)]
        chosen = np.unique(np.concatenate([chosen, codes]))
    if len(chosen) > count:
        chosen = np.sort(chosen[rng.permutation(len(chosen))[:count]])
    return chosen // n, chosen % n


def _binary_adjacency(g: Graph) -> sp.csr_matrix:
    a = g.to_csr().copy()
    a.data = np.ones_like(a.data)
    return a


def _check_pair_ids(g: Graph, us, vs):
    us = np.asarray(us, dtype=np.int64)
    vs = np.asarray(vs, dtype=np.int64)
    if len(us) and (min(us.min(), vs.min()) < 0 or max(us.max(), vs.max()) >= g.n_nodes):
        raise DataError("pair id out of range")
    return us, vs


def common_neighbors(g: Graph, pairs) -> ScoredPairs:
    """|Gamma(u) & Gamma(v)| per pair, via sorted-row intersection."""
    us, vs = _check_pair_ids(g, pairs[0], pairs[1])
    ab = _binary_adjacency(g)
    scores = np.empty(len(us))
    for lo in range(0, len(us), 100_000):
        hi = min(lo + 100_000, len(us))
        inter = ab[us[lo:hi]].multiply(ab[vs[lo:hi]])
        scores[lo:hi] = np.asarray(inter.sum(axis=1)).ravel()
    return ScoredPairs(us, vs, scores)


def adamic_adar(g: Graph, pairs) -> ScoredPairs:
    """Common neighbors weighted by 1 / log(neighbor count); a shared
    neighbor always has at least two neighbors, so the log is positive."""
    us, vs = _check_pair_ids(g, pairs[0], pairs[1])
    counts = g.neighbor_counts().astype(np.float64)
    w = np.zeros(g.n_nodes)
    informative = counts >= 2
    w[informative] = 1.0 / np.log(counts[informative])
    ab = _binary_adjacency(g)
    weighted = ab @ sp.diags(w)
    scores = np.empty(len(us))
    for lo in range(0, len(us), 100_000):
        hi = min(lo + 100_000, len(us))
        inter = ab[us[lo:hi]].multiply(weighted[vs[lo:hi]])
        scores[lo:hi] = np.asarray(inter.sum(axis=1)).ravel()
    return ScoredPairs(us, vs, scores)
