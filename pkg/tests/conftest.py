import numpy as np
import pytest

from randne.graph import Graph, _build_graph


def graph_from_pairs(pairs, n_nodes) -> Graph:
    """Build a graph from possibly messy (u, v[, w]) tuples: canonicalizes,
    drops self-loops, keeps the first weight of duplicates."""
    seen = {}
    for p in pairs:
        u, v = int(p[0]), int(p[1])
        w = float(p[2]) if len(p) > 2 else 1.0
        if u == v:
            continue
        key = (min(u, v), max(u, v))
        seen.setdefault(key, w)
    if seen:
        us, vs = map(np.asarray, zip(*seen.keys()))
        ws = np.asarray(list(seen.values()))
    else:
        us = vs = np.empty(0, dtype=np.int64)
        ws = np.empty(0)
    return _build_graph(us, vs, ws, n_nodes)


def dense_adjacency(g: Graph) -> np.ndarray:
    a = np.zeros((g.n_nodes, g.n_nodes))
    us, vs, ws = g.edge_pairs()
    a[us, vs] = ws
    a[vs, us] = ws
    return a


@pytest.fixture
def path3() -> Graph:
    """0 - 1 - 2"""
    return graph_from_pairs([(0, 1), (1, 2)], 3)


@pytest.fixture
def star3() -> Graph:
    """center 0 with leaves 1, 2"""
    return graph_from_pairs([(0, 1), (0, 2)], 3)
