import numpy as np
import pytest

from randne import (
    DataError,
    GraphDelta,
    RngSpec,
    Weights,
    apply_delta,
    embed_static,
    extend_for_new_nodes,
    generate_er,
    propagate,
    recombine,
    update,
    update_and_recombine,
)
from conftest import graph_from_pairs


def rel_err(got, want):
    denom = max(np.linalg.norm(want), 1e-300)
    return np.linalg.norm(got - want) / denom


def random_churn(g, n_changes, seed, weight=1.0):
    """Half deletions of existing edges, half insertions of fresh non-edges."""
    rng = np.random.default_rng(seed)
    us, vs, ws = g.edge_pairs()
    n_del = min(n_changes // 2, len(us))
    rm = rng.choice(len(us), n_del, replace=False)
    changes = [(int(us[i]), int(vs[i]), -float(ws[i])) for i in rm]
    have = set(zip(us.tolist(), vs.tolist()))
    while len(changes) < n_changes:
        a, b = (int(x) for x in rng.integers(0, g.n_nodes, 2))
        key = (min(a, b), max(a, b))
        if a != b and key not in have:
            have.add(key)
            changes.append((key[0], key[1], weight))
    return GraphDelta.from_edges(changes)


class TestExtendForNewNodes:
    @pytest.fixture
    def state(self):
        g = generate_er(50, 120, seed=0)
        state, _ = embed_static(g, 8, Weights([1, 1, 1]), RngSpec(7))
        return state

    def test_zero_new_nodes_is_identity(self, state):
        assert extend_for_new_nodes(state, 0) is state

    def test_new_rows_of_higher_parts_are_zero(self, state):
        out = extend_for_new_nodes(state, 5)
        assert out.n_nodes == 55
        for p in out.parts[1:]:
            assert np.array_equal(p[50:], np.zeros((5, 8)))

    def test_old_rows_bitwise_preserved(self, state):
        out = extend_for_new_nodes(state, 5)
        for old, new in zip(state.parts, out.parts):
            assert np.array_equal(old, new[:50])

    def test_extension_batches_compose(self, state):
        # raw-stream regime (total below the embedding dimension)
        once = extend_for_new_nodes(state, 6)
        twice = extend_for_new_nodes(extend_for_new_nodes(state, 2), 4)
        for a, b in zip(once.parts, twice.parts):
            assert np.array_equal(a, b)

    def test_large_block_orthonormalized(self, state):
        out = extend_for_new_nodes(state, 16)  # n_new >= dim
        block = out.parts[0][50:]
        gram = block.T @ block
        assert np.max(np.abs(gram - np.eye(8))) <= 1e-10


class TestUpdate:
    @pytest.fixture
    def setup(self):
        g = generate_er(50, 150, seed=1)
        w = Weights([1.0, 1.0, 0.5])
        state, _ = embed_static(g, 8, w, RngSpec(3))
        return g, w, state

    def test_empty_delta_bitwise_identity(self, setup):
        g, w, state = setup
        out = update(state, g, GraphDelta())
        assert out is state

    def test_single_insertion_matches_rerun(self):
        g = graph_from_pairs([(i, i + 1) for i in range(30)], 31)  # path graph
        w = Weights([1.0, 1.0, 1.0])
        state, _ = embed_static(g, 8, w, RngSpec(5))
        delta = GraphDelta.from_edges([(0, 30, 1.0)])
        out = update(state, g, delta)
        ref, _ = embed_static(apply_delta(g, delta), 8, w, RngSpec(5))
        for i in range(3):
            assert rel_err(out.parts[i], ref.parts[i]) <= 1e-8

    def test_locality_untouched_component_bitwise(self):
        # two components; churn only the second one
        pairs = [(i, i + 1) for i in range(9)]          # component A: 0..9
        pairs += [(10 + i, 10 + i + 1) for i in range(9)]  # component B: 10..19
        g = graph_from_pairs(pairs, 20)
        w = Weights([1.0, 1.0, 1.0])
        state, _ = embed_static(g, 4, w, RngSpec(1))
        delta = GraphDelta.from_edges([(10, 15, 1.0), (11, 19, 1.0)])
        out = update(state, g, delta)
        for i in range(1, 3):
            assert np.array_equal(out.parts[i][:10], state.parts[i][:10])

    def test_batched_churn_matches_rerun(self, setup):
        g, w, state = setup
        delta = random_churn(g, 30, seed=9)
        out = update(state, g, delta)
        g2 = apply_delta(g, delta)
        ref, _ = embed_static(g2, 8, w, RngSpec(3))
        for i in range(3):
            assert rel_err(out.parts[i], ref.parts[i]) <= 1e-8

    def test_sequential_equals_merged(self, setup):
        g, w, state = setup
        d1 = random_churn(g, 10, seed=11)
        g1 = apply_delta(g, d1)
        d2 = random_churn(g1, 10, seed=12)
        s_seq = update(update(state, g, d1), g1, d2)
        emb_seq = recombine(s_seq, w)
        # merged reference: rerun on the final graph with the same seed
        g2 = apply_delta(g1, d2)
        ref, emb_ref = embed_static(g2, 8, w, RngSpec(3))
        assert rel_err(emb_seq.vectors, emb_ref.vectors) <= 1e-8

    def test_node_addition_matches_propagation_reference(self, setup):
        g, w, state = setup
        delta = GraphDelta.from_edges(
            [(50, 0, 1.0), (50, 51, 2.0), (3, 7, 1.0)], n_new_nodes=2)
        out = update(state, g, delta)
        g2 = apply_delta(g, delta)
        ref_parts = propagate(g2, out.parts[0], w.order, "adjacency")
        for i in range(3):
            assert rel_err(out.parts[i], ref_parts[i]) <= 1e-8

    def test_update_and_recombine_composition(self, setup):
        g, w, state = setup
        delta = random_churn(g, 8, seed=21)
        s1, emb1 = update_and_recombine(state, g, delta, w)
        s2 = update(state, g, delta)
        emb2 = recombine(s2, w)
        assert np.array_equal(emb1.vectors, emb2.vectors)

    def test_ten_updates_no_error_aggregation(self):
        g = generate_er(500, 2500, seed=4)
        w = Weights([1.0, 1.0, 1.0, 1.0])
        state, _ = embed_static(g, 16, w, RngSpec(8))
        cur = g
        for t in range(10):
            delta = random_churn(cur, 50, seed=100 + t)
            state = update(state, cur, delta)
            cur = apply_delta(cur, delta)
        ref, _ = embed_static(cur, 16, w, RngSpec(8))
        for i in range(4):
            assert rel_err(state.parts[i], ref.parts[i]) <= 1e-8

    def test_transition_normalization_rejected(self):
        g = generate_er(30, 60, seed=2)
        state, _ = embed_static(g, 4, Weights([1, 1]), RngSpec(0),
                                normalization="transition")
        with pytest.raises(DataError, match="adjacency"):
            update(state, g, GraphDelta.from_edges([(0, 1, 1.0)]))

    def test_shape_mismatch_rejected(self, setup):
        g, w, state = setup
        g_bigger = generate_er(60, 150, seed=6)
        with pytest.raises(ValueError, match="nodes"):
            update(state, g_bigger, GraphDelta.from_edges([(0, 1, 1.0)]))

    def test_out_of_range_delta(self, setup):
        g, w, state = setup
        with pytest.raises(DataError, match="out of range"):
            update(state, g, GraphDelta.from_edges([(0, 99, 1.0)]))

    def test_frontier_sizes_reported(self, setup):
        g, w, state = setup
        stats = {}
        update(state, g, GraphDelta.from_edges([(0, 1, 1.0)]), stats=stats)
        assert len(stats["frontier_sizes"]) == 2
        assert stats["frontier_sizes"][0] >= 2
