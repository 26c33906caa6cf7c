import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from randne import (
    DataError,
    GraphDelta,
    apply_delta,
    generate_er,
    generate_sbm,
    load_delta_file,
    load_edge_list,
    spmm,
)
from conftest import dense_adjacency, graph_from_pairs


def write_edges(tmp_path, text, name="g.edges"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestLoadEdgeList:
    def test_two_edge_path(self, tmp_path):
        g = load_edge_list(write_edges(tmp_path, "0 1\n1 2\n"))
        assert g.n_nodes == 3
        assert g.n_edges == 2
        assert g.neighbor_counts()[g.labels.index("1")] == 2

    def test_symmetry_dedup(self, tmp_path):
        g = load_edge_list(write_edges(tmp_path, "0 1\n1 0\n"))
        assert g.n_edges == 1
        assert g.load_report["duplicates_dropped"] == 1

    def test_self_loop_dropped(self, tmp_path):
        g = load_edge_list(write_edges(tmp_path, "5 5\n"))
        assert g.n_edges == 0
        assert g.load_report["self_loops_dropped"] == 1

    def test_duplicate_keeps_first_weight(self, tmp_path):
        g = load_edge_list(write_edges(tmp_path, "a b 2.0\nb a 7.0\n"), weighted=True)
        assert g.n_edges == 1
        assert g.values[0] == 2.0

    def test_comments_and_blanks(self, tmp_path):
        g = load_edge_list(write_edges(tmp_path, "# header\n\n0 1  # trailing\n"))
        assert g.n_edges == 1

    def test_labels_first_appearance(self, tmp_path):
        g = load_edge_list(write_edges(tmp_path, "x y\ny z\n"))
        assert g.labels == ["x", "y", "z"]

    def test_malformed_line_reports_number(self, tmp_path):
        with pytest.raises(DataError, match=":2:"):
            load_edge_list(write_edges(tmp_path, "0 1\n0 1 2 3\n"))

    def test_negative_weight_rejected(self, tmp_path):
        with pytest.raises(DataError, match="weight"):
            load_edge_list(write_edges(tmp_path, "0 1 -2\n"), weighted=True)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_edge_list(tmp_path / "nope.edges")


class TestApplyDelta:
    def test_append_node_and_edge(self, path3):
        delta = GraphDelta.from_edges([(2, 3, 1.0)], n_new_nodes=1)
        g = apply_delta(path3, delta)
        assert g.n_nodes == 4
        assert g.n_edges == 3
        assert g.has_edge(2, 3)

    def test_remove_edge_leaves_isolated_node(self, path3):
        g = apply_delta(path3, GraphDelta.from_edges([(0, 1, -1.0)]))
        assert g.n_nodes == 3
        assert g.n_edges == 1
        assert g.neighbor_counts()[0] == 0

    def test_empty_delta_is_identity(self, path3):
        g = apply_delta(path3, GraphDelta())
        assert g.equal(path3)

    def test_out_of_range_id(self, path3):
        with pytest.raises(DataError, match="out of range"):
            apply_delta(path3, GraphDelta.from_edges([(0, 7, 1.0)]))

    def test_delete_missing_edge(self, path3):
        with pytest.raises(DataError, match="negative"):
            apply_delta(path3, GraphDelta.from_edges([(0, 2, -1.0)]))

    def test_over_deletion(self, path3):
        with pytest.raises(DataError, match="negative"):
            apply_delta(path3, GraphDelta.from_edges([(0, 1, -2.0)]))

    def test_weight_accumulates(self, path3):
        g = apply_delta(path3, GraphDelta.from_edges([(0, 1, 0.5)]))
        assert g.values[g.row_offsets[0]] == 1.5

    def test_node_deletion_as_edge_deletions(self, path3):
        # removing node 1 entirely = removing all its incident edges
        delta = GraphDelta.from_edges([(0, 1, -1.0), (1, 2, -1.0)])
        g = apply_delta(path3, delta)
        assert g.n_edges == 0
        assert g.n_nodes == 3


class TestSpmm:
    def test_single_edge_indicator(self):
        g = graph_from_pairs([(0, 1)], 2)
        y = spmm(g, np.array([[1.0], [0.0]]))
        assert np.array_equal(y, [[0.0], [1.0]])

    def test_star_transition_ones(self, star3):
        y = spmm(star3, np.ones((3, 1)), normalization="transition")
        assert np.allclose(y, 1.0)

    def test_zero_matrix(self, star3):
        y = spmm(star3, np.zeros((3, 4)))
        assert np.array_equal(y, np.zeros((3, 4)))

    def test_zero_degree_row_under_transition(self):
        g = graph_from_pairs([(0, 1)], 3)  # node 2 isolated
        y = spmm(g, np.ones((3, 2)), normalization="transition")
        assert np.array_equal(y[2], [0.0, 0.0])

    def test_dimension_mismatch(self, star3):
        with pytest.raises(ValueError):
            spmm(star3, np.ones((4, 1)))

    @pytest.mark.parametrize("seed", [0, 1, 2])
    @pytest.mark.parametrize("normalization", ["adjacency", "transition"])
    def test_against_dense_oracle(self, seed, normalization):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(5, 200))
        m = int(rng.integers(1, n * (n - 1) // 2))
        g = generate_er(n, m, seed=seed + 100)
        a = dense_adjacency(g)
        if normalization == "transition":
            deg = a.sum(axis=1)
            scale = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
            a = scale[:, None] * a
        x = rng.standard_normal((n, 7))
        got = spmm(g, x, normalization)
        want = a @ x
        denom = max(np.linalg.norm(want), 1.0)
        assert np.linalg.norm(got - want) / denom <= 1e-12


class TestGenerators:
    def test_er_forced_complete(self):
        g = generate_er(4, 6, seed=11)
        assert g.n_edges == 6
        assert np.all(g.neighbor_counts() == 3)

    def test_er_deterministic(self):
        a = generate_er(1000, 5000, seed=42)
        b = generate_er(1000, 5000, seed=42)
        assert a.equal(b)

    def test_er_counts_and_range(self):
        g = generate_er(1000, 5000, seed=9)
        assert g.n_edges == 5000
        assert g.col_indices.max() < 1000

    def test_er_infeasible(self):
        with pytest.raises(DataError):
            generate_er(4, 7, seed=0)

    def test_sbm_cliques(self):
        g = generate_sbm(12, 3, 1.0, 0.0, seed=5)
        assert g.n_edges == 3 * 6  # three K4 blocks
        blocks = np.arange(12) // 4
        us, vs, _ = g.edge_pairs()
        assert np.all(blocks[us] == blocks[vs])

    def test_sbm_single_block_is_er_gnp(self):
        g = generate_sbm(50, 1, 0.2, 0.2, seed=3)
        assert g.n_nodes == 50
        # plain Bernoulli graph: edge count near p * C(50,2) = 245
        assert 150 < g.n_edges < 350

    def test_sbm_within_block_density(self):
        g = generate_sbm(200, 4, 0.3, 0.01, seed=7)
        blocks = np.arange(200) // 50
        us, vs, _ = g.edge_pairs()
        within = int(np.count_nonzero(blocks[us] == blocks[vs]))
        pairs_within = 4 * (50 * 49 // 2)
        assert abs(within / pairs_within - 0.3) <= 0.05

    def test_sbm_bad_probabilities(self):
        with pytest.raises(DataError):
            generate_sbm(10, 2, 0.1, 0.5, seed=0)


class TestInvariantsAndProperties:
    @settings(max_examples=60, deadline=None)
    @given(st.data())
    def test_construction_invariants(self, data):
        n = data.draw(st.integers(2, 25))
        pairs = data.draw(st.lists(
            st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=50))
        g = graph_from_pairs(pairs, n)
        g.validate()  # symmetry, sortedness, no loops/dups
        assert g.row_offsets[-1] == 2 * g.n_edges

    @settings(max_examples=40, deadline=None)
    @given(st.data())
    def test_delta_then_inverse_roundtrip(self, data):
        n = data.draw(st.integers(3, 15))
        base = data.draw(st.lists(
            st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)),
            min_size=1, max_size=30))
        g = graph_from_pairs(base, n)
        us, vs, ws = g.edge_pairs()
        k = data.draw(st.integers(0, len(us))) if len(us) else 0
        changes = [(int(us[i]), int(vs[i]), -float(ws[i])) for i in range(k)]
        new_u = data.draw(st.integers(0, n - 1))
        new_v = data.draw(st.integers(0, n - 1))
        if new_u != new_v and not g.has_edge(new_u, new_v):
            changes.append((new_u, new_v, 2.5))
        if not changes:
            return
        delta = GraphDelta.from_edges(changes)
        g2 = apply_delta(g, delta)
        g3 = apply_delta(g2, delta.inverse())
        assert g3.equal(g)


class TestDeltaFile:
    def test_parse(self, tmp_path):
        p = tmp_path / "d.delta"
        p.write_text("# comment\nnodes 2\n+ 0 5 1.5\n- 1 2\n")
        d = load_delta_file(p)
        assert d.n_new_nodes == 2
        assert d.n_changes == 2
        assert d.dws.tolist() == [1.5, -1.0]

    def test_bad_op(self, tmp_path):
        p = tmp_path / "d.delta"
        p.write_text("* 0 1\n")
        with pytest.raises(DataError, match=":1:"):
            load_delta_file(p)
