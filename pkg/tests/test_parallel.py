import numpy as np
import pytest

from randne import (
    RngSpec,
    Weights,
    embed_parallel,
    embed_static,
    generate_er,
    partition_columns,
)


class TestPartitionColumns:
    def test_even_split(self):
        part = partition_columns(128, 4)
        assert list(part) == [(0, 32), (32, 64), (64, 96), (96, 128)]

    def test_uneven_split(self):
        part = partition_columns(5, 3)
        sizes = sorted(hi - lo for lo, hi in part)
        assert sizes == [1, 2, 2]

    def test_single_worker(self):
        assert list(partition_columns(7, 1)) == [(0, 7)]

    def test_more_workers_than_columns(self):
        part = partition_columns(3, 8)
        assert list(part) == [(0, 1), (1, 2), (2, 3)]

    def test_cover_and_disjoint(self):
        part = partition_columns(100, 7)
        spans = list(part)
        assert spans[0][0] == 0 and spans[-1][1] == 100
        for (a, b), (c, d) in zip(spans, spans[1:]):
            assert b == c and a < b

    def test_invalid_workers(self):
        with pytest.raises(ValueError):
            partition_columns(8, 0)


@pytest.fixture(scope="module")
def problem():
    g = generate_er(400, 2400, seed=13)
    w = Weights([0.5, 1.0, 0.1, 0.01])
    return g, w, RngSpec(21)


class TestEmbedParallel:

    def test_one_worker_matches_static(self, problem):
        g, w, rng = problem
        s1, e1 = embed_static(g, 32, w, rng)
        s2, e2 = embed_parallel(g, 32, w, rng, n_workers=1)
        assert np.array_equal(e1.vectors, e2.vectors)
        for a, b in zip(s1.parts, s2.parts):
            assert np.array_equal(a, b)

    @pytest.mark.parametrize("workers", [2, 4, 8])
    def test_worker_count_invariance(self, problem, workers):
        g, w, rng = problem
        _, base = embed_parallel(g, 32, w, rng, n_workers=1)
        state, out = embed_parallel(g, 32, w, rng, n_workers=workers)
        assert np.array_equal(base.vectors, out.vectors)

    def test_transition_mode_parallel(self, problem):
        g, w, rng = problem
        _, e1 = embed_static(g, 16, w, rng, normalization="transition")
        _, e2 = embed_parallel(g, 16, w, rng, normalization="transition",
                               n_workers=4)
        assert np.array_equal(e1.vectors, e2.vectors)

    def test_write_ownership_disjoint_and_exhaustive(self, problem):
        g, w, rng = problem
        log = []
        embed_parallel(g, 32, w, rng, n_workers=3, ownership_log=log)
        ranges = sorted((lo, hi) for _, lo, hi in log)
        # ranges owned by exactly one worker each, covering [0, 32)
        assert ranges[0][0] == 0 and ranges[-1][1] == 32
        for (a, b), (c, d) in zip(ranges, ranges[1:]):
            assert b == c

    def test_dim_exceeding_nodes_rejected(self, problem):
        g, w, rng = problem
        with pytest.raises(ValueError):
            embed_parallel(g, 500, w, rng, n_workers=2)
