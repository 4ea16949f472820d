import threading
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparse_gi import (
    DuplicateEntry,
    InvalidValue,
    MalformedDict,
    SelfLoopWarning,
    ShapeError,
    SparseAdjacency,
    add_scaled_selfloops,
    as_adjacency,
    from_dict,
    from_edge_list,
    sparse2dict,
    transpose_apply,
)
from sparse_gi.generate import erdos_renyi_edges

from conftest import P3_EDGES


class TestFromEdgeList:
    def test_full_restriction(self, p3):
        assert p3.shape == (3, 3)
        assert p3.nnz == 4
        np.testing.assert_array_equal(p3.to_dense(), [[0, 1, 0], [1, 0, 1], [0, 1, 0]])

    def test_subsets_keep_local_coordinates(self, p3_sub):
        assert p3_sub.shape == (2, 2)
        assert p3_sub.entries() == [(0, 0, 1.0), (1, 1, 1.0)]
        assert list(p3_sub.row_keys) == [0, 1]
        assert list(p3_sub.col_keys) == [1, 2]

    def test_subsets_are_sorted(self):
        m = from_edge_list(P3_EDGES, [1, 0], [2, 1])
        assert m == from_edge_list(P3_EDGES, [0, 1], [1, 2])

    def test_diagonal_warns_but_is_stored(self):
        with pytest.warns(SelfLoopWarning):
            m = from_edge_list([(0, 0, 1.0)])
        assert m.entries() == [(0, 0, 1.0)]

    def test_conflicting_duplicate(self):
        with pytest.raises(DuplicateEntry):
            from_edge_list([(0, 1, 1.0), (0, 1, 2.0)])

    def test_agreeing_duplicate_is_merged(self):
        assert from_edge_list([(0, 1, 1.0), (0, 1, 1.0)]).nnz == 1

    def test_non_finite_value(self):
        with pytest.raises(InvalidValue):
            from_edge_list([(0, 1, float("nan"))])

    def test_duplicate_subset_nodes(self):
        with pytest.raises(InvalidValue):
            from_edge_list(P3_EDGES, [0, 0])

    def test_default_weight_and_n_nodes(self):
        m = from_edge_list([(0, 1)], n_nodes=4)
        assert m.shape == (4, 4)
        assert m.entries() == [(0, 1, 1.0)]

    def test_immutable(self, p3):
        with pytest.raises(ValueError):
            p3.data[0] = 5.0


class TestDictFormat:
    def test_p3_export(self, p3):
        d = sparse2dict(p3)
        assert d["keys"] == [(0, 1), (1, 0), (1, 2), (2, 1)]
        assert d["values"] == [1.0, 1.0, 1.0, 1.0]
        assert d["rowkeys_custom"] is None
        assert d["colkeys_custom"] is None
        assert d["keys_custom"] is None

    def test_empty(self):
        d = sparse2dict(SparseAdjacency.from_coo([], [], [], (0, 0)))
        assert d["keys"] == [] and d["values"] == []

    def test_custom_keys(self, p3_sub):
        d = sparse2dict(p3_sub)
        assert d["rowkeys_custom"] == [0, 1]
        assert d["colkeys_custom"] == [1, 2]
        assert d["keys_custom"] == [(0, 1), (1, 2)]

    def test_round_trip(self, p3, p3_sub):
        assert from_dict(sparse2dict(p3)) == p3
        assert from_dict(sparse2dict(p3_sub)) == p3_sub

    def test_round_trip_keeps_empty_trailing_rows(self):
        m = from_edge_list([(0, 1, 2.0)], n_nodes=4)
        assert from_dict(sparse2dict(m)) == m

    def test_length_mismatch(self):
        with pytest.raises(MalformedDict):
            from_dict({"keys": [(0, 0)], "values": [1.0, 2.0]})

    def test_global_labels(self):
        m = from_dict({
            "keys": [(0, 0)], "values": [1.0],
            "rowkeys_custom": [5], "colkeys_custom": [7], "keys_custom": [(5, 7)],
        })
        assert m.shape == (1, 1)
        assert m.entries() == [(0, 0, 1.0)]
        assert list(m.row_keys) == [5] and list(m.col_keys) == [7]

    def test_bad_translation(self):
        with pytest.raises(MalformedDict):
            from_dict({
                "keys": [(0, 0)], "values": [1.0],
                "rowkeys_custom": [5], "colkeys_custom": [7], "keys_custom": [(5, 8)],
            })

    def test_index_beyond_custom_keys(self):
        with pytest.raises(MalformedDict):
            from_dict({"keys": [(1, 0)], "values": [1.0], "rowkeys_custom": [3], "colkeys_custom": [4]})

    def test_as_adjacency_ignores_keys_for_dict(self, p3_sub):
        d = sparse2dict(p3_sub)
        assert as_adjacency(d, rowkeys=[8, 9], colkeys=[8, 9]) == p3_sub

    def test_as_adjacency_from_scipy(self):
        sp = pytest.importorskip("scipy.sparse")
        dok = sp.dok_matrix((2, 2))
        dok[0, 1] = 1.0
        m = as_adjacency(dok, rowkeys=[4, 3], colkeys=[5, 3])
        assert list(m.row_keys) == [3, 4] and list(m.col_keys) == [3, 5]
        assert m.entries() == [(0, 1, 1.0)]


class TestSelfLoops:
    def test_full_graph(self, p3):
        np.testing.assert_array_equal(
            add_scaled_selfloops(p3, 1.0).to_dense(), [[1, 1, 0], [1, 1, 1], [0, 1, 1]]
        )

    def test_submatrix_uses_global_labels(self, p3_sub):
        # node 1 is local row 1 and local column 0
        np.testing.assert_array_equal(add_scaled_selfloops(p3_sub, 1.0).to_dense(), [[1, 0], [1, 1]])

    def test_zero_lambda_keeps_pattern(self, p3):
        hat = add_scaled_selfloops(p3, 0.0)
        np.testing.assert_array_equal(hat.to_dense(), p3.to_dense())
        assert hat.nnz == 7
        assert sorted((i, j) for i, j, v in hat.entries() if v == 0.0) == [(0, 0), (1, 1), (2, 2)]

    def test_cancellation_kept(self):
        with pytest.warns(SelfLoopWarning):
            m = from_edge_list([(0, 0, -2.0), (0, 1, 1.0)])
        hat = add_scaled_selfloops(m, 2.0)
        assert (0, 0, 0.0) in hat.entries()

    def test_non_finite_lambda(self, p3):
        with pytest.raises(InvalidValue):
            add_scaled_selfloops(p3, float("inf"))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from([0.0, 0.5, 1.0, 2.0, -1.5]))
    def test_matches_dense_submatrix(self, seed, lam):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 25))
        edges = erdos_renyi_edges(n, float(rng.uniform(0, 0.5)), rng, weighted=True)
        rows = sorted(rng.choice(n, int(rng.integers(1, n + 1)), replace=False))
        cols = sorted(rng.choice(n, int(rng.integers(1, n + 1)), replace=False))
        dense = from_edge_list(edges, n_nodes=n).to_dense() + lam * np.eye(n)
        got = add_scaled_selfloops(from_edge_list(edges, rows, cols, n_nodes=n), lam).to_dense()
        np.testing.assert_array_equal(got, dense[np.ix_(rows, cols)])


class TestTransposeApply:
    def test_unit_scale(self, p3):
        hat = add_scaled_selfloops(p3, 1.0)
        np.testing.assert_array_equal(transpose_apply(hat, np.ones(3), np.array([1.0, 2.0, 3.0])), [3, 6, 5])

    def test_row_scale(self, p3):
        hat = add_scaled_selfloops(p3, 1.0)
        np.testing.assert_array_equal(
            transpose_apply(hat, np.array([2.0, 1.0, 1.0]), np.array([1.0, 2.0, 3.0])), [4, 7, 5]
        )

    def test_zero_scale(self, p3, rng):
        hat = add_scaled_selfloops(p3, 1.0)
        np.testing.assert_array_equal(transpose_apply(hat, np.zeros(3), rng.normal(size=(3, 4))), np.zeros((3, 4)))

    def test_shape_errors(self, p3):
        with pytest.raises(ShapeError):
            transpose_apply(p3, np.ones(2), np.ones((3, 1)))
        with pytest.raises(ShapeError):
            transpose_apply(p3, np.ones(3), np.ones((4, 1)))

    @settings(max_examples=80, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_matches_dense(self, seed):
        rng = np.random.default_rng(seed)
        n1, n2, M = (int(v) for v in rng.integers(1, 51, size=3))
        dense = np.where(rng.random((n1, n2)) < rng.uniform(0, 0.3), rng.normal(size=(n1, n2)), 0.0)
        ii, jj = np.nonzero(dense)
        m = SparseAdjacency.from_coo(ii, jj, dense[ii, jj], (n1, n2))
        s = rng.normal(size=n1)
        x = rng.normal(size=(n1, M % 8 + 1))
        np.testing.assert_allclose(transpose_apply(m, s, x), (np.diag(s) @ dense).T @ x, rtol=0, atol=1e-12)

    def test_concurrent_reads(self, rng):
        edges = erdos_renyi_edges(200, 0.05, rng)
        hat = add_scaled_selfloops(from_edge_list(edges, n_nodes=200), 1.0)
        x = rng.normal(size=(200, 3))
        expected = transpose_apply(hat, None, x)
        results = []

        def work():
            results.append(all(np.array_equal(transpose_apply(hat, None, x), expected) for _ in range(20)))

        threads = [threading.Thread(target=work) for _ in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert results == [True] * 4


def test_no_warning_without_self_loops():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        from_edge_list(P3_EDGES)
