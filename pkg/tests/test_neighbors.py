import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from lcrank import (
    DataSet,
    NeighborhoodIndex,
    build_knn,
    gather_local_codes,
    gather_local_scores,
)
from _oracles import dense_selector


def make_data(points):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    return DataSet(points=points, ids=[f"p{i}" for i in range(points.shape[0])])


class TestBuildKnn:
    def test_collinear_points(self):
        index = build_knn(make_data([[0.0], [1.0], [10.0]]), k=2)
        assert index.neighbor_ids.tolist() == [[0, 1], [1, 0], [2, 1]]

    def test_k_one_is_self_only(self):
        index = build_knn(make_data([[0.0], [5.0], [9.0]]), k=1)
        assert index.neighbor_ids.tolist() == [[0], [1], [2]]

    def test_tie_broken_by_smaller_index(self):
        # points 1 and 2 both at distance 1 from point 0
        index = build_knn(make_data([[0.0], [1.0], [-1.0]]), k=3)
        assert index.neighbor_ids[0].tolist() == [0, 1, 2]

    def test_self_first_even_on_duplicate_points(self):
        index = build_knn(make_data([[1.0], [1.0], [3.0]]), k=2)
        assert index.neighbor_ids[0].tolist() == [0, 1]
        assert index.neighbor_ids[1].tolist() == [1, 0]

    @pytest.mark.parametrize("k", [0, 4, -1])
    def test_bad_k_rejected(self, k):
        with pytest.raises(ValueError, match="k must be"):
            build_knn(make_data([[0.0], [1.0], [2.0]]), k=k)

    def test_ordered_by_distance(self):
        rng = np.random.default_rng(0)
        data = make_data(rng.standard_normal((12, 3)))
        index = build_knn(data, k=6)
        X = data.points
        for i in range(12):
            dists = [np.sum((X[j] - X[i]) ** 2) for j in index.neighbor_ids[i]]
            assert dists == sorted(dists)

    @settings(max_examples=30, deadline=None)
    @given(
        hnp.arrays(
            np.float64,
            st.tuples(st.integers(2, 10), st.integers(1, 4)),
            elements=st.floats(-100, 100, allow_nan=False),
        ),
        st.randoms(use_true_random=False),
    )
    def test_permutation_equivariance(self, points, rnd):
        # distinct rows so distances are generically tie-free
        points = points + np.arange(points.shape[0])[:, None] * 1e-3
        if len({tuple(r) for r in points}) < points.shape[0]:
            return
        n = points.shape[0]
        k = min(3, n)
        perm = list(range(n))
        rnd.shuffle(perm)
        perm = np.array(perm)
        base = build_knn(make_data(points), k=k)
        shuffled = build_knn(make_data(points[perm]), k=k)
        # position of original point i in the permuted dataset
        pos = np.empty(n, dtype=int)
        pos[perm] = np.arange(n)
        for i in range(n):
            lhs = pos[base.neighbor_ids[i]]
            rhs = shuffled.neighbor_ids[pos[i]]
            if np.array_equal(np.sort(lhs), np.unique(lhs)):
                np.testing.assert_array_equal(lhs, rhs)


class TestIndexValidation:
    def test_must_start_with_self(self):
        with pytest.raises(ValueError, match="start with the point itself"):
            NeighborhoodIndex(k=2, neighbor_ids=np.array([[1, 0], [1, 0]]))

    def test_rejects_repeats(self):
        with pytest.raises(ValueError, match="repeated"):
            NeighborhoodIndex(k=2, neighbor_ids=np.array([[0, 0], [1, 0]]))

    def test_memberships_invert_containment(self):
        rng = np.random.default_rng(5)
        index = build_knn(make_data(rng.standard_normal((9, 2))), k=4)
        owners = index.memberships()
        for i in range(9):
            for p in range(9):
                assert (i in owners[p]) == (p in index.neighbor_ids[i])


class TestGather:
    def test_selection(self):
        index = NeighborhoodIndex(k=2, neighbor_ids=np.array([[0, 2], [1, 2], [2, 0]]))
        out = gather_local_scores(np.array([1.0, 2.0, 3.0]), index, 2)
        np.testing.assert_array_equal(out, [3.0, 1.0])

    def test_zero_scores(self):
        index = build_knn(make_data([[0.0], [1.0], [2.0]]), k=2)
        np.testing.assert_array_equal(gather_local_scores(np.zeros(3), index, 1), [0.0, 0.0])

    def test_identity_codes_single_neighbor(self):
        index = NeighborhoodIndex(k=1, neighbor_ids=np.array([[0], [1], [2]]))
        out = gather_local_codes(np.eye(3), index, 1)
        np.testing.assert_array_equal(out, [[0.0], [1.0], [0.0]])

    def test_zero_codes(self):
        index = build_knn(make_data([[0.0], [1.0], [2.0]]), k=3)
        np.testing.assert_array_equal(
            gather_local_codes(np.zeros((4, 3)), index, 0), np.zeros((4, 3))
        )

    def test_matches_dense_selector_products(self):
        rng = np.random.default_rng(11)
        data = make_data(rng.standard_normal((8, 3)))
        index = build_knn(data, k=3)
        f = rng.standard_normal(8)
        S = rng.standard_normal((5, 8))
        for i in range(8):
            H = dense_selector(index.neighbor_ids[i], 8)
            assert set(np.unique(H)) <= {0.0, 1.0}
            np.testing.assert_array_equal(H.sum(axis=0), np.ones(3))
            np.testing.assert_array_equal(f @ H, gather_local_scores(f, index, i))
            np.testing.assert_array_equal(S @ H, gather_local_codes(S, index, i))
            np.testing.assert_array_equal(H, index.dense_selector(i))

    def test_out_of_range_point(self):
        index = build_knn(make_data([[0.0], [1.0]]), k=1)
        with pytest.raises(IndexError):
            gather_local_scores(np.zeros(2), index, 5)
