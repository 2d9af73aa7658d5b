import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mosattack.core import (
    AttackMatrix,
    Rating,
    empirical_pmf,
    rating_matrix,
    row_pearson,
    smoothed_pmfs,
    stack,
    zscore_columns,
)

from conftest import make_dataset

matrices = st.tuples(st.integers(1, 12), st.integers(1, 8)).flatmap(
    lambda s: arrays(np.int64, s, elements=st.integers(1, 5))
)


class TestRating:
    @pytest.mark.parametrize("v", [1, 2, 3, 4, 5])
    def test_accepts_levels(self, v):
        assert Rating(v) == v

    @pytest.mark.parametrize("v", [0, 6, -1, 2.5])
    def test_rejects_others(self, v):
        with pytest.raises(ValueError):
            Rating(v)

    def test_matrix_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            rating_matrix([[1, 6]])

    def test_matrix_rejects_ragged_and_empty(self):
        with pytest.raises(ValueError):
            rating_matrix([[1, 2], [3]])
        with pytest.raises(ValueError):
            rating_matrix([])

    def test_matrix_is_read_only(self):
        m = rating_matrix([[1, 2]])
        with pytest.raises(ValueError):
            m[0, 0] = 3


class TestEmpiricalPmf:
    def test_counting(self):
        np.testing.assert_allclose(empirical_pmf([1, 1, 2]), [2 / 3, 1 / 3, 0, 0, 0])

    def test_degenerate(self):
        np.testing.assert_array_equal(empirical_pmf([3, 3, 3, 3]), [0, 0, 1, 0, 0])

    def test_uniform(self):
        np.testing.assert_allclose(empirical_pmf([1, 2, 3, 4, 5]), [0.2] * 5)

    def test_empty(self):
        with pytest.raises(ValueError, match="empty stimulus column"):
            empirical_pmf([])

    @given(st.lists(st.integers(1, 5), min_size=1, max_size=60))
    def test_normalized(self, col):
        p = empirical_pmf(col)
        assert abs(p.sum() - 1) < 1e-12
        assert (p >= 0).all()

    @given(matrices, st.floats(0.01, 3))
    def test_smoothed_rows_normalized(self, m, alpha):
        p = smoothed_pmfs(m, alpha)
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
        assert (p > 0).all()


class TestZscore:
    def test_zero_variance(self):
        np.testing.assert_array_equal(zscore_columns([[2], [2], [2]]).ravel(), [0, 0, 0])

    def test_two_points(self):
        np.testing.assert_allclose(zscore_columns([[1], [3]]).ravel(), [-1, 1])

    def test_three_points(self):
        np.testing.assert_allclose(zscore_columns([[1], [2], [3]]).ravel(), [-1.2247, 0, 1.2247], atol=1e-4)

    @given(matrices)
    def test_standardized_columns(self, m):
        z = zscore_columns(m)
        varying = m.std(axis=0) > 0
        np.testing.assert_allclose(z[:, varying].mean(axis=0), 0, atol=1e-9)
        np.testing.assert_allclose(z[:, varying].std(axis=0), 1, atol=1e-9)
        assert (z[:, ~varying] == 0).all()


class TestStack:
    def test_full_scale_shape(self, rng):
        d = make_dataset(rng.integers(1, 6, (30, 20)), np.full(20, 3.0))
        s = stack(d, AttackMatrix(rng.integers(1, 6, (5, 20))))
        assert s.ratings.shape == (35, 20)
        assert s.attacker_flags.sum() == 5 and s.attacker_flags[-5:].all()

    def test_trivial(self):
        s = stack(make_dataset([[3]], [3.0]), AttackMatrix([[5]]))
        assert s.ratings.tolist() == [[3], [5]]
        assert s.attacker_flags.tolist() == [False, True]

    def test_column_mismatch(self):
        with pytest.raises(ValueError):
            stack(make_dataset([[3, 3]], [3.0, 3.0]), AttackMatrix([[5]]))

    @given(matrices, st.integers(1, 4), st.data())
    def test_round_trip(self, m, k, data):
        attack = data.draw(arrays(np.int64, (k, m.shape[1]), elements=st.integers(1, 5)))
        s = stack(make_dataset(m, np.full(m.shape[1], 3.0)), AttackMatrix(attack))
        assert s.ratings.shape[0] == m.shape[0] + k
        np.testing.assert_array_equal(s.clean, m)
        np.testing.assert_array_equal(s.ratings[s.attacker_flags], attack)


class TestRowPearson:
    def test_flat_rows_are_zero(self):
        out = row_pearson(np.array([[3.0, 3.0, 3.0], [1.0, 2.0, 3.0]]), np.array([1.0, 2.0, 3.0]))
        np.testing.assert_allclose(out, [0.0, 1.0])

    def test_flat_target(self):
        out = row_pearson(np.array([[1.0, 2.0]]), np.array([2.0, 2.0]))
        assert out.tolist() == [0.0]

    @settings(max_examples=50)
    @given(matrices)
    def test_bounded(self, m):
        out = row_pearson(m, m.mean(axis=0))
        assert ((out >= -1) & (out <= 1)).all()
