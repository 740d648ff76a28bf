import numpy as np
import pytest

from ttkit.errors import (
    ContractionModeMismatch,
    ElementCountMismatch,
    EmptyOrFullSubset,
    ModeOutOfRange,
)
from ttkit.tensor import contract_n1, matrix_rank, mode_unfold, reshape, t_modes_matricize
from ttkit.tt import random_tt, tt_element

import oracles


class TestReshape:
    def test_flatten_keeps_order(self):
        x = np.arange(1.0, 7.0).reshape(2, 3)
        assert reshape(x, [6]).tolist() == [1, 2, 3, 4, 5, 6]

    def test_row_major_layout(self):
        # third flat element becomes entry (1, 0) of a 3x2 reshape
        x = reshape(np.arange(1.0, 7.0), [3, 2])
        assert x[1, 0] == 3.0

    def test_element_count_mismatch(self):
        with pytest.raises(ElementCountMismatch):
            reshape(np.zeros((2, 2)), [3])

    def test_roundtrip_identity(self, rng):
        x = rng.standard_normal((3, 4, 5))
        back = reshape(reshape(x, [5, 12]), [3, 4, 5])
        assert np.array_equal(back, x)


class TestModeUnfold:
    def test_shape_4567(self, rng):
        x = rng.standard_normal((4, 5, 6, 7))
        assert mode_unfold(x, 1).shape == (5, 168)

    def test_single_mode(self, rng):
        x = rng.standard_normal(6)
        assert mode_unfold(x, 0).shape == (6, 1)

    def test_entries_match_index_map(self, rng):
        x = rng.standard_normal((2, 3, 2))
        for mode in range(3):
            mat = mode_unfold(x, mode)
            rest = [m for m in range(3) if m != mode]
            for idx in np.ndindex(2, 3, 2):
                col = 0
                for m in rest:
                    col = col * x.shape[m] + idx[m]
                assert mat[idx[mode], col] == x[idx]

    def test_mode_out_of_range(self, rng):
        with pytest.raises(ModeOutOfRange):
            mode_unfold(rng.standard_normal((2, 2)), 2)

    def test_preserves_value_multiset(self, rng):
        x = rng.standard_normal((3, 4, 2))
        mat = mode_unfold(x, 2)
        assert mat.size == x.size
        assert sorted(mat.ravel()) == sorted(x.ravel())


class TestTModesMatricize:
    def test_shape_trailing_three(self, rng):
        x = rng.standard_normal((4, 5, 6, 7))
        assert t_modes_matricize(x, [1, 2, 3]).shape == (210, 4)

    def test_shape_trailing_two(self, rng):
        x = rng.standard_normal((4, 5, 6, 7))
        assert t_modes_matricize(x, [2, 3]).shape == (42, 20)

    def test_single_mode_equals_unfold(self, rng):
        x = rng.standard_normal((3, 4, 5))
        assert np.array_equal(t_modes_matricize(x, [0]), mode_unfold(x, 0))

    def test_empty_and_full_subsets(self, rng):
        x = rng.standard_normal((2, 3))
        with pytest.raises(EmptyOrFullSubset):
            t_modes_matricize(x, [])
        with pytest.raises(EmptyOrFullSubset):
            t_modes_matricize(x, [0, 1])

    def test_entries_match_index_map(self, rng):
        x = rng.standard_normal((2, 3, 2, 2))
        mat = t_modes_matricize(x, [1, 3])
        for idx in np.ndindex(*x.shape):
            row = idx[1] * 2 + idx[3]
            col = idx[0] * 2 + idx[2]
            assert mat[row, col] == x[idx]


class TestContractN1:
    def test_matrix_product(self, rng):
        a = rng.standard_normal((2, 3))
        b = rng.standard_normal((3, 4))
        assert np.allclose(contract_n1(a, b), a @ b)

    def test_higher_order_vs_loops(self, rng):
        x = rng.standard_normal((1, 2, 3))
        y = rng.standard_normal((3, 2, 1))
        got = contract_n1(x, y)
        assert got.shape == (1, 2, 2, 1)
        assert np.max(np.abs(got - oracles.contract_loops(x, y))) <= 1e-12

    def test_core_chain_matches_elementwise_product(self, rng):
        train = random_tt((2, 2, 2), (2, 2), rng)
        full = contract_n1(contract_n1(train.cores[0], train.cores[1]), train.cores[2])
        full = full.reshape(2, 2, 2)
        for idx in np.ndindex(2, 2, 2):
            assert abs(full[idx] - tt_element(train, idx)) <= 1e-12

    def test_mode_mismatch(self, rng):
        with pytest.raises(ContractionModeMismatch):
            contract_n1(rng.standard_normal((2, 3)), rng.standard_normal((4, 2)))

    def test_linear_in_each_argument(self, rng):
        x1 = rng.standard_normal((2, 3))
        x2 = rng.standard_normal((2, 3))
        y = rng.standard_normal((3, 4))
        lhs = contract_n1(2.0 * x1 + 3.0 * x2, y)
        rhs = 2.0 * contract_n1(x1, y) + 3.0 * contract_n1(x2, y)
        assert np.max(np.abs(lhs - rhs)) <= 1e-12

    def test_ones_contraction_drops_mode(self, rng):
        x = rng.standard_normal((2, 4))
        ones = np.ones((4, 1))
        got = contract_n1(x, ones)
        assert np.allclose(got[:, 0], x.sum(axis=1))

    def test_random_small_tensors_vs_oracle(self, rng):
        for _ in range(10):
            share = int(rng.integers(1, 5))
            x = rng.standard_normal((2, int(rng.integers(1, 5)), share))
            y = rng.standard_normal((share, int(rng.integers(1, 5)), 2))
            assert x.size <= 256 and y.size <= 256
            got = contract_n1(x, y)
            assert np.max(np.abs(got - oracles.contract_loops(x, y))) <= 1e-12


class TestMatrixRank:
    def test_identity(self):
        assert matrix_rank(np.eye(3)) == 3

    def test_outer_product(self, rng):
        a = rng.standard_normal(5) + 2.0
        b = rng.standard_normal(7) + 2.0
        assert matrix_rank(np.outer(a, b)) == 1

    def test_random_full_rank(self, rng):
        m = rng.standard_normal((5, 8))
        assert oracles.gram_full_row_rank(m)
        assert matrix_rank(m, rel_tol=1e-9) == 5

    def test_zero_matrix(self):
        assert matrix_rank(np.zeros((3, 4))) == 0

    def test_scale_invariance(self, rng):
        m = rng.standard_normal((4, 3)) @ rng.standard_normal((3, 6))
        assert matrix_rank(m) == matrix_rank(1e-8 * m) == 3
