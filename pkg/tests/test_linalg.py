import numpy as np
import pytest

from kscn import (NotPositiveDefinite, cholesky_solve, least_squares,
                  sym_eigvals)
from oracles import exact_normal_equations, gauss_jordan_inverse


class TestCholeskySolve:
    def test_identity_returns_rhs(self):
        B = np.arange(12.0).reshape(3, 4)
        np.testing.assert_allclose(cholesky_solve(np.eye(3), B), B)

    def test_scalar(self):
        assert cholesky_solve([[4.0]], [[2.0]])[0, 0] == pytest.approx(0.5)

    def test_random_spd_matches_explicit_inverse(self):
        rng = np.random.default_rng(7)
        G = rng.normal(size=(8, 8))
        A = G.T @ G + np.eye(8)
        B = rng.normal(size=(8, 3))
        Z = cholesky_solve(A, B)
        np.testing.assert_allclose(Z, gauss_jordan_inverse(A) @ B, atol=1e-8)

    def test_residual_contract(self):
        rng = np.random.default_rng(11)
        G = rng.normal(size=(20, 20))
        A = G.T @ G + np.eye(20)
        B = rng.normal(size=(20, 2))
        Z = cholesky_solve(A, B)
        assert np.max(np.abs(A @ Z - B)) <= 1e-8 * (1 + np.max(np.abs(B)))

    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    @pytest.mark.parametrize("n", [5, 37, 100])
    def test_roundtrip_recovers_solution(self, seed, n):
        rng = np.random.default_rng(seed)
        G = rng.normal(size=(n, n))
        A = G.T @ G + n * np.eye(n)
        Z0 = rng.normal(size=(n, 2))
        np.testing.assert_allclose(cholesky_solve(A, A @ Z0), Z0, atol=1e-8)

    def test_indefinite_raises(self):
        with pytest.raises(NotPositiveDefinite):
            cholesky_solve(np.diag([1.0, -1.0]), np.ones((2, 1)))

    def test_asymmetric_rejected(self):
        A = np.array([[1.0, 0.5], [0.0, 1.0]])
        with pytest.raises(ValueError, match="symmetric"):
            cholesky_solve(A, np.ones((2, 1)))

    def test_nan_rejected(self):
        A = np.eye(2)
        A[0, 0] = np.nan
        with pytest.raises(ValueError, match="NaN"):
            cholesky_solve(A, np.ones((2, 1)))


class TestLeastSquares:
    def test_identity(self):
        B = np.arange(6.0).reshape(3, 2)
        np.testing.assert_allclose(least_squares(np.eye(3), B), B)

    def test_mean_of_targets(self):
        A = np.array([[1.0], [1.0]])
        B = np.array([[0.0], [2.0]])
        np.testing.assert_allclose(least_squares(A, B), [[1.0]])

    def test_matches_exact_normal_equations(self):
        rng = np.random.default_rng(5)
        A = rng.normal(size=(20, 5))
        B = rng.normal(size=(20, 2))
        np.testing.assert_allclose(least_squares(A, B),
                                   exact_normal_equations(A, B), atol=1e-8)

    def test_beats_random_candidates(self):
        rng = np.random.default_rng(9)
        A = rng.normal(size=(15, 4))
        B = rng.normal(size=(15, 1))
        Z = least_squares(A, B)
        base = np.linalg.norm(A @ Z - B)
        for _ in range(1000):
            cand = Z + rng.normal(scale=rng.uniform(1e-6, 1.0), size=Z.shape)
            assert base <= np.linalg.norm(A @ cand - B) + 1e-10

    def test_rank_deficient_minimum_norm(self):
        A = np.array([[1.0, 1.0], [1.0, 1.0]])
        B = np.array([[2.0], [2.0]])
        Z = least_squares(A, B)
        np.testing.assert_allclose(A @ Z, B, atol=1e-12)
        np.testing.assert_allclose(Z, [[1.0], [1.0]], atol=1e-12)  # min-norm solution


class TestSymEigvals:
    def test_identity(self):
        np.testing.assert_allclose(sym_eigvals(np.eye(4)), np.ones(4))

    def test_diagonal_sorted_descending(self):
        np.testing.assert_allclose(sym_eigvals(np.diag([2.0, 3.0])), [3.0, 2.0])

    def test_two_by_two_hand_solution(self):
        # det([[2-t,1],[1,2-t]]) = (t-3)(t-1)
        np.testing.assert_allclose(sym_eigvals([[2.0, 1.0], [1.0, 2.0]]),
                                   [3.0, 1.0], atol=1e-12)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_trace_and_order_properties(self, seed):
        rng = np.random.default_rng(seed)
        G = rng.normal(size=(12, 12))
        A = 0.5 * (G + G.T)
        vals = sym_eigvals(A)
        assert np.all(np.diff(vals) <= 1e-12)
        assert np.sum(vals) == pytest.approx(np.trace(A), abs=1e-8 * 12)

    def test_psd_no_large_negatives(self):
        rng = np.random.default_rng(4)
        G = rng.normal(size=(10, 6))
        A = G @ G.T  # PSD, rank 6
        vals = sym_eigvals(A)
        assert vals.min() >= -1e-8 * np.trace(A)
