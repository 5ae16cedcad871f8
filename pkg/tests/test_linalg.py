import numpy as np
import pytest
import scipy.sparse

from aa1s.errors import SingularMatrixError, ZeroColumnError, ZeroRowError
from aa1s.linalg import (
    SeededRng,
    equilibrate,
    gaussian,
    lu_solve,
    sparse_gaussian,
    sparse_uniform,
)


class TestLuSolve:
    def test_identity(self):
        x = lu_solve(np.eye(2), np.array([3.0, 4.0]))
        np.testing.assert_allclose(x, [3.0, 4.0])

    def test_diagonal(self):
        x = lu_solve(np.diag([2.0, 4.0]), np.array([2.0, 4.0]))
        np.testing.assert_allclose(x, [1.0, 1.0])

    def test_hand_elimination(self):
        # [[1,1],[1,3]] x = (2,4): subtract rows -> 2 x2 = 2 -> x = (1,1)
        M = np.array([[1.0, 1.0], [1.0, 3.0]])
        b = np.array([2.0, 4.0])
        x = lu_solve(M, b)
        np.testing.assert_allclose(x, [1.0, 1.0], atol=1e-12)
        assert np.linalg.norm(M @ x - b) <= 1e-8 * (1.0 + np.linalg.norm(b))

    def test_singular_raises(self):
        with pytest.raises(SingularMatrixError):
            lu_solve(np.array([[1.0, 2.0], [2.0, 4.0]]), np.ones(2))

    def test_roundtrip_random(self):
        rng = SeededRng(1)
        for trial in range(40):
            n = 2 + trial % 10
            M = gaussian(rng, (n, n)) + 2.5 * np.eye(n)
            if np.linalg.cond(M) > 1e6:
                continue
            b = gaussian(rng, n)
            x = lu_solve(M, b)
            assert np.linalg.norm(M @ x - b) <= 1e-8 * (1.0 + np.linalg.norm(b))


class TestSeededRng:
    def test_determinism(self):
        a = gaussian(SeededRng(42), (6, 5))
        b = gaussian(SeededRng(42), (6, 5))
        np.testing.assert_array_equal(a, b)

    def test_byte_identical_stream(self):
        assert SeededRng(7).raw(256).tobytes() == SeededRng(7).raw(256).tobytes()

    def test_distinct_seeds(self):
        assert not np.array_equal(SeededRng(1).raw(16), SeededRng(2).raw(16))

    def test_stream_advances(self):
        rng = SeededRng(3)
        assert not np.array_equal(rng.raw(8), rng.raw(8))

    def test_sample_mean_clt(self):
        # 3 sigma / sqrt(1000) < 0.15
        sample = gaussian(SeededRng(456), (1000, 1)).ravel()
        assert -0.15 <= sample.mean() <= 0.15

    def test_sample_moments(self):
        sample = SeededRng(456).normal(200_000)
        assert abs(sample.mean()) < 0.01
        assert abs(sample.std() - 1.0) < 0.01

    def test_uniform_range(self):
        u = SeededRng(11).uniform(10_000)
        assert u.min() >= 0.0 and u.max() < 1.0


class TestSparseGaussian:
    def test_nonzero_count_in_band(self):
        # binomial mean 1000; spec band [700, 1300]
        A = sparse_gaussian(SeededRng(456), (100, 100), 0.1)
        assert 700 <= A.nnz <= 1300

    def test_determinism(self):
        A = sparse_gaussian(SeededRng(5), (30, 20), 0.2)
        B = sparse_gaussian(SeededRng(5), (30, 20), 0.2)
        assert (A != B).nnz == 0

    def test_uniform_values_nonnegative(self):
        A = sparse_uniform(SeededRng(5), (50, 50), 0.1)
        assert A.data.min() >= 0.0

    def test_bad_density(self):
        with pytest.raises(ValueError):
            sparse_gaussian(SeededRng(1), (4, 4), 0.0)


class TestEquilibrate:
    def test_identity_fixed(self):
        A_s, b_s, _, d, e = equilibrate(np.eye(3), np.ones(3))
        np.testing.assert_allclose(A_s, np.eye(3))
        np.testing.assert_allclose(d, np.ones(3))
        np.testing.assert_allclose(e, np.ones(3))

    def test_diagonal(self):
        A = np.diag([2.0, 4.0])
        A_s, b_s, _, d, e = equilibrate(A, np.array([2.0, 4.0]))
        np.testing.assert_allclose(d, [2.0, 4.0])
        np.testing.assert_allclose(e, [1.0, 1.0])
        np.testing.assert_allclose(A_s, np.eye(2))
        np.testing.assert_allclose(b_s, [1.0, 1.0])

    def test_hand_example(self):
        A = np.array([[1.0, 1.0], [1.0, 3.0]])
        A_s, _, _, d, e = equilibrate(A, np.zeros(2))
        np.testing.assert_allclose(d, [2.0, 4.0])
        np.testing.assert_allclose(e, [0.75, 1.25])
        np.testing.assert_allclose(A_s, [[2.0 / 3.0, 0.4], [1.0 / 3.0, 0.6]])

    def test_unit_row_sums_after_left_scaling(self):
        rng = SeededRng(9)
        A = np.abs(gaussian(rng, (7, 5))) + 0.01
        _, _, _, d, _ = equilibrate(A, np.ones(7))
        np.testing.assert_allclose(np.abs(A / d[:, None]).sum(axis=1), 1.0)

    def test_solution_mapback(self):
        rng = SeededRng(21)
        A = gaussian(rng, (4, 4)) + 4.0 * np.eye(4)
        x = gaussian(rng, 4)
        b = A @ x
        A_s, b_s, _, d, e = equilibrate(A, b)
        x_s = lu_solve(A_s, b_s)
        np.testing.assert_allclose(x_s / e, x, atol=1e-10)

    def test_sparse_input(self):
        A = scipy.sparse.csr_array(np.array([[1.0, 1.0], [1.0, 3.0]]))
        A_s, _, c_s, d, e = equilibrate(A, np.zeros(2), np.array([3.0, 5.0]))
        np.testing.assert_allclose(d, [2.0, 4.0])
        np.testing.assert_allclose(A_s.toarray(), [[2.0 / 3.0, 0.4], [1.0 / 3.0, 0.6]])
        np.testing.assert_allclose(c_s, [3.0 / 0.75, 5.0 / 1.25])

    def test_zero_row(self):
        with pytest.raises(ZeroRowError):
            equilibrate(np.array([[1.0, 2.0], [0.0, 0.0]]), np.ones(2))

    def test_zero_column(self):
        with pytest.raises(ZeroColumnError):
            equilibrate(np.array([[1.0, 0.0], [2.0, 0.0]]), np.ones(2))
