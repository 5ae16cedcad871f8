import numpy as np
import pytest

from aa1s.baselines import SlidingMemory, aa1_weights, aa2_weights, baseline_step
from aa1s.core import FixedPointProblem, NormRegime, SolveConfig, run
from aa1s.errors import SingularMatrixError
from aa1s.linalg import SeededRng, gaussian


def _scalar_memory(xs, f):
    mem = SlidingMemory(5)
    for x in xs:
        xv = np.array([float(x)])
        mem.push(xv, f(xv), xv - f(xv))
    return mem


class TestAa1Weights:
    def test_scalar_example(self):
        # (S^T Y) gamma = S^T g with s=1, y=0.5, g=1 -> gamma=2, alpha=(2,-1)
        S = np.array([[1.0]])
        Y = np.array([[0.5]])
        gammas, alphas = aa1_weights(S, Y, np.array([1.0]))
        np.testing.assert_allclose(gammas, [2.0])
        np.testing.assert_allclose(alphas, [2.0, -1.0])

    def test_weights_sum_to_one(self):
        rng = SeededRng(3)
        for _ in range(30):
            S = gaussian(rng, (9, 4))
            Y = gaussian(rng, (9, 4))
            _, alphas = aa1_weights(S, Y, gaussian(rng, 9))
            assert alphas.sum() == pytest.approx(1.0, abs=1e-12)

    def test_singular_system_raises(self):
        S = np.array([[1.0, 1.0], [0.0, 0.0]])  # S^T Y singular
        Y = np.array([[1.0, 1.0], [0.0, 0.0]])
        with pytest.raises(SingularMatrixError):
            aa1_weights(S, Y, np.ones(2))


class TestAa2Weights:
    def test_single_column_equal_to_residual(self):
        g = np.array([1.0, 2.0])
        gammas, _ = aa2_weights(g.reshape(-1, 1), g)
        np.testing.assert_allclose(gammas, [1.0])
        np.testing.assert_allclose(g - g.reshape(-1, 1) @ gammas, 0.0, atol=1e-14)

    def test_scalar_least_squares(self):
        gammas, alphas = aa2_weights(np.array([[2.0]]), np.array([1.0]))
        np.testing.assert_allclose(gammas, [0.5])
        np.testing.assert_allclose(alphas, [0.5, 0.5])

    def test_weights_sum_to_one(self):
        rng = SeededRng(4)
        for _ in range(30):
            Y = gaussian(rng, (8, 3))
            _, alphas = aa2_weights(Y, gaussian(rng, 8))
            assert alphas.sum() == pytest.approx(1.0, abs=1e-12)

    def test_optimality_against_random_candidates(self):
        rng = SeededRng(5)
        Y = gaussian(rng, (12, 4))
        g = gaussian(rng, 12)
        gammas, _ = aa2_weights(Y, g)
        best = np.linalg.norm(g - Y @ gammas)
        for _ in range(100):
            other = gammas + gaussian(rng, 4)
            assert best <= np.linalg.norm(g - Y @ other) + 1e-9

    def test_rank_deficient_min_norm(self):
        y = np.array([1.0, 0.0])
        Y = np.stack([y, y], axis=1)  # rank one
        gammas, _ = aa2_weights(Y, np.array([2.0, 0.0]))
        np.testing.assert_allclose(gammas, [1.0, 1.0])  # min-norm split


class TestBaselineStep:
    def test_empty_memory_plain_step(self):
        f = lambda x: 0.5 * x
        mem = _scalar_memory([1.0], f)
        x_next, stype = baseline_step(mem, "aa1", mem.gs[-1])
        np.testing.assert_allclose(x_next, [0.5])
        assert stype == "KM"

    def test_one_dim_secant_exact(self):
        # AA-I-1 on f(x) = x/2 from x0=1 hits the fixed point at the
        # first accelerated iterate
        f = lambda x: 0.5 * x
        mem = _scalar_memory([1.0, 0.5], f)
        x_next, stype = baseline_step(mem, "aa1", mem.gs[-1])
        np.testing.assert_allclose(x_next, [0.0], atol=1e-15)
        assert stype == "AA"

    def test_weights_one_zero_selects_oldest_f(self):
        # alpha = (1, 0) combination returns f(oldest iterate)
        fs = [np.array([3.0]), np.array([7.0])]
        step = 1.0 * fs[0] + 0.0 * fs[1]
        np.testing.assert_allclose(step, [3.0])

    def test_affine_equivalence_with_inverse_jacobian(self):
        rng = SeededRng(6)
        n, m = 7, 3
        M = 0.4 * gaussian(rng, (n, n)) / np.sqrt(n)
        q = gaussian(rng, n)
        f = lambda x: M @ x + q
        xs = [gaussian(rng, n)]
        for _ in range(m):
            xs.append(f(xs[-1]))
        gs = [x - f(x) for x in xs]
        mem = SlidingMemory(m)
        for x, g in zip(xs, gs):
            mem.push(x, x - g, g)
        x_next, _ = baseline_step(mem, "aa1", gs[-1])
        S, Y = mem.differences()
        B = np.eye(n) + (Y - S) @ np.linalg.solve(S.T @ S, S.T)
        direct = xs[-1] - np.linalg.solve(B, gs[-1])
        np.testing.assert_allclose(x_next, direct, atol=1e-8)

    def test_cross_check_against_stabilized_on_linear_problem(self):
        prob = FixedPointProblem(
            n=1,
            f=lambda x: 0.5 * x,
            regime=NormRegime("contractive", gamma=0.5),
            x0=np.array([1.0]),
        )
        cfg = SolveConfig(alpha=1.0, tol=1e-12)
        res_base = run(prob, cfg, "aa1")
        res_stab = run(prob, cfg, "aa1s")
        # both are exact after the first accelerated step
        assert res_base.trace[2].residual_l2 == 0.0
        assert res_stab.trace[2].residual_l2 == 0.0

    def test_sliding_window_caps_memory(self):
        f = lambda x: 0.9 * x
        mem = SlidingMemory(2)
        x = np.array([1.0])
        for _ in range(6):
            mem.push(x, f(x), x - f(x))
            x = f(x)
        assert mem.m_k == 2
