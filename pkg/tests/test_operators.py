import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from aa1s.operators import (
    ConeSpec,
    project_nonneg,
    project_simplex,
    project_soc,
    prox_l2_norm,
    proximal_gradient_map,
    shrinkage,
)

finite_vecs = arrays(
    np.float64,
    st.integers(1, 12),
    elements=st.floats(-50, 50, allow_nan=False),
)


class TestShrinkage:
    def test_examples(self):
        np.testing.assert_allclose(shrinkage(np.array([2.0, -0.5]), 1.0), [1.0, 0.0])
        np.testing.assert_allclose(shrinkage(np.array([-2.0]), 0.5), [-1.5])

    def test_zero_threshold_is_identity(self):
        x = np.array([0.3, -1.2, 0.0])
        np.testing.assert_array_equal(shrinkage(x, 0.0), x)

    def test_negative_threshold_rejected(self):
        with pytest.raises(ValueError):
            shrinkage(np.ones(2), -0.1)

    @given(finite_vecs, st.floats(0, 10))
    @settings(max_examples=50, deadline=None)
    def test_magnitude_never_grows(self, x, kappa):
        out = shrinkage(x, kappa)
        assert np.all(np.abs(out) <= np.maximum(np.abs(x) - kappa, 0.0) + 1e-12)
        assert np.all(out * x >= 0.0)


class TestProjectSoc:
    def test_inside_cone(self):
        s = np.array([3.0, 4.0, 10.0])
        np.testing.assert_array_equal(project_soc(s), s)

    def test_polar_cone_maps_to_zero(self):
        np.testing.assert_array_equal(project_soc(np.array([3.0, 4.0, -10.0])), 0.0)

    def test_boundary_case(self):
        out = project_soc(np.array([3.0, 4.0, 0.0]))
        np.testing.assert_allclose(out, [1.5, 2.0, 2.5])

    def test_result_in_cone(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            p = project_soc(rng.normal(size=5))
            assert np.linalg.norm(p[:-1]) <= p[-1] + 1e-12


class TestProjectSimplex:
    def test_already_feasible(self):
        np.testing.assert_allclose(
            project_simplex(np.array([0.5, 0.5])), [0.5, 0.5]
        )

    def test_symmetry_forced(self):
        np.testing.assert_allclose(project_simplex(np.zeros(2)), [0.5, 0.5])

    def test_vertex(self):
        # 2-d simplex is the segment (t, 1-t); distance to (2, 0) is
        # minimized at t = 1
        np.testing.assert_allclose(project_simplex(np.array([2.0, 0.0])), [1.0, 0.0])

    @given(arrays(np.float64, st.integers(1, 9), elements=st.floats(-20, 20)))
    @settings(max_examples=80, deadline=None)
    def test_feasible_and_idempotent(self, x):
        p = project_simplex(x)
        assert np.all(p >= 0.0)
        assert abs(p.sum() - 1.0) <= 1e-9
        np.testing.assert_allclose(project_simplex(p), p, atol=1e-12)

    def test_matches_quadratic_oracle_2d(self):
        # brute-force the segment parametrization (t, 1-t), t in [0, 1]
        rng = np.random.default_rng(1)
        ts = np.linspace(0.0, 1.0, 200_001)
        seg = np.stack([ts, 1.0 - ts], axis=1)
        for _ in range(20):
            x = rng.normal(size=2) * 3.0
            p = project_simplex(x)
            best = seg[np.argmin(((seg - x) ** 2).sum(axis=1))]
            np.testing.assert_allclose(p, best, atol=1e-4)


class TestProxL2Norm:
    def test_inside_ball(self):
        np.testing.assert_array_equal(prox_l2_norm(np.array([0.5, 0.0])), 0.0)

    def test_outside(self):
        np.testing.assert_allclose(prox_l2_norm(np.array([2.0, 0.0])), [1.0, 0.0])

    def test_zero(self):
        np.testing.assert_array_equal(prox_l2_norm(np.zeros(3)), 0.0)


class TestConeSpec:
    def test_dims_and_dual(self):
        cone = ConeSpec((("free", 2), ("zero", 1), ("nonneg", 3), ("soc", 4)))
        assert cone.dim == 10
        assert cone.dual().blocks == (
            ("zero", 2),
            ("free", 1),
            ("nonneg", 3),
            ("soc", 4),
        )

    def test_blockwise_projection(self):
        cone = ConeSpec((("free", 1), ("nonneg", 2), ("soc", 3)))
        x = np.array([-5.0, -1.0, 2.0, 3.0, 4.0, 0.0])
        out = cone.project(x)
        np.testing.assert_allclose(out, [-5.0, 0.0, 2.0, 1.5, 2.0, 2.5])

    def test_projection_idempotent(self):
        cone = ConeSpec((("zero", 2), ("nonneg", 2), ("soc", 3)))
        rng = np.random.default_rng(2)
        for _ in range(100):
            p = cone.project(rng.normal(size=7))
            np.testing.assert_allclose(cone.project(p), p, atol=1e-12)

    def test_moreau_decomposition(self):
        cone = ConeSpec((("free", 2), ("nonneg", 3), ("soc", 3)))
        rng = np.random.default_rng(3)
        for _ in range(100):
            x = rng.normal(size=8)
            # x = proj_C(x) - proj_C*(-x) and the parts are orthogonal
            p = cone.project(x)
            q = cone.project_dual(-x)
            np.testing.assert_allclose(p - q, x, atol=1e-10)
            assert abs(p @ q) <= 1e-10

    def test_rejects_bad_blocks(self):
        with pytest.raises(ValueError):
            ConeSpec((("circle", 2),))

    def test_nonneg_projection(self):
        np.testing.assert_array_equal(
            project_nonneg(np.array([-1.0, 2.0])), [0.0, 2.0]
        )


class TestProximalGradientMap:
    def test_plain_gradient_descent(self):
        # F(x) = x^2 / 2, alpha = 1: the map is identically zero
        f = proximal_gradient_map(lambda x: x, 1.0)
        np.testing.assert_allclose(f(np.array([3.0])), [0.0])

    def test_pure_projection(self):
        f = proximal_gradient_map(lambda x: 0.0 * x, 1.0, prox=project_nonneg)
        np.testing.assert_allclose(f(np.array([-1.0])), [0.0])

    def test_ista_scalar(self):
        # F(x) = (x-2)^2/2, kappa = 0.5, alpha = 1: f(x) = S_0.5(2) = 1.5
        f = proximal_gradient_map(
            lambda x: x - 2.0, 1.0, prox=lambda v: shrinkage(v, 0.5)
        )
        np.testing.assert_allclose(f(np.array([0.0])), [1.5])
