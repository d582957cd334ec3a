"""Simplex types, Fisher inner product, projection, clamping, sampling."""

import numpy as np
import pytest

from alphageom.manifold import (
    DimensionMismatchError,
    InvariantViolationError,
    SimplexPoint,
    SimplexTangent,
    clamp_normalize,
    fisher_inner,
    make_rng,
    project_tangent,
    sample_uniform_simplex,
    sample_uniform_simplex_array,
)

from conftest import random_point, random_tangent


class TestSimplexPoint:
    def test_valid_point(self):
        pt = SimplexPoint(np.array([0.2, 0.3, 0.5]))
        assert pt.n == 3

    def test_rejects_boundary(self):
        with pytest.raises(InvariantViolationError):
            SimplexPoint(np.array([1.0, 0.0]))

    def test_rejects_bad_sum(self):
        with pytest.raises(InvariantViolationError):
            SimplexPoint(np.array([0.5, 0.6]))

    def test_rejects_singleton(self):
        with pytest.raises(InvariantViolationError):
            SimplexPoint(np.array([1.0]))

    def test_immutable(self):
        pt = SimplexPoint(np.array([0.5, 0.5]))
        with pytest.raises(ValueError):
            pt.probs[0] = 0.7


class TestSimplexTangent:
    def test_zero_sum_required(self):
        with pytest.raises(InvariantViolationError):
            SimplexTangent(np.array([0.1, 0.1]))

    def test_valid(self):
        tan = SimplexTangent(np.array([0.1, -0.1]))
        assert tan.n == 2


class TestFisherInner:
    def test_two_class_value(self):
        """sum a_i b_i / mu_i = 1/0.5 + 1/0.5 = 4 for a = b = (1,-1) at (1/2,1/2)."""
        mu = SimplexPoint(np.array([0.5, 0.5]))
        a = SimplexTangent(np.array([1.0, -1.0]))
        assert fisher_inner(mu, a, a) == pytest.approx(4.0, abs=1e-15)

    def test_zero_vector(self):
        mu = SimplexPoint(np.array([0.3, 0.7]))
        zero = SimplexTangent(np.zeros(2))
        a = SimplexTangent(np.array([0.2, -0.2]))
        assert fisher_inner(mu, zero, a) == 0.0

    def test_three_class_cross_value(self):
        mu = SimplexPoint(np.ones(3) / 3.0)
        a = SimplexTangent(np.array([1.0, -1.0, 0.0]))
        b = SimplexTangent(np.array([0.0, 1.0, -1.0]))
        assert fisher_inner(mu, a, b) == pytest.approx(-3.0, abs=1e-12)

    def test_symmetry_and_positivity(self, rng):
        for _ in range(50):
            mu = random_point(rng, int(rng.integers(2, 6)))
            a = random_tangent(rng, mu)
            b = random_tangent(rng, mu)
            assert fisher_inner(mu, a, b) == pytest.approx(fisher_inner(mu, b, a), rel=1e-12)
            assert fisher_inner(mu, a, a) >= 0.0

    def test_definiteness(self, rng):
        """<a, a> = 0 only for the zero tangent."""
        mu = random_point(rng, 4)
        a = random_tangent(rng, mu)
        if np.abs(a.comps).max() > 1e-6:
            assert fisher_inner(mu, a, a) > 1e-12

    def test_dimension_mismatch(self):
        mu = SimplexPoint(np.array([0.5, 0.5]))
        a = SimplexTangent(np.array([1.0, 0.0, -1.0]))
        with pytest.raises(DimensionMismatchError):
            fisher_inner(mu, a, a)


class TestProjectTangent:
    def test_fixed_point_on_tangents(self, rng):
        mu = random_point(rng, 3)
        a = random_tangent(rng, mu)
        out = project_tangent(mu, a.comps)
        np.testing.assert_allclose(out.comps, a.comps, atol=1e-15)

    def test_kills_base_point(self):
        mu = SimplexPoint(np.array([0.25, 0.75]))
        np.testing.assert_allclose(project_tangent(mu, mu.probs).comps, 0.0, atol=1e-15)

    def test_two_class_value(self):
        mu = SimplexPoint(np.array([0.5, 0.5]))
        out = project_tangent(mu, np.array([1.0, 0.0]))
        np.testing.assert_allclose(out.comps, [0.5, -0.5], atol=1e-15)

    def test_idempotent(self, rng):
        for _ in range(50):
            n = int(rng.integers(2, 7))
            mu = random_point(rng, n)
            w = rng.normal(size=n)
            once = project_tangent(mu, w)
            twice = project_tangent(mu, once.comps)
            np.testing.assert_allclose(twice.comps, once.comps, atol=1e-12)


class TestClampNormalize:
    def test_one_hot(self):
        pt = clamp_normalize(np.array([1.0, 0.0]), 1e-3)
        np.testing.assert_allclose(pt.probs, [1.0 / 1.001, 0.001 / 1.001], rtol=1e-15)

    def test_identity_above_threshold(self):
        for raw in ([0.5, 0.5], [0.2, 0.3, 0.5]):
            pt = clamp_normalize(np.array(raw), 1e-3)
            np.testing.assert_allclose(pt.probs, raw, atol=1e-15)

    def test_all_zero_rejected(self):
        with pytest.raises(InvariantViolationError):
            clamp_normalize(np.zeros(3), 1e-3)

    def test_eps_range_rejected(self):
        with pytest.raises(InvariantViolationError):
            clamp_normalize(np.array([0.5, 0.5]), 0.6)
        with pytest.raises(InvariantViolationError):
            clamp_normalize(np.array([0.5, 0.5]), 0.0)

    def test_negative_rejected(self):
        with pytest.raises(InvariantViolationError):
            clamp_normalize(np.array([1.1, -0.1]), 1e-3)


class TestSampleUniformSimplex:
    def test_invariants(self, rng):
        for _ in range(100):
            pt = sample_uniform_simplex(3, rng)
            assert np.all(pt.probs > 0.0)
            assert abs(pt.probs.sum() - 1.0) <= 1e-12

    def test_component_means(self):
        """Dirichlet(1,1,1) has mean 1/3 per component; LLN at 1e5 draws."""
        arr = sample_uniform_simplex_array(3, 100_000, make_rng(5))
        np.testing.assert_allclose(arr.mean(axis=0), 1.0 / 3.0, atol=0.01)

    def test_determinism(self):
        a = sample_uniform_simplex(4, make_rng(99)).probs
        b = sample_uniform_simplex(4, make_rng(99)).probs
        np.testing.assert_array_equal(a, b)

    def test_small_n_rejected(self, rng):
        with pytest.raises(InvariantViolationError):
            sample_uniform_simplex(1, rng)
