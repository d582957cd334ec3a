"""Representations, mapped norms, divergences, and the gradient identity."""

import math

import numpy as np
import pytest

from alphageom.alpha_geometry import (
    AlphaParam,
    MappedState,
    MappedTangent,
    alpha_divergence,
    alpha_norm_sq,
    from_alpha_rep,
    map_tangent,
    measure_alpha_divergence,
    modified_alpha_rep,
    neg_divergence_gradient,
    project_sphere_tangent,
    q_logarithm,
    to_alpha_rep,
    unmap_tangent,
)
from alphageom.manifold import InvariantViolationError, SimplexPoint, SimplexTangent, fisher_inner

from conftest import ALPHA_GRID, random_point, random_tangent


class TestAlphaParam:
    @pytest.mark.parametrize(
        "alpha,p", [(-1.0, 1.0), (-0.5, 4.0 / 3.0), (0.0, 2.0), (0.5, 4.0), (1.0, math.inf)]
    )
    def test_exponent(self, alpha, p):
        assert AlphaParam(alpha).p == p

    def test_range_validation(self):
        with pytest.raises(InvariantViolationError):
            AlphaParam(1.0001)
        with pytest.raises(InvariantViolationError):
            AlphaParam(-2.0)


class TestAlphaRep:
    def test_identity_at_minus_one(self):
        mu = SimplexPoint(np.array([0.3, 0.7]))
        x = to_alpha_rep(mu, -1.0)
        np.testing.assert_array_equal(x.coords, mu.probs)

    def test_square_root_at_zero(self):
        x = to_alpha_rep(SimplexPoint(np.array([0.25, 0.75])), 0.0)
        np.testing.assert_allclose(x.coords, [0.5, math.sqrt(0.75)], rtol=1e-15)

    def test_log_at_one(self):
        x = to_alpha_rep(SimplexPoint(np.array([0.5, 0.5])), 1.0)
        np.testing.assert_allclose(x.coords, [math.log(0.5)] * 2, rtol=1e-15)

    def test_inverse_values(self):
        al = AlphaParam(0.0)
        mu = from_alpha_rep(MappedState(np.array([0.6, 0.8]), al))
        np.testing.assert_allclose(mu.probs, [0.36, 0.64], rtol=1e-15)
        al1 = AlphaParam(1.0)
        mu1 = from_alpha_rep(MappedState(np.log(np.array([0.9, 0.1])), al1))
        np.testing.assert_allclose(mu1.probs, [0.9, 0.1], rtol=1e-14)

    def test_round_trip_all_alphas(self, rng):
        for a in ALPHA_GRID:
            for _ in range(20):
                mu = random_point(rng, int(rng.integers(2, 6)))
                back = from_alpha_rep(to_alpha_rep(mu, a))
                np.testing.assert_allclose(back.probs, mu.probs, atol=1e-12)

    def test_sphere_invariant_enforced(self):
        with pytest.raises(InvariantViolationError):
            MappedState(np.array([0.9, 0.9]), AlphaParam(0.0))


class TestTangentMapping:
    def test_identity_at_minus_one(self, rng):
        mu = random_point(rng, 3)
        a = random_tangent(rng, mu)
        u = map_tangent(mu, a, -1.0)
        np.testing.assert_allclose(u.comps, a.comps, rtol=1e-15)

    def test_half_density_scaling(self):
        mu = SimplexPoint(np.array([0.25, 0.75]))
        a = SimplexTangent(np.array([0.1, -0.1]))
        u = map_tangent(mu, a, 0.0)
        np.testing.assert_allclose(u.comps, [0.1, -0.1 / (2.0 * math.sqrt(0.75))], rtol=1e-14)

    def test_logit_scaling(self):
        mu = SimplexPoint(np.array([0.5, 0.5]))
        a = SimplexTangent(np.array([0.1, -0.1]))
        u = map_tangent(mu, a, 1.0)
        np.testing.assert_allclose(u.comps, [0.2, -0.2], rtol=1e-15)

    def test_unmap_value(self):
        al = AlphaParam(1.0)
        base = to_alpha_rep(SimplexPoint(np.array([0.5, 0.5])), al)
        a = unmap_tangent(MappedTangent(np.array([0.2, -0.2]), al, base))
        np.testing.assert_allclose(a.comps, [0.1, -0.1], rtol=1e-15)

    def test_round_trip_all_alphas(self, rng):
        for a in ALPHA_GRID:
            for _ in range(20):
                mu = random_point(rng, int(rng.integers(2, 6)))
                tan = random_tangent(rng, mu)
                back = unmap_tangent(map_tangent(mu, tan, a))
                np.testing.assert_allclose(back.comps, tan.comps, atol=1e-12)


class TestSphereProjection:
    def test_annihilates_base(self, rng):
        for a in ALPHA_GRID:
            x = to_alpha_rep(random_point(rng, 4), a)
            out = project_sphere_tangent(x, x.coords)
            if a < 1.0:
                np.testing.assert_allclose(out.comps, 0.0, atol=1e-12)

    def test_fixed_point_and_idempotent(self, rng):
        for a in ALPHA_GRID:
            x = to_alpha_rep(random_point(rng, 4), a)
            w = rng.normal(size=4)
            once = project_sphere_tangent(x, w)
            twice = project_sphere_tangent(x, once.comps)
            np.testing.assert_allclose(twice.comps, once.comps, atol=1e-12)

    def test_unit_sphere_value(self):
        x = MappedState(np.array([0.6, 0.8]), AlphaParam(0.0))
        out = project_sphere_tangent(x, np.array([1.0, 0.0]))
        np.testing.assert_allclose(out.comps, [0.64, -0.48], rtol=1e-14)


class TestAlphaNormSq:
    def test_zero(self, rng):
        mu = random_point(rng, 3)
        u = map_tangent(mu, SimplexTangent(np.zeros(3)), 0.5)
        assert alpha_norm_sq(u, mu) == 0.0

    def test_mixture_value(self):
        mu = SimplexPoint(np.array([0.5, 0.5]))
        a = SimplexTangent(np.array([1.0, -1.0]))
        u = map_tangent(mu, a, -1.0)
        assert alpha_norm_sq(u, mu) == pytest.approx(4.0, rel=1e-14)

    def test_logit_value(self):
        al = AlphaParam(1.0)
        mu = SimplexPoint(np.array([0.5, 0.5]))
        base = to_alpha_rep(mu, al)
        u = MappedTangent(np.array([0.2, -0.2]), al, base)
        assert alpha_norm_sq(u, mu) == pytest.approx(0.04, rel=1e-14)

    def test_matches_fisher_norm(self, rng):
        """The mapped norm is parameterization-free: equals <a,a>_mu for every alpha."""
        for a in ALPHA_GRID:
            for _ in range(40):
                mu = random_point(rng, int(rng.integers(2, 6)))
                tan = random_tangent(rng, mu)
                want = fisher_inner(mu, tan, tan)
                got = alpha_norm_sq(map_tangent(mu, tan, a), mu)
                assert got == pytest.approx(want, rel=1e-10)


class TestAlphaDivergence:
    def test_zero_at_identity(self, rng):
        for a in ALPHA_GRID:
            mu = random_point(rng, 3)
            assert alpha_divergence(mu, mu, a) == pytest.approx(0.0, abs=1e-14)

    def test_kl_at_minus_one(self):
        mu = SimplexPoint(np.array([0.5, 0.5]))
        nu = SimplexPoint(np.array([0.25, 0.75]))
        want = 0.5 * math.log(2.0) + 0.5 * math.log(2.0 / 3.0)
        assert alpha_divergence(mu, nu, -1.0) == pytest.approx(want, rel=1e-14)

    def test_reverse_kl_at_plus_one(self):
        mu = SimplexPoint(np.array([0.5, 0.5]))
        nu = SimplexPoint(np.array([0.25, 0.75]))
        assert alpha_divergence(mu, nu, 1.0) == pytest.approx(
            alpha_divergence(nu, mu, -1.0), rel=1e-14
        )

    def test_hellinger_type_value(self):
        mu = SimplexPoint(np.array([0.5, 0.5]))
        nu = SimplexPoint(np.array([0.25, 0.75]))
        want = 4.0 * (1.0 - (math.sqrt(0.125) + math.sqrt(0.375)))
        assert alpha_divergence(mu, nu, 0.0) == pytest.approx(want, rel=1e-12)

    def test_nonnegative_near_minimum(self, rng):
        """D(mu||nu) >= 0 with the minimum at nu = mu, probed by random nearby nu."""
        for a in ALPHA_GRID:
            mu = random_point(rng, 3)
            base = alpha_divergence(mu, mu, a)
            for _ in range(30):
                tan = random_tangent(rng, mu)
                nu = SimplexPoint(mu.probs + 1e-2 * tan.comps)
                d = alpha_divergence(mu, nu, a)
                assert d >= 0.0
                assert d >= base - 1e-14

    def test_limit_continuity(self, rng):
        """alpha -> +-1 limits of the interior formula approach the KL values."""
        mu = random_point(rng, 3)
        nu = random_point(rng, 3)
        for sign in (-1.0, 1.0):
            inner = alpha_divergence(mu, nu, sign * (1.0 - 1e-7))
            limit = alpha_divergence(mu, nu, sign)
            assert inner == pytest.approx(limit, rel=1e-5)


class TestSecondOrderExpansion:
    """D(mu || mu + eps a) = eps^2/2 ||a||_g^2 + O(eps^3), all alpha."""

    @pytest.mark.parametrize("alpha", [-1.0, -0.5, 0.0, 0.5, 1.0])
    def test_taylor_ratio(self, alpha, rng):
        for _ in range(25):
            mu = random_point(rng, 3)
            tan = random_tangent(rng, mu)
            norm_sq = fisher_inner(mu, tan, tan)
            if norm_sq < 1e-12:
                continue
            for eps in (1e-2, 1e-3):
                nu = SimplexPoint(mu.probs + eps * tan.comps)
                ratio = alpha_divergence(mu, nu, alpha) / (0.5 * eps**2 * norm_sq)
                assert abs(ratio - 1.0) <= 10.0 * eps


class TestNegDivergenceGradient:
    def test_zero_at_minimum(self, rng):
        for a in ALPHA_GRID:
            mu = random_point(rng, 3)
            np.testing.assert_allclose(neg_divergence_gradient(mu, mu, a).comps, 0.0, atol=1e-12)

    def test_mixture_case_is_difference(self, rng):
        mu = random_point(rng, 3)
        nu = random_point(rng, 3)
        out = neg_divergence_gradient(mu, nu, -1.0)
        np.testing.assert_allclose(out.comps, nu.probs - mu.probs, atol=1e-14)

    def test_logit_case_value(self):
        """P_mu(mu log(nu/mu)) at mu=(1/2,1/2), nu=(9/10,1/10) is +-(1/4) log 9."""
        mu = SimplexPoint(np.array([0.5, 0.5]))
        nu = SimplexPoint(np.array([0.9, 0.1]))
        out = neg_divergence_gradient(mu, nu, 1.0)
        want = 0.25 * math.log(9.0)
        np.testing.assert_allclose(out.comps, [want, -want], rtol=1e-13)

    @pytest.mark.parametrize("alpha", [-1.0, -0.5, 0.0, 0.5, 1.0])
    def test_matches_divergence_finite_differences(self, alpha, rng):
        """-mu * d/dmu D^(-alpha)(.||nu) projected equals the returned field.

        The derivative of the positive-measure divergence in its first slot is
        checked against central differences; draws keep coordinates above 0.05
        so the h^2 truncation term stays below tolerance.
        """
        for _ in range(10):
            mu = random_point(rng, 3, floor=0.05)
            nu = random_point(rng, 3, floor=0.05)
            h = 1e-5
            grad = np.empty(3)
            for i in range(3):
                shift = np.zeros(3)
                shift[i] = h
                grad[i] = (
                    measure_alpha_divergence(mu.probs + shift, nu.probs, -alpha)
                    - measure_alpha_divergence(mu.probs - shift, nu.probs, -alpha)
                ) / (2.0 * h)
            ana = -q_logarithm(nu.probs / mu.probs, alpha)
            np.testing.assert_allclose(grad, ana, atol=1e-6)
            want = neg_divergence_gradient(mu, nu, alpha).comps
            from alphageom.manifold import project_tangent_array

            np.testing.assert_allclose(
                project_tangent_array(mu.probs, -mu.probs * grad), want, atol=1e-6
            )


class TestModifiedAlphaRep:
    def test_mixture_case(self, rng):
        mu = random_point(rng, 3)
        np.testing.assert_allclose(modified_alpha_rep(mu, -1.0), mu.probs - 1.0, rtol=1e-15)

    def test_half_density_case(self):
        mu = SimplexPoint(np.array([0.25, 0.75]))
        np.testing.assert_allclose(
            modified_alpha_rep(mu, 0.0), [-1.0, 2.0 * (math.sqrt(0.75) - 1.0)], rtol=1e-14
        )

    def test_large_p_approaches_log(self):
        mu = SimplexPoint(np.array([0.5, 0.5]))
        alpha = AlphaParam(1.0 - 2.0 / 1e4)  # p = 1e4
        np.testing.assert_allclose(modified_alpha_rep(mu, alpha), np.log(mu.probs), atol=1e-3)

    def test_rejects_nonpositive(self):
        with pytest.raises(InvariantViolationError):
            q_logarithm([0.5, 0.0], 0.0)
