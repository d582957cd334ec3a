import numpy as np
import pytest

from alphageom.manifold import (
    SimplexPoint,
    SimplexTangent,
    clamp_normalize,
    make_rng,
    project_tangent,
    sample_uniform_simplex_array,
)

ALPHA_GRID = (-1.0, -0.5, 0.0, 0.5, 1.0)
CLOSED_FORM_ALPHAS = (-1.0, 0.0, 1.0)
NUMERICAL_ALPHAS = (-0.5, 0.5)


def random_point(rng, n, floor=1e-2) -> SimplexPoint:
    """Uniform-simplex draw clamped to the given interior margin."""
    return clamp_normalize(sample_uniform_simplex_array(n, 1, rng, floor)[0], floor)


def random_tangent(rng, mu: SimplexPoint) -> SimplexTangent:
    """Random tangent with |a_i| <= 2 mu_i, safe for small divergence steps."""
    z = rng.uniform(-1.0, 1.0, size=mu.n)
    return project_tangent(mu, mu.probs * z)


@pytest.fixture
def rng():
    return make_rng(20240809)
