"""Velocity functionals on discretized simplex curves.

The degree-1-homogeneous Finsler metric F(mu, a) = (sum |a_i/mu_i|^p mu_i)^(1/p)
generalizes the Fisher norm (p = 2 recovers it); its integrated p-th power is
the energy that alpha-geodesics minimize. The p = infinity counterpart is the
max relative velocity sup_t max_i |gamma_i'/gamma_i|. A perturbation helper
builds competitor curves with the same endpoints for optimality checks.
"""

from dataclasses import dataclass

import numpy as np

from .alpha_geometry import as_alpha
from .geodesics import GeodesicCurve
from .manifold import (
    InvariantViolationError,
    SimplexPoint,
    SimplexTangent,
)


@dataclass(frozen=True)
class DiscreteCurve:
    """K+1 interior simplex points at uniform times on [0, 1], K >= 2."""

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=np.float64)
        if nodes.ndim != 2 or nodes.shape[0] < 3:
            raise InvariantViolationError("a discrete curve needs at least 3 nodes")
        if np.any(nodes <= 0.0):
            raise InvariantViolationError("curve nodes must stay interior")
        sums = nodes.sum(axis=1)
        if np.max(np.abs(sums - 1.0)) > 1e-9:
            raise InvariantViolationError("curve nodes must lie on the simplex")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def segments(self) -> int:
        return self.nodes.shape[0] - 1

    def node_velocities(self) -> np.ndarray:
        """Forward-difference velocities; the last node reuses the final segment."""
        k = self.segments
        vel = np.empty_like(self.nodes)
        vel[:-1] = (self.nodes[1:] - self.nodes[:-1]) * k
        vel[-1] = vel[-2]
        return vel


def discretize_geodesic(curve: GeodesicCurve, k: int) -> DiscreteCurve:
    """Sample a geodesic at k+1 uniform times."""
    ts = np.linspace(0.0, 1.0, k + 1)
    return DiscreteCurve(np.stack([curve.point_simplex(t).probs for t in ts]))


def finsler_metric(mu: SimplexPoint, a: SimplexTangent, alpha) -> float:
    """F(mu, a) = (sum |a_i/mu_i|^p mu_i)^(1/p); 1-homogeneous in a."""
    alpha = as_alpha(alpha)
    if alpha.is_log_chart:
        raise InvariantViolationError(
            "the Finsler metric needs finite p; use max_relative_velocity at alpha=1"
        )
    p = alpha.p
    return float(np.sum(np.abs(a.comps / mu.probs) ** p * mu.probs) ** (1.0 / p))


def curve_alpha_energy(curve: DiscreteCurve, alpha) -> float:
    """Trapezoidal quadrature of (1/p) * integral F^p(gamma, gamma') dt."""
    alpha = as_alpha(alpha)
    if alpha.is_log_chart:
        raise InvariantViolationError("the alpha-energy integral needs finite p")
    p = alpha.p
    vel = curve.node_velocities()
    fp = np.sum(np.abs(vel / curve.nodes) ** p * curve.nodes, axis=1)
    return float(np.trapezoid(fp, dx=1.0 / curve.segments) / p)


def kinetic_energy(curve: DiscreteCurve) -> float:
    """(1/2) * integral ||gamma'||_g^2 dt; the p = 2 energy."""
    return curve_alpha_energy(curve, 0.0)


def max_relative_velocity(curve: DiscreteCurve) -> float:
    """Discrete essential supremum of |gamma_i'(t) / gamma_i(t)|."""
    vel = curve.node_velocities()
    return float(np.max(np.abs(vel / curve.nodes)))


def perturb_curve(curve: DiscreteCurve, magnitude: float, rng: np.random.Generator) -> DiscreteCurve:
    """Competitor curve: same endpoints, interior nodes shifted by zero-sum noise.

    Noise per node has max-abs exactly `magnitude`, which must stay below the
    smallest interior-node coordinate so the result remains interior.
    """
    if magnitude < 0.0:
        raise InvariantViolationError("magnitude must be nonnegative")
    interior = curve.nodes[1:-1]
    margin = float(interior.min())
    if magnitude >= margin:
        raise InvariantViolationError(
            f"magnitude {magnitude} exceeds the curve's interior margin {margin}"
        )
    if magnitude == 0.0:
        return curve
    noise = rng.uniform(-1.0, 1.0, size=interior.shape)
    noise -= noise.mean(axis=1, keepdims=True)
    peak = np.maximum(np.abs(noise).max(axis=1, keepdims=True), 1e-300)
    noise *= magnitude / peak
    nodes = curve.nodes.copy()
    shifted = interior + noise
    nodes[1:-1] = shifted / shifted.sum(axis=1, keepdims=True)
    return DiscreteCurve(nodes)
