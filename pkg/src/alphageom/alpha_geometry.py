"""Alpha-representations of the simplex and the geometry they induce.

For alpha in [-1, 1] and p = 2/(1-alpha), a distribution mu embeds as
x = mu^((1-alpha)/2), which lands on the positive orthant of the unit L_p
sphere (x = log mu in the p = infinity limit at alpha = 1). Tangents map
along, the Fisher norm has a closed form in the mapped coordinates, and
the alpha-divergence family interpolates between the two KL orientations.
"""

import math
from dataclasses import dataclass

import numpy as np

from .manifold import (
    DimensionMismatchError,
    InvariantViolationError,
    SimplexPoint,
    SimplexTangent,
    _as_vector,
    project_tangent_array,
)

SPHERE_TOL = 1e-9


@dataclass(frozen=True)
class AlphaParam:
    """Geometry selector alpha in [-1, 1] with the derived exponent p = 2/(1-alpha)."""

    alpha: float

    def __post_init__(self):
        if not -1.0 <= self.alpha <= 1.0:
            raise InvariantViolationError(f"alpha={self.alpha} outside [-1, 1]")
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def p(self) -> float:
        """Sphere exponent; math.inf exactly when alpha = 1."""
        if self.alpha == 1.0:
            return math.inf
        return 2.0 / (1.0 - self.alpha)

    @property
    def is_log_chart(self) -> bool:
        """True at alpha = 1, where coordinates are log-probabilities."""
        return self.alpha == 1.0

    @property
    def has_closed_form(self) -> bool:
        """True for alpha in {-1, 0, 1}, where no ODE solve is required."""
        return self.alpha in (-1.0, 0.0, 1.0)


def as_alpha(alpha) -> AlphaParam:
    return alpha if isinstance(alpha, AlphaParam) else AlphaParam(float(alpha))


def _logsumexp(x: np.ndarray, axis: int = -1, keepdims: bool = False) -> np.ndarray:
    m = np.max(x, axis=axis, keepdims=True)
    out = np.log(np.sum(np.exp(x - m), axis=axis, keepdims=True)) + m
    if not keepdims:
        out = np.squeeze(out, axis=axis)
    return out


@dataclass(frozen=True)
class MappedState:
    """Alpha-representation coordinates of an interior distribution."""

    coords: np.ndarray
    alpha: AlphaParam

    def __post_init__(self):
        coords = _as_vector(self.coords, "coords")
        if self.alpha.is_log_chart:
            lse = float(_logsumexp(coords))
            if abs(lse) > SPHERE_TOL:
                raise InvariantViolationError(f"logsumexp(coords)={lse!r}, not 0")
        else:
            if np.any(coords <= 0.0):
                raise InvariantViolationError("mapped coordinates must be strictly positive")
            radius = float(np.sum(coords**self.alpha.p))
            if abs(radius - 1.0) > SPHERE_TOL:
                raise InvariantViolationError(f"sum coords^p = {radius!r}, not 1")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)

    @property
    def n(self) -> int:
        return self.coords.size


@dataclass(frozen=True)
class MappedTangent:
    """Tangent vector to the mapped sphere (or logit chart) at a base state."""

    comps: np.ndarray
    alpha: AlphaParam
    base: MappedState

    def __post_init__(self):
        comps = _as_vector(self.comps, "comps")
        if self.alpha.alpha != self.base.alpha.alpha:
            raise InvariantViolationError("tangent and base use different alpha")
        if comps.size != self.base.n:
            raise DimensionMismatchError("tangent dimension differs from base")
        scale = max(1.0, float(np.abs(comps).max(initial=0.0)))
        if self.alpha.is_log_chart:
            resid = float(np.sum(np.exp(self.base.coords) * comps))
        else:
            resid = float(np.sum(self.base.coords ** (self.alpha.p - 1.0) * comps))
        if abs(resid) > SPHERE_TOL * scale:
            raise InvariantViolationError(f"tangency residual {resid!r} exceeds tolerance")
        comps.setflags(write=False)
        object.__setattr__(self, "comps", comps)

    @property
    def n(self) -> int:
        return self.comps.size


# ---------------------------------------------------------------------------
# representations
# ---------------------------------------------------------------------------


def alpha_rep_array(mu: np.ndarray, alpha: AlphaParam) -> np.ndarray:
    """x = mu^((1-alpha)/2), or log mu at alpha = 1; supports batch axes."""
    if alpha.is_log_chart:
        return np.log(mu)
    return mu ** (1.0 / alpha.p)


def alpha_rep_inverse_array(x: np.ndarray, alpha: AlphaParam) -> np.ndarray:
    """mu = x^p, or exp(x) at alpha = 1; supports batch axes."""
    if alpha.is_log_chart:
        return np.exp(x)
    return x**alpha.p


def to_alpha_rep(mu: SimplexPoint, alpha) -> MappedState:
    """Embed mu in its alpha-representation on the unit L_p sphere / logit chart."""
    alpha = as_alpha(alpha)
    return MappedState(alpha_rep_array(mu.probs, alpha), alpha)


def from_alpha_rep(x: MappedState) -> SimplexPoint:
    """Invert the representation back to probabilities."""
    return SimplexPoint(alpha_rep_inverse_array(x.coords, x.alpha))


def tangent_scale_array(mu: np.ndarray, alpha: AlphaParam) -> np.ndarray:
    """Factor c with u = c * a for the tangent mapping: mu^(1/p)/(p mu), or 1/mu."""
    if alpha.is_log_chart:
        return 1.0 / mu
    return mu ** (1.0 / alpha.p) / (alpha.p * mu)


def map_tangent(mu: SimplexPoint, a: SimplexTangent, alpha) -> MappedTangent:
    """Push a simplex tangent through the representation's derivative."""
    alpha = as_alpha(alpha)
    if mu.n != a.n:
        raise DimensionMismatchError("point and tangent dimension differ")
    base = to_alpha_rep(mu, alpha)
    u = tangent_scale_array(mu.probs, alpha) * a.comps
    return MappedTangent(u, alpha, base)


def unmap_tangent(u: MappedTangent) -> SimplexTangent:
    """Exact inverse of map_tangent."""
    mu = alpha_rep_inverse_array(u.base.coords, u.alpha)
    return SimplexTangent(u.comps / tangent_scale_array(mu, u.alpha))


# ---------------------------------------------------------------------------
# sphere tangent projection and norm
# ---------------------------------------------------------------------------


def sphere_project_array(x: np.ndarray, w: np.ndarray, alpha: AlphaParam) -> np.ndarray:
    """Project w onto the mapped tangent space at x; supports batch axes.

    For alpha < 1 this is w - x * sum_j x_j^(p-1) w_j on the L_p sphere; in
    the logit chart it subtracts the mu-weighted mean from every component.
    """
    if alpha.is_log_chart:
        mu = np.exp(x)
        return w - np.sum(mu * w, axis=-1, keepdims=True)
    return w - x * np.sum(x ** (alpha.p - 1.0) * w, axis=-1, keepdims=True)


def project_sphere_tangent(x: MappedState, w) -> MappedTangent:
    """Orthogonal projection of an arbitrary vector onto the tangent space at x."""
    w = _as_vector(w, "w")
    if w.size != x.n:
        raise DimensionMismatchError("vector dimension differs from state")
    return MappedTangent(sphere_project_array(x.coords, w, x.alpha), x.alpha, x)


def alpha_norm_sq_array(u: np.ndarray, mu: np.ndarray, alpha: AlphaParam) -> np.ndarray:
    """Mapped Riemannian norm p^2 sum u_i^2 mu_i^alpha (sum u_i^2 mu_i at alpha=1)."""
    if alpha.is_log_chart:
        return np.sum(u**2 * mu, axis=-1)
    return alpha.p**2 * np.sum(u**2 * mu**alpha.alpha, axis=-1)


def alpha_norm_sq(u: MappedTangent, mu: SimplexPoint) -> float:
    """Squared norm of a mapped tangent; equals ||a||_g^2 of the unmapped vector."""
    if mu.n != u.n:
        raise DimensionMismatchError("point and tangent dimension differ")
    expected = alpha_rep_array(mu.probs, u.alpha)
    if np.max(np.abs(expected - u.base.coords)) > 1e-8:
        raise InvariantViolationError("tangent is not based at the given point")
    return float(alpha_norm_sq_array(u.comps, mu.probs, u.alpha))


# ---------------------------------------------------------------------------
# deformed logarithm and divergences
# ---------------------------------------------------------------------------


def q_logarithm(values, alpha) -> np.ndarray:
    """Deformed logarithm p(w^(1/p) - 1); ordinary log at alpha = 1.

    Continuous in alpha: converges to log(w) as p grows.
    """
    alpha = as_alpha(alpha)
    w = np.asarray(values, dtype=np.float64)
    if np.any(w <= 0.0):
        raise InvariantViolationError("q_logarithm needs strictly positive input")
    if alpha.is_log_chart:
        return np.log(w)
    # p*expm1(log(w)/p) avoids cancellation for large p
    return alpha.p * np.expm1(np.log(w) / alpha.p)


def modified_alpha_rep(mu: SimplexPoint, alpha) -> np.ndarray:
    """Translated/scaled representation p(mu^(1/p) - 1), continuous through alpha = 1."""
    return q_logarithm(mu.probs, alpha)


def _kl_array(mu: np.ndarray, nu: np.ndarray) -> float:
    return float(np.sum(mu * (np.log(mu) - np.log(nu))))


def alpha_divergence(mu: SimplexPoint, nu: SimplexPoint, alpha) -> float:
    """Alpha-divergence of the pair, zero iff mu = nu.

    4/(1-alpha^2) * (1 - sum nu^((1+alpha)/2) mu^((1-alpha)/2)) for |alpha| < 1;
    the limits are KL(mu||nu) at alpha = -1 and KL(nu||mu) at alpha = +1.
    """
    alpha = as_alpha(alpha)
    if mu.n != nu.n:
        raise DimensionMismatchError("distributions live on different simplices")
    if alpha.alpha == -1.0:
        return _kl_array(mu.probs, nu.probs)
    if alpha.alpha == 1.0:
        return _kl_array(nu.probs, mu.probs)
    c = (1.0 + alpha.alpha) / 2.0
    # 1 - sum mu (nu/mu)^c accumulated without cancellation per term
    mixed = np.sum(mu.probs * np.expm1(c * (np.log(nu.probs) - np.log(mu.probs))))
    return float(-4.0 / (1.0 - alpha.alpha**2) * mixed)


def measure_alpha_divergence(m, n, alpha) -> float:
    """Alpha-divergence extended to positive measures (not necessarily normalized).

    2/(1-a) sum n + 2/(1+a) sum m - 4/(1-a^2) sum n^((1+a)/2) m^((1-a)/2),
    with generalized-KL limits at alpha = -1 and +1. Restricting to the
    simplex recovers alpha_divergence.
    """
    alpha = as_alpha(alpha)
    m = _as_vector(m, "m")
    n = _as_vector(n, "n")
    if m.size != n.size:
        raise DimensionMismatchError("measures live on different spaces")
    if np.any(m <= 0.0) or np.any(n <= 0.0):
        raise InvariantViolationError("measures must be strictly positive")
    a = alpha.alpha
    if a == -1.0:
        return float(np.sum(n) - np.sum(m) + np.sum(m * np.log(m / n)))
    if a == 1.0:
        return float(np.sum(m) - np.sum(n) + np.sum(n * np.log(n / m)))
    mixed = np.sum(n ** ((1.0 + a) / 2.0) * m ** ((1.0 - a) / 2.0))
    return float(
        2.0 / (1.0 - a) * np.sum(n) + 2.0 / (1.0 + a) * np.sum(m) - 4.0 / (1.0 - a**2) * mixed
    )


def neg_divergence_gradient(mu: SimplexPoint, nu: SimplexPoint, alpha) -> SimplexTangent:
    """Projected negative gradient of the (-alpha)-divergence in its first slot.

    Returns P_mu(mu * qlog(nu/mu)); dividing the logarithm map by tau_dot(0)
    yields exactly this field, so it is the direction of steepest descent the
    alpha-geodesic follows.
    """
    alpha = as_alpha(alpha)
    if mu.n != nu.n:
        raise DimensionMismatchError("distributions live on different simplices")
    w = mu.probs * q_logarithm(nu.probs / mu.probs, alpha)
    return SimplexTangent(project_tangent_array(mu.probs, w))
