"""Geodesics of the alpha-connection on the simplex.

Exponential and logarithm maps in the mapped coordinates, with closed
forms at alpha in {-1, 0, 1} (straight lines, great circles, logit lines)
and solver-backed curves elsewhere. A GeodesicCurve caches its
boundary-value reparameterization once and then evaluates points and
velocities anywhere on [0, 1].
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .alpha_geometry import (
    AlphaParam,
    MappedState,
    MappedTangent,
    alpha_divergence,
    alpha_rep_inverse_array,
    as_alpha,
    from_alpha_rep,
    sphere_project_array,
    to_alpha_rep,
    _logsumexp,
)
from .manifold import (
    InvariantViolationError,
    NumericalError,
    SimplexPoint,
    _as_vector,
)
from .reparam import (
    DEFAULT_MAX_ITER,
    DEFAULT_STEPS,
    DEFAULT_TOL,
    ReparamSolution,
    solve_tau_bvp,
    solve_tau_ivp,
)

T_FIELD_CLAMP = 1e-3


def _lp_norm(c: np.ndarray, p: float) -> np.ndarray:
    return np.sum(c**p, axis=-1, keepdims=True) ** (1.0 / p)


def _check_same_alpha(a: AlphaParam, b: AlphaParam):
    if a.alpha != b.alpha:
        raise InvariantViolationError("operands mix different alpha geometries")


def exp_map(x: MappedState, u: MappedTangent, t: float = 1.0, tau_steps: int = DEFAULT_STEPS) -> MappedState:
    """Point reached at time t along the geodesic leaving x with velocity u."""
    _check_same_alpha(x.alpha, u.alpha)
    alpha = x.alpha
    if not 0.0 <= t <= 1.0:
        raise InvariantViolationError(f"t={t} outside [0, 1]")
    if alpha.alpha == -1.0:
        coords = x.coords + t * u.comps
        if np.any(coords <= 0.0):
            raise NumericalError("exponential map left the simplex interior")
        return MappedState(coords, alpha)
    if alpha.alpha == 0.0:
        speed = float(np.linalg.norm(u.comps)) * t
        if speed < 1e-300:
            return x
        direction = u.comps * (t / speed)
        coords = x.coords * math.cos(speed) + direction * math.sin(speed)
        if np.any(coords <= 0.0):
            raise NumericalError("exponential map left the positive orthant")
        return MappedState(coords / np.linalg.norm(coords), alpha)
    if alpha.is_log_chart:
        z = x.coords + t * u.comps
        return MappedState(z - _logsumexp(z), alpha)
    sol = solve_tau_ivp(x, u, steps=tau_steps)
    c = x.coords + float(sol.tau_at(t)) * u.comps
    if np.any(c <= 0.0):
        raise NumericalError("exponential map left the positive orthant")
    return MappedState(c / _lp_norm(c, alpha.p), alpha)


def log_map(
    x: MappedState,
    y: MappedState,
    tau_steps: int = DEFAULT_STEPS,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> MappedTangent:
    """Initial velocity of the geodesic from x that reaches y at t = 1."""
    _check_same_alpha(x.alpha, y.alpha)
    alpha = x.alpha
    diff = y.coords - x.coords
    if np.max(np.abs(diff)) == 0.0:
        return MappedTangent(np.zeros_like(diff), alpha, x)
    if alpha.alpha == -1.0:
        return MappedTangent(diff, alpha, x)
    if alpha.alpha == 0.0:
        dot = float(np.clip(np.dot(x.coords, y.coords), -1.0, 1.0))
        theta = math.acos(dot)
        if theta < 1e-12:
            return MappedTangent(np.zeros_like(diff), alpha, x)
        comps = (theta / math.sin(theta)) * (diff - np.dot(x.coords, diff) * x.coords)
        return MappedTangent(comps, alpha, x)
    if alpha.is_log_chart:
        kl = alpha_divergence(from_alpha_rep(x), from_alpha_rep(y), alpha=-1.0)
        return MappedTangent(diff + kl, alpha, x)
    sol = solve_tau_bvp(x, y, steps=tau_steps, tol=tol, max_iter=max_iter)
    comps = sol.tau_dot0 * sphere_project_array(x.coords, diff, alpha)
    return MappedTangent(comps, alpha, x)


@dataclass(frozen=True)
class GeodesicCurve:
    """Geodesic between two mapped states, evaluable at any t in [0, 1]."""

    x0: MappedState
    x1: MappedState
    reparam: ReparamSolution | None = None
    _theta: float = field(init=False, default=0.0)

    def __post_init__(self):
        _check_same_alpha(self.x0.alpha, self.x1.alpha)
        alpha = self.alpha
        if alpha.alpha == 0.0:
            dot = float(np.clip(np.dot(self.x0.coords, self.x1.coords), -1.0, 1.0))
            object.__setattr__(self, "_theta", math.acos(dot))
        if not alpha.has_closed_form and self.reparam is None:
            raise InvariantViolationError(
                "numerical alpha needs a solved reparameterization; use geodesic()"
            )

    @property
    def alpha(self) -> AlphaParam:
        return self.x0.alpha

    def point_at(self, t: float) -> MappedState:
        """gamma(t) in mapped coordinates."""
        alpha = self.alpha
        a, b = self.x0.coords, self.x1.coords
        if alpha.alpha == -1.0:
            return MappedState((1.0 - t) * a + t * b, alpha)
        if alpha.alpha == 0.0:
            theta = self._theta
            if theta < 1e-12:
                return self.x0
            coords = (math.sin((1.0 - t) * theta) * a + math.sin(t * theta) * b) / math.sin(theta)
            return MappedState(coords, alpha)
        if alpha.is_log_chart:
            z = (1.0 - t) * a + t * b
            return MappedState(z - _logsumexp(z), alpha)
        c = a + float(self.reparam.tau_at(t)) * (b - a)
        return MappedState(c / _lp_norm(c, alpha.p), alpha)

    def velocity_at(self, t: float) -> MappedTangent:
        """Analytic curve derivative d gamma / dt, based at gamma(t)."""
        alpha = self.alpha
        a, b = self.x0.coords, self.x1.coords
        base = self.point_at(t)
        if alpha.alpha == -1.0:
            return MappedTangent(b - a, alpha, base)
        if alpha.alpha == 0.0:
            theta = self._theta
            if theta < 1e-12:
                return MappedTangent(np.zeros_like(a), alpha, base)
            comps = (
                theta
                * (-math.cos((1.0 - t) * theta) * a + math.cos(t * theta) * b)
                / math.sin(theta)
            )
            return MappedTangent(comps, alpha, base)
        if alpha.is_log_chart:
            d = b - a
            mu_t = np.exp(base.coords)
            return MappedTangent(d - np.sum(mu_t * d), alpha, base)
        d = b - a
        c = a + float(self.reparam.tau_at(t)) * d
        norm = float(_lp_norm(c, alpha.p))
        comps = sphere_project_array(base.coords, float(self.reparam.tau_dot_at(t)) * d, alpha)
        return MappedTangent(comps / norm, alpha, base)

    def point_simplex(self, t: float) -> SimplexPoint:
        """gamma(t) pulled back to probabilities."""
        return from_alpha_rep(self.point_at(t))


def geodesic(
    mu0: SimplexPoint,
    mu1: SimplexPoint,
    alpha,
    tau_steps: int = DEFAULT_STEPS,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> GeodesicCurve:
    """Geodesic curve from mu0 to mu1; solves and caches the BVP once for numerical alpha."""
    alpha = as_alpha(alpha)
    x0 = to_alpha_rep(mu0, alpha)
    x1 = to_alpha_rep(mu1, alpha)
    reparam = None
    if not alpha.has_closed_form:
        reparam = solve_tau_bvp(x0, x1, steps=tau_steps, tol=tol, max_iter=max_iter)
    return GeodesicCurve(x0, x1, reparam)


def conditional_vector_field(curve: GeodesicCurve, t: float) -> MappedTangent:
    """Target velocity log_{gamma(t)}(x1) / (1 - t) used for flow matching.

    Closed-form alphas evaluate the logarithm map directly; numerical alphas
    reuse the cached reparameterization through the analytic derivative
    (the two agree along true geodesics).
    """
    if not 0.0 <= t <= 1.0 - T_FIELD_CLAMP:
        raise InvariantViolationError(f"t={t} outside [0, 1 - {T_FIELD_CLAMP}]")
    alpha = curve.alpha
    if alpha.has_closed_form:
        x_t = curve.point_at(t)
        u = log_map(x_t, curve.x1)
        return MappedTangent(u.comps / (1.0 - t), alpha, x_t)
    return curve.velocity_at(t)


def m_plus_geodesic(m0, m1, t: float, alpha) -> np.ndarray:
    """Unnormalized geodesic ((1-t) m0^(1/p) + t m1^(1/p))^p on positive measures."""
    alpha = as_alpha(alpha)
    if alpha.is_log_chart:
        raise InvariantViolationError("the positive-measure closed form needs finite p")
    m0 = _as_vector(m0, "m0")
    m1 = _as_vector(m1, "m1")
    if np.any(m0 <= 0.0) or np.any(m1 <= 0.0):
        raise InvariantViolationError("positive measures required")
    p = alpha.p
    return ((1.0 - t) * m0 ** (1.0 / p) + t * m1 ** (1.0 / p)) ** p


def geodesic_equation_residual(curve: GeodesicCurve, t: float, h: float = 1e-3) -> np.ndarray:
    """Central-difference defect of the geodesic equation in simplex coordinates.

    Estimates gamma'' - (1+alpha)/2 (gamma'^2/gamma - gamma sum_j gamma_j'^2/gamma_j)
    from evaluations at t-h, t, t+h; near zero along true geodesics.
    """
    if not h < t < 1.0 - h:
        raise InvariantViolationError("differencing stencil leaves [0, 1]")
    mu_m = curve.point_simplex(t - h).probs
    mu_0 = curve.point_simplex(t).probs
    mu_p = curve.point_simplex(t + h).probs
    vel = (mu_p - mu_m) / (2.0 * h)
    acc = (mu_p - 2.0 * mu_0 + mu_m) / h**2
    a = curve.alpha.alpha
    correction = vel**2 / mu_0 - mu_0 * np.sum(vel**2 / mu_0)
    return acc - 0.5 * (1.0 + a) * correction
