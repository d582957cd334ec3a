"""Time reparameterization of straight lines into geodesics.

Normalizing the linear interpolant of alpha-representations only traces a
geodesic after a monotone change of time tau(t). tau solves a second-order
ODE: an initial-value problem for exponential maps and a boundary-value
problem (tau(0)=0, tau(1)=1) for interpolation, the latter solved by
shooting with a bisection search on the initial speed. Closed forms exist
at alpha = -1 (tau = t) and alpha = 0 (tangent formulas on the 2-sphere).
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .alpha_geometry import AlphaParam, MappedState, MappedTangent
from .manifold import InvariantViolationError, NumericalError

DEFAULT_STEPS = 100
DEFAULT_TOL = 1e-3
DEFAULT_MAX_ITER = 10
BRACKET_LO_MIN = 1.0 / 16.0
BRACKET_HI_MAX = 32.0


@dataclass(frozen=True)
class ReparamSolution:
    """Discretized tau(t) and tau'(t) on a uniform grid over [0, 1]."""

    grid_t: np.ndarray
    tau: np.ndarray
    tau_dot: np.ndarray

    def __post_init__(self):
        grid_t = np.asarray(self.grid_t, dtype=np.float64)
        tau = np.asarray(self.tau, dtype=np.float64)
        tau_dot = np.asarray(self.tau_dot, dtype=np.float64)
        if not (grid_t.shape == tau.shape == tau_dot.shape) or grid_t.ndim != 1:
            raise InvariantViolationError("grid arrays must share one shape")
        if tau[0] != 0.0:
            raise InvariantViolationError("tau(0) must be 0")
        if np.any(np.diff(tau) <= 0.0):
            raise InvariantViolationError("tau must be strictly increasing")
        if np.any(tau_dot <= 0.0):
            raise InvariantViolationError("tau_dot must stay positive")
        for arr, name in ((grid_t, "grid_t"), (tau, "tau"), (tau_dot, "tau_dot")):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def tau_dot0(self) -> float:
        return float(self.tau_dot[0])

    def tau_at(self, t) -> np.ndarray:
        """Linear interpolation of tau between grid nodes."""
        return np.interp(t, self.grid_t, self.tau)

    def tau_dot_at(self, t) -> np.ndarray:
        """Linear interpolation of the solver's own tau' grid."""
        return np.interp(t, self.grid_t, self.tau_dot)


def _require_sphere_chart(alpha: AlphaParam, what: str):
    if alpha.is_log_chart:
        raise InvariantViolationError(
            f"{what} needs finite p; the alpha = 1 chart has its own closed-form maps"
        )


# ---------------------------------------------------------------------------
# batch cores (raw arrays, used by geodesics/flow as well)
# ---------------------------------------------------------------------------


def ivp_tau_grids(x: np.ndarray, u: np.ndarray, p: float, steps: int):
    """(tau, tau') grids of the initial-value problem for each row; raises on chart exit."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    u = np.ascontiguousarray(u, dtype=np.float64)
    b = x.shape[0]
    tau = np.empty((b, steps + 1))
    td = np.empty((b, steps + 1))
    ok = np.empty(b, dtype=np.bool_)
    _kernels.ivp_grid_batch(x, u, p, steps, tau, td, ok)
    if not ok.all():
        raise NumericalError("tau IVP left the positive orthant; tangent vector too large")
    return tau, td


def ivp_tau_final(x: np.ndarray, u: np.ndarray, p: float, steps: int) -> np.ndarray:
    """tau(1) per row; nan marks rows whose ray left the chart."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    u = np.ascontiguousarray(u, dtype=np.float64)
    tau1 = np.empty(x.shape[0])
    _kernels.ivp_final_batch(x, u, p, steps, tau1)
    return tau1


def bvp_tau_grids(
    x: np.ndarray,
    y: np.ndarray,
    p: float,
    steps: int,
    tol: float,
    max_iter: int,
    fast: bool = False,
):
    """Shooting solutions (tau, tau', speed) for each row pair; raises on bracket loss.

    fast=True routes the bisection probes through the tabulated-rhs kernel
    (identical contract, used by the training loop).
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    b = x.shape[0]
    tau = np.empty((b, steps + 1))
    td = np.empty((b, steps + 1))
    speed = np.empty(b)
    ok = np.empty(b, dtype=np.bool_)
    kernel = _kernels.bvp_grid_batch_fast if fast else _kernels.bvp_grid_batch
    kernel(
        x, y - x, p, steps, tol, max_iter, BRACKET_LO_MIN, BRACKET_HI_MAX, tau, td, speed, ok
    )
    if not ok.all():
        raise NumericalError(
            "tau BVP shooting failed: no sign change for the boundary residual "
            f"within [{BRACKET_LO_MIN}, {BRACKET_HI_MAX}]"
        )
    return tau, td, speed


def interp_rows(grid_vals: np.ndarray, t: np.ndarray, steps: int) -> np.ndarray:
    """Per-row linear interpolation of (B, steps+1) grids at per-row times."""
    pos = np.clip(t, 0.0, 1.0) * steps
    idx = np.minimum(pos.astype(np.int64), steps - 1)
    frac = pos - idx
    left = np.take_along_axis(grid_vals, idx[:, None], axis=1)[:, 0]
    right = np.take_along_axis(grid_vals, idx[:, None] + 1, axis=1)[:, 0]
    return left + frac * (right - left)


# ---------------------------------------------------------------------------
# public single-pair API
# ---------------------------------------------------------------------------


def _check_pair(x: MappedState, other_alpha: AlphaParam):
    if x.alpha.alpha != other_alpha.alpha:
        raise InvariantViolationError("states mix different alpha geometries")


def solve_tau_ivp(x: MappedState, u: MappedTangent, steps: int = DEFAULT_STEPS) -> ReparamSolution:
    """Integrate the exponential-map reparameterization from tau(0)=0, tau'(0)=1."""
    _require_sphere_chart(x.alpha, "solve_tau_ivp")
    _check_pair(x, u.alpha)
    tau, td = ivp_tau_grids(x.coords[None, :], u.comps[None, :], x.alpha.p, steps)
    return ReparamSolution(np.linspace(0.0, 1.0, steps + 1), tau[0], td[0])


def solve_tau_bvp(
    x: MappedState,
    y: MappedState,
    steps: int = DEFAULT_STEPS,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> ReparamSolution:
    """Shoot for the interpolation reparameterization with tau(0)=0, tau(1)=1."""
    _require_sphere_chart(x.alpha, "solve_tau_bvp")
    _check_pair(x, y.alpha)
    tau, td, _ = bvp_tau_grids(
        x.coords[None, :], y.coords[None, :], x.alpha.p, steps, tol, max_iter
    )
    return ReparamSolution(np.linspace(0.0, 1.0, steps + 1), tau[0], td[0])


def closed_form_tau(x: MappedState, y_or_u, steps: int = DEFAULT_STEPS) -> ReparamSolution:
    """Exact reparameterizations for alpha = -1 (identity) and alpha = 0 (trig forms).

    Pass a MappedState endpoint for the interpolation problem or a
    MappedTangent for the exponential-map problem.
    """
    alpha = x.alpha
    grid_t = np.linspace(0.0, 1.0, steps + 1)
    if alpha.alpha == -1.0:
        return ReparamSolution(grid_t, grid_t.copy(), np.ones(steps + 1))
    if alpha.alpha != 0.0:
        raise InvariantViolationError(
            f"no closed-form reparameterization at alpha={alpha.alpha}"
        )
    if isinstance(y_or_u, MappedState):
        _check_pair(x, y_or_u.alpha)
        dot = float(np.clip(np.dot(x.coords, y_or_u.coords), -1.0, 1.0))
        theta = math.acos(dot)
        if theta < 1e-12:
            return ReparamSolution(grid_t, grid_t.copy(), np.ones(steps + 1))
        tan_term = np.tan(grid_t * theta)
        denom = math.sin(theta) + (1.0 - math.cos(theta)) * tan_term
        tau = tan_term / denom
        tau_dot = (theta * (1.0 + tan_term**2)) * math.sin(theta) / denom**2
        return ReparamSolution(grid_t, tau, tau_dot)
    if isinstance(y_or_u, MappedTangent):
        _check_pair(x, y_or_u.alpha)
        speed = float(np.linalg.norm(y_or_u.comps))
        if speed < 1e-12:
            return ReparamSolution(grid_t, grid_t.copy(), np.ones(steps + 1))
        if speed >= math.pi / 2.0:
            raise NumericalError(
                f"tangent speed {speed:.4f} reaches the tan singularity before t=1"
            )
        tau = np.tan(speed * grid_t) / speed
        tau_dot = 1.0 + np.tan(speed * grid_t) ** 2
        return ReparamSolution(grid_t, tau, tau_dot)
    raise TypeError("y_or_u must be a MappedState endpoint or a MappedTangent")
