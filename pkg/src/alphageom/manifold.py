"""Interior categorical distributions and their tangent vectors.

Points live on the open probability simplex (all probabilities strictly
positive, summing to one); tangent vectors are zero-sum. The Fisher
information inner product <a, b> = sum_i a_i b_i / mu_i is the canonical
metric, and everything downstream (representations, geodesics, energies)
is built on top of these two types.
"""

from dataclasses import dataclass, field

import numpy as np

DEFAULT_CLAMP_EPS = 1e-3

SUM_TOL = 1e-12


class DimensionMismatchError(ValueError):
    """Operands live on simplices of different dimension."""


class InvariantViolationError(ValueError):
    """Input violates a simplex/tangent invariant beyond tolerance."""


class NumericalError(RuntimeError):
    """A solve left its chart, lost a bracket, or produced non-finite values."""


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator (Philox); identical seeds give identical streams."""
    return np.random.Generator(np.random.Philox(seed))


def _as_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise InvariantViolationError(f"{name} must be a 1-d vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvariantViolationError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class SimplexPoint:
    """A strictly positive categorical distribution over n >= 2 classes."""

    probs: np.ndarray

    def __post_init__(self):
        probs = _as_vector(self.probs, "probs")
        if probs.size < 2:
            raise InvariantViolationError("a simplex point needs at least 2 classes")
        if np.any(probs <= 0.0):
            raise InvariantViolationError("probabilities must be strictly positive")
        total = probs.sum()
        if abs(total - 1.0) > SUM_TOL:
            raise InvariantViolationError(f"probabilities sum to {total!r}, not 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def n(self) -> int:
        return self.probs.size


@dataclass(frozen=True)
class SimplexTangent:
    """A zero-sum velocity vector attached to the simplex."""

    comps: np.ndarray

    def __post_init__(self):
        comps = _as_vector(self.comps, "comps")
        if abs(comps.sum()) > SUM_TOL * max(1.0, np.abs(comps).max(initial=0.0)):
            raise InvariantViolationError(f"tangent components sum to {comps.sum()!r}, not 0")
        comps.setflags(write=False)
        object.__setattr__(self, "comps", comps)

    @property
    def n(self) -> int:
        return self.comps.size


def _check_same_dim(n_a: int, n_b: int):
    if n_a != n_b:
        raise DimensionMismatchError(f"dimension mismatch: {n_a} vs {n_b}")


def fisher_inner(mu: SimplexPoint, a: SimplexTangent, b: SimplexTangent) -> float:
    """Fisher information inner product sum_i a_i b_i / mu_i at mu."""
    _check_same_dim(mu.n, a.n)
    _check_same_dim(mu.n, b.n)
    return float(np.sum(a.comps * b.comps / mu.probs))


def fisher_norm_sq(mu: SimplexPoint, a: SimplexTangent) -> float:
    """Squared Riemannian norm ||a||_g^2 = <a, a>_mu."""
    return fisher_inner(mu, a, a)


def project_tangent(mu: SimplexPoint, w) -> SimplexTangent:
    """Orthogonal projection P_mu(w) = w - mu * sum_j w_j onto the tangent space."""
    w = _as_vector(w, "w")
    _check_same_dim(mu.n, w.size)
    return SimplexTangent(project_tangent_array(mu.probs, w))


def project_tangent_array(mu: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Array form of P_mu; supports leading batch axes."""
    return w - mu * np.sum(w, axis=-1, keepdims=True)


def clamp_normalize(mu_raw, eps: float = DEFAULT_CLAMP_EPS) -> SimplexPoint:
    """Floor every probability at eps, then rescale to sum one.

    Identity on points already >= eps in every coordinate.
    """
    mu_raw = _as_vector(mu_raw, "mu_raw")
    if np.any(mu_raw < 0.0):
        raise InvariantViolationError("probabilities must be nonnegative before clamping")
    if not np.any(mu_raw > 0.0):
        raise InvariantViolationError("cannot normalize an all-zero vector")
    if not 0.0 < eps < 1.0 / mu_raw.size:
        raise InvariantViolationError(f"eps={eps} outside (0, 1/n)")
    return SimplexPoint(clamp_normalize_array(mu_raw, eps))


def clamp_normalize_array(mu_raw: np.ndarray, eps: float) -> np.ndarray:
    """Array form of clamp_normalize; supports leading batch axes."""
    clamped = np.maximum(mu_raw, eps)
    return clamped / clamped.sum(axis=-1, keepdims=True)


def sample_uniform_simplex(
    n: int, rng: np.random.Generator, eps: float = DEFAULT_CLAMP_EPS
) -> SimplexPoint:
    """One draw from the uniform distribution on the simplex, clamped interior."""
    return SimplexPoint(sample_uniform_simplex_array(n, 1, rng, eps)[0])


def sample_uniform_simplex_array(
    n: int, count: int, rng: np.random.Generator, eps: float = DEFAULT_CLAMP_EPS
) -> np.ndarray:
    """(count, n) array of uniform-simplex draws (normalized unit exponentials)."""
    if n < 2:
        raise InvariantViolationError("simplex sampling needs n >= 2")
    gaps = rng.standard_exponential(size=(count, n))
    raw = gaps / gaps.sum(axis=-1, keepdims=True)
    return clamp_normalize_array(raw, eps)
