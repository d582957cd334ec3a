"""Swiss-roll-on-the-simplex data and KDE-based scoring.

The 2-d Swiss roll is rescaled into the 2-simplex (margin kept from every
edge) to give a 3-class toy distribution. Generation quality is scored by
Gaussian kernel density estimation on the planar embedding of the simplex
and the KL divergence between two estimated densities on a shared
barycentric grid.
"""

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .manifold import InvariantViolationError, SimplexPoint

TRIANGLE_XY = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3.0) / 2.0]])

ROLL_TURN_RANGE = (1.5 * math.pi, 4.5 * math.pi)
DEFAULT_MARGIN = 0.02
DEFAULT_JITTER = 0.01
DEFAULT_BANDWIDTH = 0.02
DEFAULT_RESOLUTION = 100
KDE_CHUNK = 512


def simplex_to_plane(mu) -> np.ndarray:
    """Barycentric (mu1, mu2, mu3) -> planar coordinates of the unit triangle."""
    mu = np.asarray(mu, dtype=np.float64)
    return mu @ TRIANGLE_XY


def plane_to_simplex(xy) -> np.ndarray:
    """Inverse of simplex_to_plane."""
    xy = np.asarray(xy, dtype=np.float64)
    mu3 = xy[..., 1] / TRIANGLE_XY[2, 1]
    mu2 = xy[..., 0] - 0.5 * mu3
    mu1 = 1.0 - mu2 - mu3
    return np.stack([mu1, mu2, mu3], axis=-1)


def swiss_roll_array(
    count: int,
    rng: np.random.Generator,
    margin: float = DEFAULT_MARGIN,
    jitter: float = DEFAULT_JITTER,
) -> np.ndarray:
    """(count, 3) Swiss-roll points inside the simplex with the given edge margin."""
    if count < 1:
        raise InvariantViolationError("count must be >= 1")
    lo, hi = ROLL_TURN_RANGE
    theta = rng.uniform(lo, hi, size=count)
    radius = theta / hi
    pts = np.stack([radius * np.cos(theta), radius * np.sin(theta)], axis=1)
    pts += rng.normal(0.0, jitter, size=pts.shape)

    # largest axis-aligned rectangle inside the margin-shrunk triangle
    side = 1.0 - 3.0 * margin
    base_y = TRIANGLE_XY[2, 1] * margin
    rect_w = side / 2.0
    rect_h = TRIANGLE_XY[2, 1] * side / 2.0
    rect_center = np.array([0.5, base_y + rect_h / 2.0])

    mins = pts.min(axis=0)
    maxs = pts.max(axis=0)
    span = np.maximum(maxs - mins, 1e-12)
    scale = min(rect_w / span[0], rect_h / span[1])
    pts = (pts - (mins + maxs) / 2.0) * scale + rect_center
    return plane_to_simplex(pts)


def swiss_roll_simplex(
    count: int,
    rng: np.random.Generator,
    margin: float = DEFAULT_MARGIN,
    jitter: float = DEFAULT_JITTER,
):
    """Swiss-roll draw as validated simplex points."""
    return [SimplexPoint(row) for row in swiss_roll_array(count, rng, margin, jitter)]


@dataclass(frozen=True)
class DensityGrid:
    """Barycentric grid over the 2-simplex with nonnegative node densities."""

    resolution: int
    nodes_bary: np.ndarray
    nodes_xy: np.ndarray
    values: np.ndarray
    node_weight: float

    def __post_init__(self):
        if np.any(np.asarray(self.values) < 0.0):
            raise InvariantViolationError("densities must be nonnegative")

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.values) * self.node_weight)


def make_density_grid(resolution: int = DEFAULT_RESOLUTION) -> DensityGrid:
    """Uniform barycentric grid with `resolution` cells per edge, zero density."""
    if resolution < 1:
        raise InvariantViolationError("resolution must be >= 1")
    i, j = np.meshgrid(np.arange(resolution + 1), np.arange(resolution + 1), indexing="ij")
    mask = i + j <= resolution
    i = i[mask]
    j = j[mask]
    k = resolution - i - j
    bary = np.stack([i, j, k], axis=1) / resolution
    return DensityGrid(
        resolution=resolution,
        nodes_bary=bary,
        nodes_xy=simplex_to_plane(bary),
        values=np.zeros(bary.shape[0]),
        node_weight=1.0 / bary.shape[0],
    )


def _points_to_array(samples) -> np.ndarray:
    if isinstance(samples, np.ndarray):
        return samples
    return np.stack([pt.probs for pt in samples])


def kde_density(samples, bandwidth: float, grid: DensityGrid) -> DensityGrid:
    """Isotropic Gaussian KDE in planar coordinates, renormalized on the grid."""
    if bandwidth <= 0.0:
        raise InvariantViolationError("bandwidth must be positive")
    arr = _points_to_array(samples)
    if arr.size == 0:
        raise InvariantViolationError("empty sample list")
    xy = simplex_to_plane(arr)
    inv = -0.5 / bandwidth**2
    values = np.empty(grid.nodes_xy.shape[0])
    for start in range(0, grid.nodes_xy.shape[0], KDE_CHUNK):
        block = grid.nodes_xy[start : start + KDE_CHUNK]
        d2 = np.sum((block[:, None, :] - xy[None, :, :]) ** 2, axis=2)
        values[start : start + KDE_CHUNK] = np.exp(inv * d2).sum(axis=1)
    total = values.sum() * grid.node_weight
    if total <= 0.0:
        raise InvariantViolationError("all samples fell outside the kernel support")
    return replace(grid, values=values / total)


def kde_kl(data_density: DensityGrid, gen_density: DensityGrid, floor: float = 1e-10) -> float:
    """Quadrature KL divergence sum w * p * log((p+floor)/(q+floor)) >= ~0."""
    if floor <= 0.0:
        raise InvariantViolationError("floor must be positive")
    if (
        data_density.resolution != gen_density.resolution
        or data_density.values.shape != gen_density.values.shape
    ):
        raise InvariantViolationError("densities live on different grids")
    p = data_density.values
    q = gen_density.values
    return float(
        data_density.node_weight * np.sum(p * (np.log(p + floor) - np.log(q + floor)))
    )


def save_points_csv(points, path):
    """One row per point, n probability columns, 17 significant digits."""
    arr = _points_to_array(points)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"mu_{i + 1}" for i in range(arr.shape[1])])
        for row in arr:
            writer.writerow([format(v, ".17g") for v in row])


def load_points_csv(path):
    """Read a point set written by save_points_csv back into simplex points."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or not header[0].startswith("mu_"):
            raise InvariantViolationError(f"{path} is not a point-set CSV")
        rows = [[float(v) for v in row] for row in reader if row]
    return [SimplexPoint(np.asarray(row)) for row in rows]
