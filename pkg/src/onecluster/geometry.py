"""Grid domain, ball counting, the capped-count score, and random geometric maps.

Point sets are plain ``(n, d)`` float arrays. Balls are closed:
``||x - c|| <= r``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .exceptions import InvalidParameter

# Rows per distance block; bounds peak memory of the O(n^2) kernels.
_CHUNK = 512


@dataclass(frozen=True)
class GridDomain:
    """The unit cube [0, 1]^d quantized into ``levels`` values per axis."""

    d: int
    levels: int

    def __post_init__(self):
        if self.d < 1:
            raise InvalidParameter("dimension must be positive")
        if self.levels < 2:
            raise InvalidParameter("a grid needs at least two levels per axis")

    @property
    def step(self) -> float:
        return 1.0 / (self.levels - 1)

    def snap(self, points) -> np.ndarray:
        """Round to the nearest grid point; exact halves go to the lower level."""
        points = np.asarray(points, dtype=float)
        scaled = np.clip(points, 0.0, 1.0) * (self.levels - 1)
        idx = np.ceil(scaled - 0.5)
        return idx / (self.levels - 1)

    def contains(self, points, tol: float = 1e-9) -> bool:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.d:
            return False
        if np.any(points < -tol) or np.any(points > 1 + tol):
            return False
        scaled = points * (self.levels - 1)
        return bool(np.all(np.abs(scaled - np.round(scaled)) <= tol * self.levels))

    def validate(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.d:
            raise InvalidParameter(f"expected {self.d}-dimensional points, got {points.shape[1]}")
        if not self.contains(points):
            raise InvalidParameter("points do not lie on the grid")
        return points


def as_points(points) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if points.ndim != 2:
        raise InvalidParameter("points must be an (n, d) array")
    return points


# -- counting ---------------------------------------------------------------


def ball_count(points, center, r: float, cap: int | None = None) -> int:
    """Number of points within distance r of center, optionally capped."""
    if r < 0:
        return 0
    points = as_points(points)
    center = np.asarray(center, dtype=float).reshape(1, -1)
    count = int(np.count_nonzero(cdist(points, center)[:, 0] <= r))
    return count if cap is None else min(count, cap)


def _truncated_sorted_distances(points: np.ndarray, rows: slice, t: int) -> np.ndarray:
    dist = cdist(points[rows], points)
    if t < dist.shape[1]:
        dist = np.partition(dist, t - 1, axis=1)[:, :t]
    dist.sort(axis=1)
    return dist


def capped_counts(points, radii, t: int) -> np.ndarray:
    """Matrix ``C[i, j] = min(B_{radii[j]}(x_i, S), t)`` over input points x_i.

    Negative radii give 0.
    """
    points = as_points(points)
    n = len(points)
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    dtype = np.min_scalar_type(t)
    out = np.empty((n, radii.size), dtype=dtype)
    for start in range(0, n, _CHUNK):
        block = _truncated_sorted_distances(points, slice(start, start + _CHUNK), t)
        for i, row in enumerate(block):
            out[start + i] = np.searchsorted(row, radii, side="right")
    out[:, radii < 0] = 0
    return out


def score_L_many(points, radii, t: int) -> np.ndarray:
    """Capped-count score at each radius: the mean of the t largest capped
    ball counts centred at input points (with multiplicity).

    Uses the layer-cake identity: the sum of the t largest values in [0, t]
    is ``sum_c min(t, #{i : count_i >= c})``, and ``count_i(r) >= c`` iff the
    c-th smallest distance from x_i is at most r. Memory is O(n t + |radii|).
    """
    points = as_points(points)
    n = len(points)
    if not (1 <= t <= n):
        raise InvalidParameter(f"need 1 <= t <= n (t={t}, n={n})")
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    order = np.argsort(radii, kind="stable")
    sorted_radii = radii[order]
    size = radii.size
    # first[c, i]: index of the smallest sorted radius covering the (c+1)-th neighbour of x_i.
    first = np.empty((t, n), dtype=np.int32)
    for start in range(0, n, _CHUNK):
        block = _truncated_sorted_distances(points, slice(start, start + _CHUNK), t)
        first[:, start:start + len(block)] = np.searchsorted(sorted_radii, block, side="left").T
    # min(t, H_c[j]) = H_c[j] - max(0, H_c[j] - t). With q_c the t-th smallest
    # entry of first[c], H_c[j] > t only when j >= q_c, and then
    # H_c[j] - t = #{i : max(first[c, i], q_c) <= j} - t.
    q = np.partition(first, t - 1, axis=1)[:, t - 1] if t < n else first.max(axis=1)
    q = q.astype(np.int64)

    def cumulative(values):
        return np.cumsum(np.bincount(values.ravel(), minlength=size + 1)[:size])

    total = cumulative(first) - cumulative(np.maximum(first, q[:, None])) + t * cumulative(q)
    out = np.empty(size)
    out[order] = total / t
    return out


def score_L(points, r: float, t: int) -> float:
    return float(score_L_many(points, [r], t)[0])


def kth_smallest_distances(points, t: int) -> np.ndarray:
    """For every point, its t-th smallest distance to the set (itself included)."""
    points = as_points(points)
    n = len(points)
    if not (1 <= t <= n):
        raise InvalidParameter(f"need 1 <= t <= n (t={t}, n={n})")
    out = np.empty(n)
    for start in range(0, n, _CHUNK):
        dist = cdist(points[start:start + _CHUNK], points)
        out[start:start + len(dist)] = np.partition(dist, t - 1, axis=1)[:, t - 1]
    return out


# -- random maps ------------------------------------------------------------


def jl_matrix(d: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Scaled Gaussian map ``A / sqrt(k)`` of shape (k, d)."""
    if k < 1:
        raise InvalidParameter("target dimension must be positive")
    return rng.standard_normal((k, d)) / np.sqrt(k)


def jl_project(points, k: int, rng: np.random.Generator) -> np.ndarray:
    points = as_points(points)
    return points @ jl_matrix(points.shape[1], k, rng).T


def jl_dimension(n: int, beta: float, constant: float = 46.0) -> int:
    """``ceil(constant * log2(2n / beta))``."""
    return max(1, int(np.ceil(constant * np.log2(2.0 * n / beta))))


def random_orthonormal_basis(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random orthonormal basis; row i is the basis vector z_i."""
    if d < 1:
        raise InvalidParameter("dimension must be positive")
    while True:
        q, r = np.linalg.qr(rng.standard_normal((d, d)))
        diag = np.diag(r)
        if np.all(np.abs(diag) > 1e-12):
            break
    # Sign fix makes the distribution Haar rather than QR-convention dependent.
    return (q * np.sign(diag)).T


# -- partitions -------------------------------------------------------------


@dataclass(frozen=True)
class BoxPartition:
    """Axis-aligned tiling by half-open cells ``[a_i + j L, a_i + (j+1) L)``."""

    shifts: np.ndarray
    cell_length: float

    def __post_init__(self):
        if not (self.cell_length > 0):
            raise InvalidParameter("cell length must be positive")

    @property
    def axes(self) -> int:
        return len(self.shifts)

    @classmethod
    def random(cls, axes: int, cell_length: float, rng: np.random.Generator) -> "BoxPartition":
        return cls(rng.uniform(0.0, cell_length, size=axes), cell_length)

    def cells(self, points) -> np.ndarray:
        points = as_points(points)
        return np.floor((points - self.shifts) / self.cell_length).astype(np.int64)


def shifted_partition_cell(partition: BoxPartition, point) -> np.ndarray:
    return partition.cells(np.atleast_2d(point))[0]


def max_cell_count(cells: np.ndarray) -> int:
    """Largest number of rows sharing one cell index vector."""
    _, counts = np.unique(cells, axis=0, return_counts=True)
    return int(counts.max())
