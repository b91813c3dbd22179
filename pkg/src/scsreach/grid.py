"""Rectilinear state-space grids, fields over them, and multilinear interpolation.

Storage is row-major (C order, last dimension fastest) in float64. A periodic
dimension excludes its upper bound: node ``count - 1`` is followed by node 0.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import GridMismatch, InvalidSpec, NonFiniteField, NonFinitePoint, OutOfRange

# Refuse grids whose value array would not fit a signed 64-bit byte count.
_MAX_NODES = (2**63 - 1) // 8

# Fractional node positions closer than this to an integer snap onto the node,
# so that interpolation at grid nodes is exact.
_NODE_SNAP = 1e-9


@dataclass(frozen=True)
class GridSpec:
    min: tuple[float, ...]
    max: tuple[float, ...]
    count: tuple[int, ...]
    periodic: tuple[bool, ...]

    def __post_init__(self):
        object.__setattr__(self, "min", tuple(float(v) for v in self.min))
        object.__setattr__(self, "max", tuple(float(v) for v in self.max))
        object.__setattr__(self, "count", tuple(int(v) for v in self.count))
        object.__setattr__(self, "periodic", tuple(bool(v) for v in self.periodic))

    @property
    def dim(self) -> int:
        return len(self.count)


@dataclass(frozen=True, eq=False)
class Grid:
    """A validated grid with precomputed spacing and 1D node coordinates."""

    spec: GridSpec
    spacing: tuple[float, ...] = field(init=False)
    axes: tuple[np.ndarray, ...] = field(init=False, repr=False)

    def __post_init__(self):
        spec = self.spec
        n = spec.dim
        if n < 1:
            raise InvalidSpec("grid needs at least one dimension")
        if not (len(spec.min) == len(spec.max) == len(spec.periodic) == n):
            raise InvalidSpec("min, max, count and periodic must have equal length")
        spacing = []
        axes = []
        for j in range(n):
            lo, hi, c = spec.min[j], spec.max[j], spec.count[j]
            if not (math.isfinite(lo) and math.isfinite(hi)) or not hi > lo:
                raise InvalidSpec(f"dimension {j}: need max > min, got [{lo}, {hi}]")
            if c < 3:
                raise InvalidSpec(f"dimension {j}: count must be >= 3, got {c}")
            h = (hi - lo) / c if spec.periodic[j] else (hi - lo) / (c - 1)
            spacing.append(h)
            ax = lo + h * np.arange(c, dtype=np.float64)
            ax.flags.writeable = False
            axes.append(ax)
        if math.prod(spec.count) > _MAX_NODES:
            raise InvalidSpec(f"grid with {math.prod(spec.count)} nodes does not fit in memory")
        object.__setattr__(self, "spacing", tuple(spacing))
        object.__setattr__(self, "axes", tuple(axes))

    @property
    def dim(self) -> int:
        return self.spec.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.spec.count

    @property
    def periodic(self) -> tuple[bool, ...]:
        return self.spec.periodic

    @property
    def lo(self) -> np.ndarray:
        return np.array(self.spec.min)

    @property
    def hi(self) -> np.ndarray:
        return np.array(self.spec.max)

    @property
    def size(self) -> int:
        return math.prod(self.spec.count)

    def period(self, j: int) -> float:
        return self.spec.max[j] - self.spec.min[j]

    def coords(self, sparse: bool = True) -> list[np.ndarray]:
        """Node coordinates per dimension, broadcastable to ``shape``."""
        return np.meshgrid(*self.axes, indexing="ij", sparse=sparse)

    def points(self) -> np.ndarray:
        """All nodes as an array of shape ``(size, dim)`` in row-major order."""
        return np.stack([c.ravel() for c in self.coords(sparse=False)], axis=-1)

    def __eq__(self, other):
        return isinstance(other, Grid) and self.spec == other.spec

    def __hash__(self):
        return hash(self.spec)


def make_grid(spec: GridSpec | None = None, **kwargs) -> Grid:
    """Build a :class:`Grid` from a spec or from ``min``/``max``/``count``/``periodic``."""
    if spec is None:
        kwargs.setdefault("periodic", (False,) * len(kwargs["count"]))
        spec = GridSpec(**kwargs)
    return Grid(spec)


def linear_index(grid: Grid, multi_index: Sequence[int]) -> int:
    if len(multi_index) != grid.dim:
        raise OutOfRange(f"expected {grid.dim} indices, got {len(multi_index)}")
    for j, (i, c) in enumerate(zip(multi_index, grid.shape)):
        if not 0 <= i < c:
            raise OutOfRange(f"index {i} out of range for dimension {j} with {c} nodes")
    return int(np.ravel_multi_index(tuple(int(i) for i in multi_index), grid.shape))


def multi_index(grid: Grid, flat: int) -> tuple[int, ...]:
    if not 0 <= flat < grid.size:
        raise OutOfRange(f"flat index {flat} out of range for {grid.size} nodes")
    return tuple(int(i) for i in np.unravel_index(flat, grid.shape))


def node_coordinates(grid: Grid, multi_index: Sequence[int]) -> np.ndarray:
    linear_index(grid, multi_index)  # range check
    return np.array([grid.axes[j][i] for j, i in enumerate(multi_index)])


def wrap_periodic(grid: Grid, points: np.ndarray) -> np.ndarray:
    """Map periodic coordinates of ``points`` (shape ``(..., dim)``) into ``[min, max)``."""
    points = np.array(points, dtype=np.float64, copy=True)
    for j in range(grid.dim):
        if grid.periodic[j]:
            lo, P = grid.spec.min[j], grid.period(j)
            points[..., j] = lo + np.mod(points[..., j] - lo, P)
    return points


@dataclass(eq=False)
class Field:
    """Scalar values over every node of a grid (an implicit surface or value function)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.size != self.grid.size:
            raise GridMismatch(f"field has {values.size} values, grid has {self.grid.size} nodes")
        self.values = values.reshape(self.grid.shape)

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())

    def check_finite(self, step=None) -> None:
        if not np.all(np.isfinite(self.values)):
            bad = np.argwhere(~np.isfinite(self.values))[0]
            where = f" at step {step}" if step is not None else ""
            raise NonFiniteField(f"non-finite value at node {tuple(bad)}{where}", step=step)


def same_grid(a: Field, b: Field) -> Grid:
    if a.grid != b.grid:
        raise GridMismatch("fields live on different grids")
    return a.grid


def interpolate(field: Field, points, return_clamped: bool = False):
    """Multilinear interpolation of ``field`` at ``points``.

    ``points`` has shape ``(dim,)`` or ``(..., dim)``. Periodic coordinates wrap;
    points beyond a non-periodic boundary are clamped onto the boundary face.
    With ``return_clamped=True`` a boolean array (same leading shape) flags the
    clamped queries.
    """
    grid = field.grid
    pts = np.asarray(points, dtype=np.float64)
    scalar = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[-1] != grid.dim:
        raise NonFinitePoint(f"points have {pts.shape[-1]} coordinates, grid has {grid.dim}")
    if not np.all(np.isfinite(pts)):
        raise NonFinitePoint("interpolation query contains NaN or Inf")
    lead = pts.shape[:-1]
    pts = pts.reshape(-1, grid.dim)

    lower = []
    upper = []
    weights = []
    clamped = np.zeros(len(pts), dtype=bool)
    for j in range(grid.dim):
        c = grid.shape[j]
        s = (pts[:, j] - grid.spec.min[j]) / grid.spacing[j]
        r = np.rint(s)
        s = np.where(np.abs(s - r) < _NODE_SNAP, r, s)
        if grid.periodic[j]:
            s = np.mod(s, c)
            i0 = np.floor(s).astype(np.int64)
            w = s - i0
            i0 %= c
            i1 = (i0 + 1) % c
        else:
            out = (s < 0) | (s > c - 1)
            clamped |= out
            s = np.clip(s, 0, c - 1)
            i0 = np.minimum(np.floor(s).astype(np.int64), c - 2)
            w = s - i0
            i1 = i0 + 1
        lower.append(i0)
        upper.append(i1)
        weights.append(w)

    result = np.zeros(len(pts))
    for corner in itertools.product((0, 1), repeat=grid.dim):
        idx = tuple(upper[j] if bit else lower[j] for j, bit in enumerate(corner))
        wt = np.ones(len(pts))
        for j, bit in enumerate(corner):
            wt = wt * (weights[j] if bit else 1.0 - weights[j])
        result += wt * field.values[idx]

    result = result.reshape(lead)
    clamped = clamped.reshape(lead)
    if scalar:
        result, clamped = float(result[0]), bool(clamped[0])
    return (result, clamped) if return_clamped else result
