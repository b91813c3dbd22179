"""Implicit surface functions for box-shaped sets, and set algebra on fields.

A set is represented by a field ``l`` with ``l <= 0`` exactly on the set.
Intersection is the pointwise maximum and union the pointwise minimum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimMismatch, InvalidSpec
from .grid import Field, Grid, same_grid


@dataclass(frozen=True)
class AxisBox:
    """Box ``|x[d] - center| <= half_width`` on the listed dims; other dims are free."""

    dims: tuple[int, ...]
    center: tuple[float, ...]
    half_width: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "half_width", tuple(float(h) for h in self.half_width))
        if not (len(self.dims) == len(self.center) == len(self.half_width)):
            raise InvalidSpec("box dims, center and half_width must have equal length")
        if not self.dims:
            raise InvalidSpec("box must constrain at least one dimension")
        if len(set(self.dims)) != len(self.dims):
            raise InvalidSpec(f"box dims must be distinct, got {self.dims}")
        if any(h <= 0 for h in self.half_width):
            raise InvalidSpec("box half widths must be positive")

    def contains(self, points) -> np.ndarray:
        """Direct membership test for points of shape ``(..., dim)``."""
        pts = np.asarray(points, dtype=np.float64)
        inside = np.ones(pts.shape[:-1], dtype=bool)
        for d, c, h in zip(self.dims, self.center, self.half_width):
            inside &= np.abs(pts[..., d] - c) <= h
        return inside

    def restricted(self, dims: Sequence[int]) -> "AxisBox | None":
        """The constraints on ``dims``, re-indexed to positions within ``dims``."""
        dims = list(dims)
        keep = [k for k, d in enumerate(self.dims) if d in dims]
        if not keep:
            return None
        return AxisBox(
            tuple(dims.index(self.dims[k]) for k in keep),
            tuple(self.center[k] for k in keep),
            tuple(self.half_width[k] for k in keep),
        )


def _axis_offsets(grid: Grid, box: AxisBox) -> list[np.ndarray]:
    coords = grid.coords(sparse=True)
    out = []
    for d, c, h in zip(box.dims, box.center, box.half_width):
        delta = coords[d] - c
        if grid.periodic[d]:
            P = grid.period(d)
            delta = np.mod(delta + P / 2, P) - P / 2
        out.append(np.abs(delta) - h)
    return out


def signed_distance_box(grid: Grid, box: AxisBox) -> Field:
    """Exact signed distance to ``box`` measured in its constrained dimensions.

    Inside, the value is the largest (least negative) per-axis offset; outside,
    the Euclidean norm of the positive per-axis excesses.
    """
    if any(not 0 <= d < grid.dim for d in box.dims):
        raise DimMismatch(f"box dims {box.dims} do not fit a {grid.dim}-D grid")
    offsets = _axis_offsets(grid, box)
    inside = np.full(grid.shape, -np.inf)
    outside_sq = np.zeros(grid.shape)
    for d in offsets:
        inside = np.maximum(inside, d)
        outside_sq = outside_sq + np.maximum(d, 0.0) ** 2
    values = np.where(inside <= 0, inside, np.sqrt(outside_sq))
    return Field(grid, values)


def intersect(a: Field, b: Field) -> Field:
    return Field(same_grid(a, b), np.maximum(a.values, b.values))


def union(a: Field, b: Field) -> Field:
    return Field(same_grid(a, b), np.minimum(a.values, b.values))
