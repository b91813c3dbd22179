"""Self-contained subsystem decomposition: projections, back projections and
exact reconstruction of full-dimensional reachable sets.

A full state ``z`` is split into ``(z1, z2, z3)``; subsystem 1 owns
``(z1, z3)`` and subsystem 2 owns ``(z2, z3)``. A subsystem set ``S_i`` is
lifted to the full space by back projection, ``BP(S_i) = {z : proj_i(z) in S_i}``.
On implicit surfaces this is simply ``l_BP(z) = l_i(proj_i(z))``, and the
intersection of two back projections is their pointwise maximum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DimMismatch, GridMismatch, InvalidSpec, OutOfDomain, UncoverableTarget
from .grid import Field, Grid, GridSpec, interpolate, make_grid
from .shapes import AxisBox, signed_distance_box


@dataclass(frozen=True)
class SubsystemMapping:
    full_dim: int
    subsystem_dims: tuple[tuple[int, ...], tuple[int, ...]]

    def __post_init__(self):
        dims = tuple(tuple(int(d) for d in s) for s in self.subsystem_dims)
        object.__setattr__(self, "subsystem_dims", dims)
        if len(dims) != 2:
            raise InvalidSpec("exactly two subsystems are supported")
        for i, s in enumerate(dims, start=1):
            if len(set(s)) != len(s):
                raise InvalidSpec(f"subsystem {i} lists a dimension twice: {s}")
            if any(not 0 <= d < self.full_dim for d in s):
                raise InvalidSpec(f"subsystem {i} dims {s} exceed full dimension {self.full_dim}")
        if set(dims[0]) | set(dims[1]) != set(range(self.full_dim)):
            raise InvalidSpec("subsystems must cover every full-state dimension")
        if not self.exclusive(1) or not self.exclusive(2):
            raise InvalidSpec("each subsystem needs at least one dimension of its own")

    @property
    def shared_dims(self) -> tuple[int, ...]:
        other = set(self.subsystem_dims[1])
        return tuple(d for d in self.subsystem_dims[0] if d in other)

    def exclusive(self, i: int) -> tuple[int, ...]:
        mine = self.dims(i)
        other = set(self.dims(3 - i))
        return tuple(d for d in mine if d not in other)

    def dims(self, i: int) -> tuple[int, ...]:
        if i not in (1, 2):
            raise InvalidSpec(f"subsystem index must be 1 or 2, got {i}")
        return self.subsystem_dims[i - 1]

    def subsystem_grid(self, full_grid: Grid, i: int) -> Grid:
        """The grid paired with ``full_grid`` on subsystem ``i``'s dimensions."""
        s = full_grid.spec
        d = self.dims(i)
        return make_grid(
            GridSpec(
                [s.min[k] for k in d],
                [s.max[k] for k in d],
                [s.count[k] for k in d],
                [s.periodic[k] for k in d],
            )
        )

    def check_paired(self, full_grid: Grid, sub_grid: Grid, i: int) -> None:
        if full_grid.dim != self.full_dim:
            raise GridMismatch(f"full grid is {full_grid.dim}-D, mapping expects {self.full_dim}")
        if sub_grid != self.subsystem_grid(full_grid, i):
            raise GridMismatch(f"subsystem {i} grid is not paired with the full grid on dims {self.dims(i)}")


def project_state(mapping: SubsystemMapping, i: int, z) -> np.ndarray:
    """Restrict full state(s) ``z`` (shape ``(..., n)``) to subsystem ``i``'s coordinates."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape[-1] != mapping.full_dim:
        raise DimMismatch(f"state has {z.shape[-1]} entries, expected {mapping.full_dim}")
    return z[..., list(mapping.dims(i))]


def backproject_membership(mapping: SubsystemMapping, i: int, sub_field: Field, z):
    """Value of the back-projected surface at full state(s) ``z``: ``l_i(proj_i(z))``.

    ``z`` lies in ``BP(S_i)`` exactly when the result is ``<= 0``.
    """
    if sub_field.grid.dim != len(mapping.dims(i)):
        raise GridMismatch(f"subsystem {i} field is {sub_field.grid.dim}-D, mapping expects {len(mapping.dims(i))}")
    return interpolate(sub_field, project_state(mapping, i, z))


def _lift(mapping: SubsystemMapping, i: int, values: np.ndarray, full_ndim: int, dims=None) -> np.ndarray:
    """Reshape subsystem values so they broadcast against full-grid axes."""
    dims = list(mapping.dims(i) if dims is None else dims)
    order = np.argsort(dims)
    arr = np.transpose(values, order)
    shape = [1] * full_ndim
    for k in sorted(dims):
        shape[k] = arr.shape[sorted(dims).index(k)]
    return arr.reshape(shape)


def backproject_field(mapping: SubsystemMapping, i: int, sub_field: Field, full_grid: Grid) -> Field:
    """Materialize ``l_i(proj_i(z))`` at every node of a paired full grid."""
    mapping.check_paired(full_grid, sub_field.grid, i)
    lifted = _lift(mapping, i, sub_field.values, full_grid.dim)
    return Field(full_grid, np.broadcast_to(lifted, full_grid.shape))


def decompose_box_target(
    mapping: SubsystemMapping, box: AxisBox, full_grid: Grid, sub_grids: Sequence[Grid] | None = None
) -> tuple[Field, Field]:
    """Split a full-space box into subsystem signed-distance targets.

    Constraints on a subsystem's exclusive dims go to that subsystem and
    constraints on shared dims go to both, so that the intersection of the back
    projections is the original box.
    """
    if sub_grids is None:
        sub_grids = [mapping.subsystem_grid(full_grid, i) for i in (1, 2)]
    for i, g in zip((1, 2), sub_grids):
        mapping.check_paired(full_grid, g, i)
    for d in box.dims:
        if d not in mapping.dims(1) and d not in mapping.dims(2):
            raise UncoverableTarget(f"target constrains dimension {d}, which no subsystem owns")
    fields = []
    for i, g in zip((1, 2), sub_grids):
        sub_box = box.restricted(mapping.dims(i))
        if sub_box is None:
            # unconstrained for this subsystem: the whole space, as a finite constant
            depth = sum(b - a for a, b in zip(g.spec.min, g.spec.max))
            fields.append(Field(g, np.full(g.shape, -depth)))
        else:
            fields.append(signed_distance_box(g, sub_box))
    return fields[0], fields[1]


def reconstruct(mapping: SubsystemMapping, V1: Field, V2: Field, full_grid: Grid) -> Field:
    """Full-grid surface ``max(V1(proj_1(z)), V2(proj_2(z)))``.

    Its zero sub-level set is the intersection of the back-projected subsystem
    sets. Only membership is meaningful; values away from the boundary need not
    match a full-dimensional solve.
    """
    mapping.check_paired(full_grid, V1.grid, 1)
    mapping.check_paired(full_grid, V2.grid, 2)
    a = _lift(mapping, 1, V1.values, full_grid.dim)
    b = _lift(mapping, 2, V2.values, full_grid.dim)
    return Field(full_grid, np.maximum(a, b))


def reconstruct_at(mapping: SubsystemMapping, V1: Field, V2: Field, z):
    """Lazy per-state reconstruction (interpolated off-node)."""
    return np.maximum(backproject_membership(mapping, 1, V1, z), backproject_membership(mapping, 2, V2, z))


def snap_to_node(grid: Grid, dim: int, value: float) -> tuple[int, float]:
    """Nearest node index along ``dim`` and its coordinate."""
    lo, h = grid.spec.min[dim], grid.spacing[dim]
    c = grid.shape[dim]
    if grid.periodic[dim]:
        k = int(np.rint((value - lo) / h)) % c
    else:
        if value < grid.spec.min[dim] - h / 2 or value > grid.spec.max[dim] + h / 2:
            raise OutOfDomain(f"value {value} outside dimension {dim} range")
        k = int(np.clip(np.rint((value - lo) / h), 0, c - 1))
    return k, float(grid.axes[dim][k])


def slice_grid(grid: Grid, free_dims: Sequence[int]) -> Grid:
    s = grid.spec
    return make_grid(
        GridSpec(
            [s.min[k] for k in free_dims],
            [s.max[k] for k in free_dims],
            [s.count[k] for k in free_dims],
            [s.periodic[k] for k in free_dims],
        )
    )


def reconstruct_slice(
    mapping: SubsystemMapping, V1: Field, V2: Field, full_grid: Grid, fixed: Mapping[int, float]
) -> tuple[Field, dict[int, float]]:
    """Reconstruction restricted to the nodes where ``fixed`` dims take given values.

    Fixed values snap to the nearest node; the snapped coordinates are returned.
    Only the slice is materialized, which keeps 6-D reconstructions tractable.
    """
    mapping.check_paired(full_grid, V1.grid, 1)
    mapping.check_paired(full_grid, V2.grid, 2)
    snapped = {}
    index = {}
    for d, v in fixed.items():
        if not 0 <= d < full_grid.dim:
            raise OutOfDomain(f"dimension {d} does not exist")
        index[d], snapped[d] = snap_to_node(full_grid, d, v)
    free = [d for d in range(full_grid.dim) if d not in index]
    out_ndim = len(free)
    parts = []
    for i, V in ((1, V1), (2, V2)):
        dims = mapping.dims(i)
        sel = tuple(index[d] if d in index else slice(None) for d in dims)
        sub = V.values[sel]
        kept = [free.index(d) for d in dims if d not in index]
        if not kept:
            parts.append(np.asarray(sub).reshape([1] * max(out_ndim, 1)))
            continue
        order = np.argsort(kept)
        arr = np.transpose(sub, order)
        shape = [1] * max(out_ndim, 1)
        for pos, k in enumerate(sorted(kept)):
            shape[k] = arr.shape[pos]
        parts.append(arr.reshape(shape))
    vals = np.maximum(parts[0], parts[1])
    if out_ndim == 0:
        return float(vals.ravel()[0]), snapped
    g = slice_grid(full_grid, free)
    return Field(g, np.broadcast_to(vals, g.shape)), snapped


def corollary1_membership(
    mapping: SubsystemMapping,
    in_s1: Callable[[np.ndarray], bool],
    in_s2: Callable[[np.ndarray], bool],
    z,
) -> bool:
    """``z`` lies in ``BP(S1) & BP(S2)`` iff each projection lies in its set."""
    return bool(in_s1(project_state(mapping, 1, z))) and bool(in_s2(project_state(mapping, 2, z)))
