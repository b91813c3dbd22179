"""Backward-in-time level-set solver for the terminal-value reachability PDE.

``D_s V + H(x, grad V) = 0`` for ``s`` in ``[horizon, 0]`` with ``V(0, .) = l``.

Spatial derivatives are first-order one-sided differences, the numerical
Hamiltonian is global Lax-Friedrichs and time stepping is the two-stage SSP
(Heun) Runge-Kutta method under a CFL restriction.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dynamics import Model
from .errors import (
    AllZeroDynamics,
    DimMismatch,
    GridMismatch,
    InvalidSpec,
    NonFiniteField,
    OutOfDomain,
    StepCapExceeded,
)
from .grid import Field, Grid, interpolate

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    horizon: float
    cfl: float = 0.5
    snapshot_times: tuple[float, ...] = ()
    max_steps: int = 1_000_000

    def __post_init__(self):
        if not self.horizon < 0:
            raise InvalidSpec(f"horizon must be negative, got {self.horizon}")
        if not 0 < self.cfl <= 1:
            raise InvalidSpec(f"cfl must lie in (0, 1], got {self.cfl}")
        times = tuple(float(t) for t in self.snapshot_times)
        if any(t > 0 or t < self.horizon for t in times):
            raise InvalidSpec(f"snapshot times must lie in [{self.horizon}, 0]")
        object.__setattr__(self, "snapshot_times", times)
        if self.max_steps < 1:
            raise InvalidSpec("max_steps must be positive")

    def schedule(self) -> list[float]:
        """Snapshot times including 0 and the horizon, strictly decreasing."""
        return sorted(set(self.snapshot_times) | {0.0, float(self.horizon)}, reverse=True)


@dataclass
class SolveResult:
    snapshots: list[tuple[float, Field]]
    steps_taken: int
    wall_time_seconds: float
    max_cfl_dt_used: float
    min_dt_used: float = float("nan")
    alpha: tuple[float, ...] = ()

    @property
    def times(self) -> list[float]:
        return [t for t, _ in self.snapshots]

    def at(self, t: float) -> Field:
        for s, f in self.snapshots:
            if abs(s - t) <= 1e-12 * max(1.0, abs(t)):
                return f
        raise KeyError(f"no snapshot at time {t}")

    @property
    def final(self) -> Field:
        return self.snapshots[-1][1]


def upwind_derivatives(field: Field, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Left and right one-sided differences of ``field`` along ``dim``.

    Periodic dimensions wrap. At a non-periodic face a linearly extrapolated
    ghost node makes both differences equal the interior one-sided slope.
    """
    V = field.values
    if not np.all(np.isfinite(V)):
        raise NonFiniteField("cannot differentiate a non-finite field")
    return _upwind(V, dim, field.grid.spacing[dim], field.grid.periodic[dim])


def _upwind(V: np.ndarray, dim: int, h: float, periodic: bool):
    if periodic:
        lo = np.take(V, [-1], axis=dim)
        hi = np.take(V, [0], axis=dim)
    else:
        e0 = np.take(V, [0], axis=dim)
        e1 = np.take(V, [1], axis=dim)
        f0 = np.take(V, [-1], axis=dim)
        f1 = np.take(V, [-2], axis=dim)
        lo = 2 * e0 - e1
        hi = 2 * f0 - f1
    diff = np.diff(np.concatenate([lo, V, hi], axis=dim), axis=dim) / h
    n = V.shape[dim]
    minus = np.take(diff, np.arange(0, n), axis=dim)
    plus = np.take(diff, np.arange(1, n + 1), axis=dim)
    return minus, plus


def lax_friedrichs_hamiltonian(model: Model, x, p_minus, p_plus, alpha) -> np.ndarray:
    """Global Lax-Friedrichs flux ``H(x, (p- + p+)/2) - sum_j alpha_j (p+_j - p-_j) / 2``."""
    p_avg = [(a + b) / 2 for a, b in zip(p_minus, p_plus)]
    return _lf(model.hamiltonian(x, p_avg), p_minus, p_plus, alpha)


def _lf(h_avg, p_minus, p_plus, alpha):
    out = h_avg
    for a, pm, pp in zip(alpha, p_minus, p_plus):
        if a:
            out = out - a * (pp - pm) / 2
    return out


def cfl_dt(grid: Grid, alpha: Sequence[float], cfl: float) -> float:
    rate = sum(a / h for a, h in zip(alpha, grid.spacing))
    if rate <= 0:
        raise AllZeroDynamics("all dissipation bounds are zero; the CFL step is unbounded")
    return cfl / rate


def _backward_rate(model: Model, x, V: np.ndarray, grid: Grid, alpha) -> np.ndarray:
    """``dV/d(-s)`` at every node.

    Marching ``s`` backward is marching ``tau = -s`` forward on
    ``V_tau + G(grad V) = 0`` with ``G = -H``; the Lax-Friedrichs flux is
    applied to ``G``, which puts the dissipation on the diffusive side.
    """
    pm, pp = [], []
    for j in range(grid.dim):
        a, b = _upwind(V, j, grid.spacing[j], grid.periodic[j])
        pm.append(a)
        pp.append(b)
    p_avg = [(a + b) / 2 for a, b in zip(pm, pp)]
    g_hat = _lf(-np.asarray(model.hamiltonian(x, p_avg)), pm, pp, alpha)
    return -np.broadcast_to(g_hat, V.shape)


def check_model_grid(model: Model, grid: Grid) -> None:
    if grid.dim != model.state_dim:
        raise DimMismatch(f"{model.name} has {model.state_dim} states but the grid has {grid.dim} dims")
    for j in model.periodic_dims:
        if not grid.periodic[j]:
            raise GridMismatch(f"{model.name}: dimension {j} is an angle but the grid does not wrap it")


def solve_brs(model: Model, target: Field, config: SolverConfig, alpha=None) -> SolveResult:
    """Compute ``V(s, .)`` at every scheduled snapshot time.

    The snapshot at ``s = 0`` is ``target`` itself. Time steps are CFL-limited
    and shortened to land exactly on each snapshot time.
    """
    grid = target.grid
    check_model_grid(model, grid)
    target.check_finite()
    if alpha is None:
        alpha = model.dissipation(grid)
    alpha = tuple(float(a) for a in alpha)
    dt_max = cfl_dt(grid, alpha, config.cfl)
    x = grid.coords(sparse=True)

    schedule = config.schedule()
    snapshots = [(0.0, target)]
    V = target.values.copy()
    s = 0.0
    steps = 0
    dts = []
    start = time.perf_counter()
    for t_next in schedule[1:]:
        while s > t_next:
            if steps >= config.max_steps:
                raise StepCapExceeded(f"reached {config.max_steps} steps at s={s:.6g}")
            remaining = s - t_next
            # absorb a final sliver rather than taking a vanishing step
            dt = remaining if remaining <= dt_max * (1 + 1e-9) else dt_max
            # divergence is detected below, so numpy's overflow warnings are noise
            with np.errstate(over="ignore", invalid="ignore"):
                V1 = V + dt * _backward_rate(model, x, V, grid, alpha)
                V = 0.5 * V + 0.5 * (V1 + dt * _backward_rate(model, x, V1, grid, alpha))
            steps += 1
            s = t_next if dt == remaining else s - dt
            dts.append(dt)
            if not np.all(np.isfinite(V)):
                raise NonFiniteField(f"solver diverged at step {steps} (s={s:.6g})", step=steps)
        snapshots.append((t_next, Field(grid, V.copy())))
    wall = time.perf_counter() - start
    log.debug("%s: %d steps in %.3fs", model.name, steps, wall)
    return SolveResult(
        snapshots=snapshots,
        steps_taken=steps,
        wall_time_seconds=wall,
        max_cfl_dt_used=max(dts) if dts else 0.0,
        min_dt_used=min(dts) if dts else float("nan"),
        alpha=alpha,
    )


def value_gradient(field: Field, x) -> np.ndarray:
    """Central-difference gradient of the interpolated field, step = grid spacing.

    ``x`` has shape ``(dim,)`` or ``(..., dim)``; the result has the same shape.
    """
    grid = field.grid
    pts = np.asarray(x, dtype=np.float64)
    grad = np.empty_like(pts)
    for j in range(grid.dim):
        h = grid.spacing[j]
        up = pts.copy()
        dn = pts.copy()
        up[..., j] += h
        dn[..., j] -= h
        grad[..., j] = (interpolate(field, up) - interpolate(field, dn)) / (2 * h)
    return grad


def extract_optimal_control(model: Model, value: Field, x) -> np.ndarray:
    """Maximizing control ``argmax_u grad V(x) . f(x, u)`` at state(s) ``x``."""
    grid = value.grid
    pts = np.asarray(x, dtype=np.float64)
    if pts.shape[-1] != grid.dim:
        raise OutOfDomain(f"state has {pts.shape[-1]} coordinates, grid has {grid.dim}")
    for j in range(grid.dim):
        if not grid.periodic[j]:
            c = pts[..., j]
            if np.any((c < grid.spec.min[j]) | (c > grid.spec.max[j])):
                raise OutOfDomain(f"state outside the grid along dimension {j}")
    grad = value_gradient(value, pts)
    xs = np.moveaxis(pts, -1, 0)
    ps = np.moveaxis(grad, -1, 0)
    u = model.optimal_control(xs, ps)
    return np.moveaxis(u, 0, -1)
