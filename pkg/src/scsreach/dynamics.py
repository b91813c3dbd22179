"""Control-affine dynamical models with closed-form Hamiltonians.

All array arguments follow one convention: ``x`` and ``p`` are sequences
indexed by state dimension (``x[j]`` may be a scalar or any array, as long as
the entries broadcast together), ``u`` is indexed by control dimension. This
lets the same model code evaluate one state or a whole grid of sparse
coordinates.

The Hamiltonian maximizes ``p . f(x, u)`` over the control box. Because the
dynamics are affine in ``u``, the maximum is attained at a vertex: each control
component goes to its upper bound when its switching coefficient is positive
and to its lower bound otherwise (ties pick the lower bound).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidSpec


@dataclass(frozen=True)
class ControlBox:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in self.hi))
        if len(self.lo) != len(self.hi):
            raise InvalidSpec("control bounds must have equal length")
        if any(a > b for a, b in zip(self.lo, self.hi)):
            raise InvalidSpec(f"control lower bound exceeds upper bound: {self.lo} > {self.hi}")

    @property
    def dim(self) -> int:
        return len(self.lo)

    def sample(self, counts: int | Sequence[int]) -> np.ndarray:
        """Tensor-product samples, endpoints included, shape ``(num, dim)``."""
        if np.isscalar(counts):
            counts = [int(counts)] * self.dim
        axes = [np.linspace(a, b, c) for a, b, c in zip(self.lo, self.hi, counts)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)


def _is_zero(b) -> bool:
    return np.isscalar(b) and b == 0


class Model:
    """Control-affine system ``f(x, u) = drift(x) + B(x) u``.

    Subclasses provide :meth:`drift` (list of ``state_dim`` entries) and
    :meth:`control_matrix` (nested list ``B[j][k]``; literal ``0`` entries are
    skipped).
    """

    name = "model"
    state_dim: int
    controls: ControlBox
    periodic_dims: tuple[int, ...] = ()

    def drift(self, x) -> list:
        raise NotImplementedError

    def control_matrix(self, x) -> list[list]:
        raise NotImplementedError

    def flow(self, x, u) -> np.ndarray:
        d = self.drift(x)
        B = self.control_matrix(x)
        out = []
        for j in range(self.state_dim):
            fj = d[j]
            for k in range(self.controls.dim):
                if not _is_zero(B[j][k]):
                    fj = fj + B[j][k] * u[k]
            out.append(fj)
        return np.array(np.broadcast_arrays(*[np.asarray(f, dtype=np.float64) for f in out]))

    def switching(self, x, p) -> list:
        """Coefficients ``c_k = sum_j p_j B[j][k]`` multiplying each control."""
        B = self.control_matrix(x)
        cs = []
        for k in range(self.controls.dim):
            c = 0.0
            for j in range(self.state_dim):
                if not _is_zero(B[j][k]):
                    c = c + p[j] * B[j][k]
            cs.append(c)
        return cs

    def optimal_control(self, x, p) -> np.ndarray:
        cs = self.switching(x, p)
        u = [np.where(np.asarray(c) > 0, hi, lo) for c, lo, hi in zip(cs, self.controls.lo, self.controls.hi)]
        return np.array(np.broadcast_arrays(*u), dtype=np.float64)

    def hamiltonian(self, x, p):
        d = self.drift(x)
        h = 0.0
        for j in range(self.state_dim):
            if not _is_zero(d[j]):
                h = h + p[j] * d[j]
        for c, lo, hi in zip(self.switching(x, p), self.controls.lo, self.controls.hi):
            c = np.asarray(c)
            h = h + np.where(c > 0, c * hi, c * lo)
        return h

    def alpha(self, x) -> list:
        """Pointwise bound ``sup_u |f_j(x, u)|`` per state dimension (attained at a vertex)."""
        d = self.drift(x)
        B = self.control_matrix(x)
        mid = [(a + b) / 2 for a, b in zip(self.controls.lo, self.controls.hi)]
        half = [(b - a) / 2 for a, b in zip(self.controls.lo, self.controls.hi)]
        out = []
        for j in range(self.state_dim):
            center = d[j]
            spread = 0.0
            for k in range(self.controls.dim):
                if not _is_zero(B[j][k]):
                    center = center + B[j][k] * mid[k]
                    spread = spread + np.abs(B[j][k]) * half[k]
            out.append(np.abs(center) + spread)
        return out

    def dissipation(self, grid) -> np.ndarray:
        """Global per-dimension bound of :meth:`alpha` over every node of ``grid``."""
        if grid.dim != self.state_dim:
            raise InvalidSpec(f"{self.name} is {self.state_dim}-D, grid is {grid.dim}-D")
        return np.array([float(np.max(a)) for a in self.alpha(grid.coords(sparse=True))])

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r})"


# --- single integrator -------------------------------------------------------


class SingleIntegrator(Model):
    """``x' = u`` with ``|u_j| <= u_max`` independently per dimension."""

    def __init__(self, u_max: float = 1.0, dim: int = 1):
        if not u_max > 0:
            raise InvalidSpec("u_max must be positive")
        self.u_max = float(u_max)
        self.state_dim = int(dim)
        self.controls = ControlBox((-self.u_max,) * dim, (self.u_max,) * dim)
        self.name = "integrator1d" if dim == 1 else f"integrator{dim}d"

    def drift(self, x):
        return [0] * self.state_dim

    def control_matrix(self, x):
        return [[1.0 if j == k else 0 for k in range(self.state_dim)] for j in range(self.state_dim)]


def single_integrator_1d(u_max: float = 1.0) -> SingleIntegrator:
    return SingleIntegrator(u_max, dim=1)


# --- Dubins car --------------------------------------------------------------


@dataclass(frozen=True)
class DubinsParams:
    v: float = 1.0
    omega_max: float = 1.0

    def __post_init__(self):
        if not (self.v > 0 and self.omega_max > 0):
            raise InvalidSpec("Dubins speed and turn rate must be positive")


class DubinsCar(Model):
    """State ``(p_x, p_y, theta)``; control is the turn rate."""

    name = "dubins3d"
    state_dim = 3
    periodic_dims = (2,)

    def __init__(self, params: DubinsParams = DubinsParams()):
        self.params = params
        self.controls = ControlBox((-params.omega_max,), (params.omega_max,))

    def drift(self, x):
        v = self.params.v
        return [v * np.cos(x[2]), v * np.sin(x[2]), 0]

    def control_matrix(self, x):
        return [[0], [0], [1.0]]


class DubinsSubsystem(Model):
    """``(p_x, theta)`` for ``which=1`` or ``(p_y, theta)`` for ``which=2``."""

    state_dim = 2
    periodic_dims = (1,)

    def __init__(self, params: DubinsParams = DubinsParams(), which: int = 1):
        if which not in (1, 2):
            raise InvalidSpec("Dubins subsystem must be 1 or 2")
        self.params = params
        self.which = which
        self.name = f"dubins_sub{which}"
        self.controls = ControlBox((-params.omega_max,), (params.omega_max,))

    def drift(self, x):
        trig = np.cos if self.which == 1 else np.sin
        return [self.params.v * trig(x[1]), 0]

    def control_matrix(self, x):
        return [[0], [1.0]]


def dubins3d(params: DubinsParams = DubinsParams()) -> DubinsCar:
    return DubinsCar(params)


def dubins_subsystem(params: DubinsParams = DubinsParams(), which: int = 1) -> DubinsSubsystem:
    return DubinsSubsystem(params, which)


# --- planar quadrotor ----------------------------------------------------------


@dataclass(frozen=True)
class QuadParams:
    m: float = 1.0
    CDv: float = 0.1
    CDphi: float = 0.1
    g: float = 9.81
    l: float = 0.15
    Iyy: float = 0.01
    T_lo: float = 0.0
    T_hi: float = 8.0
    # "printed": v_y' drift is -(m g + CDv) v_y / m
    # "physical": v_y' drift is -g - CDv v_y / m
    vy_drift: str = "printed"

    def __post_init__(self):
        if not (self.m > 0 and self.Iyy > 0 and self.l > 0):
            raise InvalidSpec("quadrotor m, Iyy and l must be positive")
        if self.T_lo > self.T_hi:
            raise InvalidSpec("thrust lower bound exceeds upper bound")
        if self.vy_drift not in ("printed", "physical"):
            raise InvalidSpec(f"unknown vy_drift {self.vy_drift!r}")


def _quad_vy_drift(q: QuadParams, vy):
    if q.vy_drift == "printed":
        return -(q.m * q.g + q.CDv) * vy / q.m
    return -q.g - q.CDv * vy / q.m


class Quadrotor(Model):
    """State ``(p_x, v_x, p_y, v_y, phi, omega)``; controls are the two thrusts."""

    name = "quad6d"
    state_dim = 6
    periodic_dims = (4,)

    def __init__(self, params: QuadParams = QuadParams()):
        self.params = params
        self.controls = ControlBox((params.T_lo,) * 2, (params.T_hi,) * 2)

    def drift(self, x):
        q = self.params
        return [x[1], -q.CDv * x[1] / q.m, x[3], _quad_vy_drift(q, x[3]), x[5], -q.CDphi * x[5] / q.Iyy]

    def control_matrix(self, x):
        q = self.params
        s = -np.sin(x[4]) / q.m
        c = np.cos(x[4]) / q.m
        r = q.l / q.Iyy
        return [[0, 0], [s, s], [0, 0], [c, c], [0, 0], [-r, r]]


class QuadSubsystem(Model):
    """``(p_x, v_x, phi, omega)`` for ``which=1``; ``(p_y, v_y, phi, omega)`` for ``which=2``.

    Both subsystems keep the full thrust pair as their control.
    """

    state_dim = 4
    periodic_dims = (2,)

    def __init__(self, params: QuadParams = QuadParams(), which: int = 1):
        if which not in (1, 2):
            raise InvalidSpec("quadrotor subsystem must be 1 or 2")
        self.params = params
        self.which = which
        self.name = f"quad_sub{which}"
        self.controls = ControlBox((params.T_lo,) * 2, (params.T_hi,) * 2)

    def drift(self, x):
        q = self.params
        if self.which == 1:
            dv = -q.CDv * x[1] / q.m
        else:
            dv = _quad_vy_drift(q, x[1])
        return [x[1], dv, x[3], -q.CDphi * x[3] / q.Iyy]

    def control_matrix(self, x):
        q = self.params
        a = -np.sin(x[2]) / q.m if self.which == 1 else np.cos(x[2]) / q.m
        r = q.l / q.Iyy
        return [[0, 0], [a, a], [0, 0], [-r, r]]


def quad6d(params: QuadParams = QuadParams()) -> Quadrotor:
    return Quadrotor(params)


def quad_subsystem(params: QuadParams = QuadParams(), which: int = 1) -> QuadSubsystem:
    return QuadSubsystem(params, which)


MODEL_IDS = ("dubins3d", "dubins_sub1", "dubins_sub2", "quad6d", "quad_sub1", "quad_sub2", "integrator1d")


def build_model(model_id: str, **params) -> Model:
    """Construct a model from its string id and keyword parameters."""
    if model_id in ("dubins3d", "dubins_sub1", "dubins_sub2"):
        p = DubinsParams(**params)
        return dubins3d(p) if model_id == "dubins3d" else dubins_subsystem(p, int(model_id[-1]))
    if model_id in ("quad6d", "quad_sub1", "quad_sub2"):
        p = QuadParams(**params)
        return quad6d(p) if model_id == "quad6d" else quad_subsystem(p, int(model_id[-1]))
    if model_id == "integrator1d":
        return single_integrator_1d(**params)
    if model_id.startswith("integrator") and model_id.endswith("d"):
        return SingleIntegrator(dim=int(model_id[len("integrator"):-1]), **params)
    raise InvalidSpec(f"unknown model {model_id!r}; expected one of {MODEL_IDS}")


# Subsystem model ids for each decomposable full model.
SUBSYSTEM_MODELS = {
    "dubins3d": ("dubins_sub1", "dubins_sub2"),
    "quad6d": ("quad_sub1", "quad_sub2"),
    "integrator2d": ("integrator1d", "integrator1d"),
}

# Full-state dimension lists of each subsystem (the z1/z2/z3 partition).
SUBSYSTEM_DIMS = {
    "dubins3d": ((0, 2), (1, 2)),
    "quad6d": ((0, 1, 4, 5), (2, 3, 4, 5)),
    "integrator2d": ((0,), (1,)),
}
