"""Slow reference computations used to cross-check the PDE solver and the
decomposition on small problems.

None of these share code with :mod:`scsreach.solver`: the value oracle is a
dynamic-programming recursion over sampled constant controls, and the
membership oracle enumerates piecewise-constant control sequences directly.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .decomp import SubsystemMapping, backproject_membership, corollary1_membership, project_state, reconstruct
from .dynamics import Model
from .errors import BudgetExceeded, InvalidSpec
from .grid import Field, GridSpec, interpolate, make_grid, wrap_periodic

MEMBERSHIP_BUDGET = 10**6


@dataclass(frozen=True)
class OracleConfig:
    control_samples: int | tuple[int, ...] = 11
    dt: float = 0.01
    substeps: int = 4

    def __post_init__(self):
        samples = (self.control_samples,) if np.isscalar(self.control_samples) else tuple(self.control_samples)
        if any(int(c) < 2 for c in samples):
            raise InvalidSpec("need at least 2 control samples per dimension")
        if not self.dt > 0:
            raise InvalidSpec("oracle dt must be positive")
        if int(self.substeps) < 1:
            raise InvalidSpec("substeps must be at least 1")

    def controls(self, model: Model) -> np.ndarray:
        return model.controls.sample(self.control_samples)


def _euler(model: Model, x: np.ndarray, u: np.ndarray, duration: float, substeps: int) -> np.ndarray:
    """Advance states ``x`` (shape ``(n, K)``) under constant controls ``u`` (``(m, K)`` or ``(m,)``)."""
    h = duration / substeps
    for _ in range(substeps):
        x = x + h * model.flow(x, u)
    return x


def semi_lagrangian_value(model: Model, target: Field, horizon: float, cfg: OracleConfig = OracleConfig()) -> Field:
    """``V(s - dt, x) = max_u V(s, x advanced by dt under constant u)``, from ``V(0) = target``."""
    if horizon > 0:
        raise InvalidSpec("horizon must be <= 0")
    if horizon == 0:
        return target
    steps = abs(horizon) / cfg.dt
    n_steps = int(round(steps))
    if n_steps < 1 or abs(steps - n_steps) > 1e-9 * max(1.0, steps):
        raise InvalidSpec(f"horizon {horizon} is not a whole number of oracle steps of {cfg.dt}")

    grid = target.grid
    nodes = grid.points().T  # (n, N)
    controls = cfg.controls(model)
    # Departure points do not depend on V, so advance them once per control.
    arrivals = [wrap_periodic(grid, _euler(model, nodes, u, cfg.dt, cfg.substeps).T) for u in controls]
    V = target
    for _ in range(n_steps):
        best = np.full(grid.size, -np.inf)
        for pts in arrivals:
            best = np.maximum(best, interpolate(V, pts))
        V = Field(grid, best)
    return V


def exhaustive_brs_membership(
    model: Model,
    z,
    target_membership: Callable[[np.ndarray], np.ndarray],
    horizon: float,
    segments: int,
    cfg: OracleConfig = OracleConfig(),
) -> bool:
    """Whether every sampled piecewise-constant control drives ``z`` into the target.

    ``target_membership`` maps states of shape ``(K, n)`` to booleans. The
    control set is the tensor product of ``cfg.control_samples`` per control
    dimension, held constant on each of ``segments`` equal pieces of
    ``[horizon, 0]``; each piece is integrated with ``cfg.substeps`` Euler steps.
    """
    if segments < 1:
        raise InvalidSpec("segments must be at least 1")
    controls = cfg.controls(model)
    total = len(controls) ** segments
    if total > MEMBERSHIP_BUDGET:
        raise BudgetExceeded(f"{len(controls)}^{segments} = {total} control sequences exceeds {MEMBERSHIP_BUDGET}")
    seg = abs(horizon) / segments
    x = np.asarray(z, dtype=np.float64).reshape(-1, 1)
    k = len(controls)
    for _ in range(segments):
        # every current trajectory branches into every control sample
        x = np.repeat(x, k, axis=1)
        u = np.tile(controls.T, x.shape[1] // k)
        x = _euler(model, x, u, seg, cfg.substeps)
    return bool(np.all(target_membership(x.T)))


def _random_set(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.random(shape) < rng.uniform(0.05, 0.95)


def lemma1_bruteforce(
    mapping: SubsystemMapping,
    random_seed: int = 0,
    n_sets: int = 20,
    max_nodes: int = 10**4,
    reconstruct_fn=reconstruct,
) -> dict:
    """Exhaustively check projection/back-projection equivalences on random sets.

    For each random pair of subsystem sets ``S1, S2`` (boolean masks on paired
    grids) and every full-grid node ``z``:

    * ``proj_i(z) in S_i`` (direct lookup) agrees with the existential definition
      ``exists x in S_i : proj_i(z) = x`` (scan of every member of ``S_i``);
    * both agree with the surface test ``backproject_membership(...) <= 0``;
    * the reconstructed surface (``reconstruct_fn``) is ``<= 0`` exactly when both
      projections lie in their sets.

    Returns a report with the node count, a digest of the generated sets and
    any violation witnesses.
    """
    rng = np.random.default_rng(random_seed)
    n = mapping.full_dim
    per_dim = max(3, min(5, int(math.floor(max_nodes ** (1.0 / n)))))
    while per_dim**n > max_nodes and per_dim > 3:
        per_dim -= 1
    if per_dim**n > max_nodes:
        raise InvalidSpec(f"a {n}-D grid with 3 nodes per dim exceeds {max_nodes} nodes")
    shared = set(mapping.shared_dims)
    full_grid = make_grid(
        GridSpec([-1.0] * n, [1.0] * n, [per_dim] * n, [d in shared for d in range(n)])
    )
    sub_grids = [mapping.subsystem_grid(full_grid, i) for i in (1, 2)]
    points = full_grid.points()

    violations = []
    checked = 0
    digest = hashlib.sha256()
    for set_no in range(n_sets):
        masks = [_random_set(rng, g.shape) for g in sub_grids]
        for m in masks:
            digest.update(np.packbits(m).tobytes())
        fields = [Field(g, np.where(m, -1.0, 1.0)) for g, m in zip(sub_grids, masks)]
        members = [g.points()[m.ravel()] for g, m in zip(sub_grids, masks)]
        tables = [dict(zip(map(tuple, g.points()), m.ravel())) for g, m in zip(sub_grids, masks)]
        proj = [project_state(mapping, i, points) for i in (1, 2)]
        # existential definition: some member of S_i equals proj_i(z), by full scan
        exists = [
            np.any(np.all(p[:, None, :] == mem[None, :, :], axis=2), axis=1) if len(mem) else np.zeros(len(p), bool)
            for p, mem in zip(proj, members)
        ]
        recon = reconstruct_fn(mapping, fields[0], fields[1], full_grid).values.reshape(-1)
        bp = [backproject_membership(mapping, i, fields[i - 1], points) <= 0 for i in (1, 2)]
        for flat, z in enumerate(points):
            checked += 1
            direct = []
            for i in (1, 2):
                in_set = bool(tables[i - 1][tuple(proj[i - 1][flat])])
                direct.append(in_set)
                if not (in_set == bool(exists[i - 1][flat]) == bool(bp[i - 1][flat])):
                    violations.append(
                        {"set": set_no, "subsystem": i, "node": z.tolist(), "projection_in_set": in_set,
                         "existential": bool(exists[i - 1][flat]), "surface": bool(bp[i - 1][flat])}
                    )
            both = corollary1_membership(
                mapping, lambda x: tables[0][tuple(x)], lambda x: tables[1][tuple(x)], z
            )
            if both != all(direct) or both != bool(recon[flat] <= 0):
                violations.append(
                    {"set": set_no, "subsystem": "both", "node": z.tolist(),
                     "corollary": both, "reconstructed": bool(recon[flat] <= 0)}
                )
    return {
        "seed": random_seed,
        "full_grid_nodes": full_grid.size,
        "sets": n_sets,
        "sets_sha256": digest.hexdigest(),
        "nodes_checked": checked,
        "violations": len(violations),
        "witnesses": violations[:10],
    }
