"""TOML run configuration.

Example::

    seed = 0
    output_dir = "runs/dubins"

    [model]
    id = "dubins3d"
    params = { v = 1.0, omega_max = 1.0 }

    [grid]
    min = [-3.0, -3.0, "-pi"]
    max = [3.0, 3.0, "pi"]
    count = [51, 51, 51]
    periodic = [false, false, true]

    [target]
    dims = [0, 1]
    center = [0.0, 0.0]
    half_width = [0.5, 0.5]

    [solver]
    horizon = -0.5

    [mapping]
    subsystem1 = [0, 2]
    subsystem2 = [1, 2]

Angles may be written as strings such as ``"pi"``, ``"-pi"`` or ``"2pi"``.
"""

from __future__ import annotations

import copy
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
import tomli
import tomli_w

from .decomp import SubsystemMapping
from .dynamics import SUBSYSTEM_DIMS, SUBSYSTEM_MODELS, Model, build_model
from .errors import ConfigError, ReachError
from .grid import Grid, GridSpec, make_grid
from .oracle import OracleConfig
from .shapes import AxisBox
from .solver import SolverConfig

_PI_RE = re.compile(r"^\s*([+-]?)\s*(\d*\.?\d*)\s*\*?\s*pi\s*$")


def parse_real(value, key: str) -> float:
    if isinstance(value, bool):
        raise ConfigError(f"expected a number, got {value!r}", key)
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        m = _PI_RE.match(value)
        if m:
            sign = -1.0 if m.group(1) == "-" else 1.0
            factor = float(m.group(2)) if m.group(2) not in ("", ".") else 1.0
            return sign * factor * math.pi
    raise ConfigError(f"expected a number or multiple of pi, got {value!r}", key)


def _reals(raw, key) -> list[float]:
    if not isinstance(raw, list):
        raise ConfigError("expected a list", key)
    return [parse_real(v, f"{key}[{k}]") for k, v in enumerate(raw)]


def _ints(raw, key) -> list[int]:
    if not isinstance(raw, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in raw):
        raise ConfigError("expected a list of integers", key)
    return list(raw)


def parse_grid(raw: dict, key: str = "grid") -> Grid:
    if not isinstance(raw, dict):
        raise ConfigError("expected a table", key)
    for k in ("min", "max", "count"):
        if k not in raw:
            raise ConfigError("missing entry", f"{key}.{k}")
    count = _ints(raw["count"], f"{key}.count")
    periodic = raw.get("periodic", [False] * len(count))
    if not isinstance(periodic, list) or not all(isinstance(p, bool) for p in periodic):
        raise ConfigError("expected a list of booleans", f"{key}.periodic")
    lo = _reals(raw["min"], f"{key}.min")
    hi = _reals(raw["max"], f"{key}.max")
    for k, c in enumerate(count):
        if c < 3:
            raise ConfigError(f"node count must be >= 3, got {c}", f"{key}.count[{k}]")
    if not len(lo) == len(hi) == len(count) == len(periodic):
        raise ConfigError("min, max, count and periodic must have equal length", key)
    try:
        return make_grid(GridSpec(lo, hi, count, periodic))
    except ReachError as exc:
        raise ConfigError(str(exc), key) from exc


def grid_table(grid: Grid) -> dict:
    s = grid.spec
    return {"min": list(s.min), "max": list(s.max), "count": list(s.count), "periodic": list(s.periodic)}


@dataclass
class RunConfig:
    model_id: str
    model_params: dict
    grid: Grid
    target: AxisBox
    solver: SolverConfig
    mapping: SubsystemMapping | None = None
    sub_models: tuple[str, str] | None = None
    sub_grids: tuple[Grid, Grid] | None = None
    slices: list[dict] = field(default_factory=list)
    output_dir: Path = Path("runs")
    seed: int = 0
    oracle: OracleConfig = field(default_factory=OracleConfig)
    verify: dict = field(default_factory=dict)
    bench_counts: list[int] = field(default_factory=list)
    raw: dict = field(default_factory=dict)

    def model(self) -> Model:
        return build_model(self.model_id, **self.model_params)

    def subsystem_models(self) -> tuple[Model, Model]:
        if self.sub_models is None:
            raise ConfigError("no subsystem models for this configuration", "mapping.models")
        return tuple(build_model(m, **self.model_params) for m in self.sub_models)

    def with_counts(self, n: int) -> "RunConfig":
        """Same run with every grid dimension resampled to ``n`` nodes."""
        raw = copy.deepcopy(self.raw)
        raw["grid"]["count"] = [n] * len(raw["grid"]["count"])
        raw.get("mapping", {}).pop("grids", None)
        return parse_config(raw)

    def echo(self) -> dict:
        return copy.deepcopy(self.raw)


def parse_config(raw: dict) -> RunConfig:
    model_raw = raw.get("model")
    if not isinstance(model_raw, dict) or "id" not in model_raw:
        raise ConfigError("missing model id", "model.id")
    model_id = model_raw["id"]
    params = dict(model_raw.get("params", {}))
    try:
        model = build_model(model_id, **params)
    except TypeError as exc:
        raise ConfigError(str(exc), "model.params") from exc
    except ReachError as exc:
        raise ConfigError(str(exc), "model") from exc

    if "grid" not in raw:
        raise ConfigError("missing table", "grid")
    grid = parse_grid(raw["grid"])
    if grid.dim != model.state_dim:
        raise ConfigError(f"{model_id} has {model.state_dim} states but the grid has {grid.dim} dims", "grid")
    for j in model.periodic_dims:
        if not grid.periodic[j]:
            raise ConfigError(f"dimension {j} of {model_id} is an angle and must be periodic", f"grid.periodic[{j}]")

    t = raw.get("target")
    if not isinstance(t, dict):
        raise ConfigError("missing table", "target")
    try:
        target = AxisBox(_ints(t.get("dims"), "target.dims"), _reals(t.get("center"), "target.center"),
                         _reals(t.get("half_width"), "target.half_width"))
    except ReachError as exc:
        raise ConfigError(str(exc), "target") from exc
    if any(d >= grid.dim or d < 0 for d in target.dims):
        raise ConfigError(f"dims {target.dims} exceed grid dimension {grid.dim}", "target.dims")

    s = raw.get("solver", {})
    if "horizon" not in s:
        raise ConfigError("missing entry", "solver.horizon")
    try:
        solver = SolverConfig(
            horizon=parse_real(s["horizon"], "solver.horizon"),
            cfl=parse_real(s.get("cfl", 0.5), "solver.cfl"),
            snapshot_times=tuple(_reals(s.get("snapshot_times", []), "solver.snapshot_times")),
            max_steps=int(s.get("max_steps", 1_000_000)),
        )
    except ConfigError:
        raise
    except ReachError as exc:
        raise ConfigError(str(exc), "solver") from exc

    mapping = sub_models = sub_grids = None
    if "mapping" in raw:
        m = raw["mapping"]
        default = SUBSYSTEM_DIMS.get(model_id, (None, None))
        dims = tuple(
            _ints(m.get(f"subsystem{i}", list(default[i - 1] or [])), f"mapping.subsystem{i}") for i in (1, 2)
        )
        try:
            mapping = SubsystemMapping(grid.dim, dims)
        except ReachError as exc:
            raise ConfigError(str(exc), "mapping") from exc
        names = m.get("models", SUBSYSTEM_MODELS.get(model_id))
        if names is None or len(names) != 2:
            raise ConfigError(f"no default subsystem models for {model_id}; list two", "mapping.models")
        for k, name in enumerate(names):
            try:
                sub = build_model(name, **params)
            except (TypeError, ReachError) as exc:
                raise ConfigError(str(exc), f"mapping.models[{k}]") from exc
            if sub.state_dim != len(dims[k]):
                raise ConfigError(f"{name} has {sub.state_dim} states, subsystem lists {len(dims[k])} dims",
                                  f"mapping.models[{k}]")
        sub_models = tuple(names)
        if "grids" in m:
            grids = [parse_grid(g, f"mapping.grids[{k}]") for k, g in enumerate(m["grids"])]
            if len(grids) != 2:
                raise ConfigError("expected two subsystem grids", "mapping.grids")
            for k, g in enumerate(grids):
                try:
                    mapping.check_paired(grid, g, k + 1)
                except ReachError as exc:
                    raise ConfigError(str(exc), f"mapping.grids[{k}]") from exc
            sub_grids = tuple(grids)
        else:
            sub_grids = tuple(mapping.subsystem_grid(grid, i) for i in (1, 2))

    slices = []
    for k, sl in enumerate(raw.get("slices", [])):
        fixed = sl.get("fixed")
        if not isinstance(fixed, dict):
            raise ConfigError("expected a table of dim -> value", f"slices[{k}].fixed")
        try:
            fixed = {int(d): parse_real(v, f"slices[{k}].fixed.{d}") for d, v in fixed.items()}
        except ValueError as exc:
            raise ConfigError("dimension keys must be integers", f"slices[{k}].fixed") from exc
        slices.append({"name": sl.get("name", f"slice{k}"), "fixed": fixed})

    o = raw.get("oracle", {})
    try:
        oracle = OracleConfig(
            control_samples=o.get("control_samples", 11),
            dt=parse_real(o.get("dt", 0.025), "oracle.dt"),
            substeps=int(o.get("substeps", 4)),
        )
    except ReachError as exc:
        raise ConfigError(str(exc), "oracle") from exc

    bench = raw.get("bench", {})
    counts = _ints(bench.get("counts", []), "bench.counts") if bench else []

    return RunConfig(
        model_id=model_id,
        model_params=params,
        grid=grid,
        target=target,
        solver=solver,
        mapping=mapping,
        sub_models=sub_models,
        sub_grids=sub_grids,
        slices=slices,
        output_dir=Path(raw.get("output_dir", "runs")),
        seed=int(raw.get("seed", 0)),
        oracle=oracle,
        verify=dict(raw.get("verify", {})),
        bench_counts=counts,
        raw=copy.deepcopy(raw),
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = tomli.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"no such file {path}") from exc
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(raw)


def dumps_toml(raw: dict) -> str:
    """Serialize a raw config table (used to echo the config that reproduces a run)."""
    return tomli_w.dumps(raw)
