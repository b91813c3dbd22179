"""Pipelines behind the command-line interface.

Each ``cmd_*`` function takes parsed inputs, writes its artifacts under the
configured output directory and returns a JSON-serializable report.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .config import RunConfig, dumps_toml, grid_table
from .decomp import (
    SubsystemMapping,
    decompose_box_target,
    reconstruct,
    reconstruct_slice,
    slice_grid,
    snap_to_node,
)
from .dynamics import SUBSYSTEM_DIMS, build_model, single_integrator_1d
from .errors import ConfigError, GridMismatch, InvalidSpec
from .fieldio import load_field, save_field
from .grid import Field, GridSpec, make_grid
from .oracle import OracleConfig, lemma1_bruteforce, semi_lagrangian_value
from .shapes import AxisBox, signed_distance_box
from .solver import SolveResult, SolverConfig, solve_brs

log = logging.getLogger(__name__)

# Reconstructions of this many dimensions or more are never materialized.
MANIFEST_MIN_DIM = 5


def worker_count() -> int:
    raw = os.environ.get("HJRD_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ConfigError(f"expected an integer, got {raw!r}", "HJRD_THREADS") from None
    return os.cpu_count() or 1


def _write_json(path: Path, obj) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, default=_json_default))
    return path


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _save_snapshots(result: SolveResult, directory: Path, labels: dict) -> list[dict]:
    rows = []
    for k, (t, f) in enumerate(result.snapshots):
        path = save_field(f, directory / f"V_{k:03d}.hjrd", labels={**labels, "time": t})
        rows.append({"time": t, "file": str(path)})
    return rows


def _solve_summary(result: SolveResult) -> dict:
    return {
        "steps": result.steps_taken,
        "wall_time_seconds": result.wall_time_seconds,
        "dt_max": result.max_cfl_dt_used,
        "dt_min": result.min_dt_used,
        "alpha": list(result.alpha),
    }


def _echo(config: RunConfig, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.toml").write_text(dumps_toml(config.echo()))


# --- solve -------------------------------------------------------------------


def cmd_solve(config: RunConfig) -> dict:
    """Full-dimensional solve of the configured model and target."""
    out = Path(config.output_dir) / "solve"
    model = config.model()
    target = signed_distance_box(config.grid, config.target)
    result = solve_brs(model, target, config.solver)
    report = {
        "command": "solve",
        "model": model.name,
        "grid": grid_table(config.grid),
        **_solve_summary(result),
        "snapshots": _save_snapshots(result, out, {"model": model.name, "kind": "value"}),
        "config": config.echo(),
    }
    _echo(config, out)
    _write_json(out / "report.json", report)
    return report


# --- scs ---------------------------------------------------------------------


def run_scs(config: RunConfig, parallel: bool = True):
    """Decompose the target, solve both subsystems and return their results.

    Returns ``(results, targets, subsystem_seconds)`` where the timing sums the
    two solver loops (or their overlap when run concurrently).
    """
    if config.mapping is None:
        raise ConfigError("scs needs a [mapping] table", "mapping")
    models = config.subsystem_models()
    targets = decompose_box_target(config.mapping, config.target, config.grid, config.sub_grids)
    jobs = [(m, t) for m, t in zip(models, targets)]
    start = time.perf_counter()
    if parallel and worker_count() > 1:
        with ThreadPoolExecutor(max_workers=min(2, worker_count())) as pool:
            results = list(pool.map(lambda job: solve_brs(job[0], job[1], config.solver), jobs))
        elapsed = time.perf_counter() - start
    else:
        results = [solve_brs(m, t, config.solver) for m, t in jobs]
        elapsed = sum(r.wall_time_seconds for r in results)
    return results, targets, elapsed


def cmd_scs(config: RunConfig) -> dict:
    """Subsystem pipeline: decompose, solve each subsystem, reconstruct."""
    out = Path(config.output_dir) / "scs"
    results, _, sub_seconds = run_scs(config)
    report = {
        "command": "scs",
        "model": config.model_id,
        "mapping": [list(d) for d in config.mapping.subsystem_dims],
        "grid": grid_table(config.grid),
        "subsystems": [],
        "config": config.echo(),
    }
    for i, (name, r) in enumerate(zip(config.sub_models, results), start=1):
        report["subsystems"].append(
            {
                "model": name,
                **_solve_summary(r),
                "snapshots": _save_snapshots(r, out / f"sub{i}", {"model": name, "kind": "value", "subsystem": i}),
            }
        )
    times = results[0].times
    V1s = [f for _, f in results[0].snapshots]
    V2s = [f for _, f in results[1].snapshots]

    recon_seconds = 0.0
    if config.grid.dim >= MANIFEST_MIN_DIM:
        manifest = {
            "kind": "reconstruction_manifest",
            "full_grid": grid_table(config.grid),
            "mapping": [list(d) for d in config.mapping.subsystem_dims],
            "snapshots": [
                {"time": t, "subsystem1": a["file"], "subsystem2": b["file"]}
                for t, a, b in zip(times, report["subsystems"][0]["snapshots"], report["subsystems"][1]["snapshots"])
            ],
        }
        report["manifest"] = str(_write_json(out / "manifest.json", manifest))
    else:
        rows = []
        for k, (t, V1, V2) in enumerate(zip(times, V1s, V2s)):
            start = time.perf_counter()
            V = reconstruct(config.mapping, V1, V2, config.grid)
            recon_seconds += time.perf_counter() - start
            path = save_field(V, out / "full" / f"V_{k:03d}.hjrd", labels={"time": t, "kind": "reconstruction"})
            rows.append({"time": t, "file": str(path)})
        report["reconstruction"] = rows

    slices = []
    for sl in config.slices:
        for k, (t, V1, V2) in enumerate(zip(times, V1s, V2s)):
            field, snapped = reconstruct_slice(config.mapping, V1, V2, config.grid, sl["fixed"])
            free = [d for d in range(config.grid.dim) if d not in sl["fixed"]]
            stem = out / "slices" / f"{sl['name']}_{k:03d}"
            if isinstance(field, Field):
                save_field(field, stem.with_suffix(".hjrd"),
                           labels={"time": t, "fixed": {str(d): v for d, v in snapped.items()}, "dims": free})
            write_slice_csv(stem.with_suffix(".csv"), field, free)
            slices.append({"name": sl["name"], "time": t, "csv": str(stem.with_suffix(".csv")),
                           "fixed": {str(d): v for d, v in snapped.items()}})
    report["slices"] = slices
    report["subsystem_seconds"] = sub_seconds
    report["reconstruction_seconds"] = recon_seconds
    _echo(config, out)
    _write_json(out / "report.json", report)
    return report


# --- compare -----------------------------------------------------------------


def compare_fields(a: Field, b: Field, band: float) -> dict:
    """Membership agreement of two surfaces on the same grid.

    A node is *outside the band* when ``min(|a|, |b|) > band``; mismatches there
    cannot be explained by a slightly shifted zero level set.
    """
    if a.grid != b.grid:
        raise GridMismatch("compared fields live on different grids")
    ina = a.values <= 0
    inb = b.values <= 0
    mismatch = ina != inb
    outside = np.minimum(np.abs(a.values), np.abs(b.values)) > band
    n = a.grid.size
    return {
        "nodes": n,
        "band": band,
        "agreement_rate": float(1 - mismatch.sum() / n),
        "mismatches": int(mismatch.sum()),
        "mismatch_rate": float(mismatch.sum() / n),
        "outside_band_mismatches": int((mismatch & outside).sum()),
        "max_abs_diff": float(np.max(np.abs(a.values - b.values))),
        "members_a": int(ina.sum()),
        "members_b": int(inb.sum()),
    }


def cmd_compare(field_a, field_b, band: float, output: Path | None = None) -> dict:
    a = load_field(field_a) if not isinstance(field_a, Field) else field_a
    b = load_field(field_b) if not isinstance(field_b, Field) else field_b
    report = {"command": "compare", **compare_fields(a, b, band)}
    if output is not None:
        _write_json(Path(output), report)
    return report


# --- bench -------------------------------------------------------------------


def bench_point(config: RunConfig, n: int) -> list[dict]:
    """Time both pipelines at ``n`` nodes per dimension (solver loops only, no I/O)."""
    cfg = config.with_counts(n)
    model = cfg.model()
    target = signed_distance_box(cfg.grid, cfg.target)
    full = solve_brs(model, target, cfg.solver)
    results, _, sub_seconds = run_scs(cfg, parallel=False)
    start = time.perf_counter()
    recon = reconstruct(cfg.mapping, results[0].final, results[1].final, cfg.grid)
    recon_seconds = time.perf_counter() - start
    sub_bytes = max(r.final.values.nbytes for r in results)
    return [
        {"pipeline": "full", "nodes_per_dim": n, "wall_seconds": full.wall_time_seconds,
         "steps": full.steps_taken, "peak_field_bytes": full.final.values.nbytes},
        {"pipeline": "scs", "nodes_per_dim": n, "wall_seconds": sub_seconds + recon_seconds,
         "steps": sum(r.steps_taken for r in results), "peak_field_bytes": max(sub_bytes, recon.values.nbytes),
         "reconstruction_seconds": recon_seconds},
    ]


def loglog_slope(ns: Sequence[float], ts: Sequence[float]) -> float:
    return float(np.polyfit(np.log(ns), np.log(ts), 1)[0])


def cmd_bench(config: RunConfig, node_counts: Sequence[int] | None = None) -> dict:
    counts = list(node_counts or config.bench_counts)
    if not counts:
        raise ConfigError("no node counts given", "bench.counts")
    if config.mapping is None:
        raise ConfigError("bench needs a [mapping] table", "mapping")
    rows = []
    for n in counts:  # sequential on purpose: no co-scheduled timings
        rows.extend(bench_point(config, n))
    speedups = []
    for n in counts:
        f = next(r for r in rows if r["pipeline"] == "full" and r["nodes_per_dim"] == n)
        s = next(r for r in rows if r["pipeline"] == "scs" and r["nodes_per_dim"] == n)
        speedups.append({"nodes_per_dim": n, "speedup": f["wall_seconds"] / s["wall_seconds"]})
    report = {
        "command": "bench",
        "model": config.model_id,
        "extents": {"min": list(config.grid.spec.min), "max": list(config.grid.spec.max)},
        "horizon": config.solver.horizon,
        "rows": rows,
        "speedups": speedups,
    }
    if len(counts) >= 2:
        full_t = [r["wall_seconds"] for r in rows if r["pipeline"] == "full"]
        scs_t = [r["wall_seconds"] for r in rows if r["pipeline"] == "scs"]
        report["slope_full"] = loglog_slope(counts, full_t)
        report["slope_scs"] = loglog_slope(counts, scs_t)
    out = Path(config.output_dir) / "bench"
    _write_json(out / "bench.json", report)
    with open(out / "bench.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pipeline", "nodes_per_dim", "wall_seconds", "steps", "peak_field_bytes", "speedup"])
        for r in rows:
            sp = next(s["speedup"] for s in speedups if s["nodes_per_dim"] == r["nodes_per_dim"])
            w.writerow([r["pipeline"], r["nodes_per_dim"], f"{r['wall_seconds']:.6f}", r["steps"],
                        r["peak_field_bytes"], f"{sp:.4f}"])
    return report


# --- slice -------------------------------------------------------------------


def write_slice_csv(path: Path, field, free_dims: Sequence[int]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{d}" for d in free_dims] + ["value"])
        if not isinstance(field, Field):
            w.writerow([repr(float(field))])
            return path
        pts = field.grid.points()
        for p, v in zip(pts, field.flat):
            w.writerow([repr(float(c)) for c in p] + [repr(float(v))])
    return path


def _slice_field(field: Field, fixed: Mapping[int, float]):
    grid = field.grid
    index = {}
    snapped = {}
    for d, v in fixed.items():
        if not 0 <= d < grid.dim:
            raise InvalidSpec(f"dimension {d} does not exist in a {grid.dim}-D field")
        index[d], snapped[d] = snap_to_node(grid, d, v)
    free = [d for d in range(grid.dim) if d not in index]
    sel = tuple(index.get(d, slice(None)) for d in range(grid.dim))
    values = field.values[sel]
    if not free:
        return float(values), snapped, free
    return Field(slice_grid(grid, free), values), snapped, free


def cmd_slice(source, fixed: Mapping[int, float], output, time_value: float | None = None) -> dict:
    """Fix some dimensions of a field (or a reconstruction manifest) and write a CSV."""
    source = Path(source)
    if source.suffix == ".json":
        manifest = json.loads(source.read_text())
        if manifest.get("kind") != "reconstruction_manifest":
            raise InvalidSpec(f"{source} is not a reconstruction manifest")
        snaps = manifest["snapshots"]
        snap = snaps[-1] if time_value is None else min(snaps, key=lambda s: abs(s["time"] - time_value))
        g = manifest["full_grid"]
        full_grid = make_grid(GridSpec(g["min"], g["max"], g["count"], g["periodic"]))
        mapping = SubsystemMapping(full_grid.dim, tuple(tuple(d) for d in manifest["mapping"]))
        V1, V2 = load_field(snap["subsystem1"]), load_field(snap["subsystem2"])
        field, snapped = reconstruct_slice(mapping, V1, V2, full_grid, fixed)
        free = [d for d in range(full_grid.dim) if d not in snapped]
        t = snap["time"]
    else:
        field, snapped, free = _slice_field(load_field(source), fixed)
        t = None
    write_slice_csv(Path(output), field, free)
    rows = field.grid.size if isinstance(field, Field) else 1
    return {"command": "slice", "csv": str(output), "rows": rows, "free_dims": free,
            "snapped": {str(d): v for d, v in snapped.items()}, "time": t}


# --- verify ------------------------------------------------------------------


def _flipped_reconstruct(mapping, V1, V2, full_grid):
    return Field(full_grid, -reconstruct(mapping, V1, V2, full_grid).values)


FAULTS = {"reconstruct_sign_flip": _flipped_reconstruct}


def analytic_integrator_check(count: int = 401, horizon: float = -0.25) -> dict:
    grid = make_grid(min=[-2.0], max=[2.0], count=[count])
    target = signed_distance_box(grid, AxisBox((0,), (0.0,), (0.5,)))
    result = solve_brs(single_integrator_1d(1.0), target, SolverConfig(horizon))
    exact = np.abs(grid.axes[0]) + abs(horizon) - 0.5
    err = float(np.max(np.abs(result.final.values - exact)))
    tol = 2 * grid.spacing[0]
    return {"name": "analytic_integrator1d", "max_error": err, "tolerance": tol, "passed": err <= tol}


def oracle_crossvalidation(model, target: Field, horizon: float, cfg: OracleConfig, band: float = 0.2) -> dict:
    result = solve_brs(model, target, SolverConfig(horizon))
    ref = semi_lagrangian_value(model, target, horizon, cfg)
    V = result.final.values
    mask = np.abs(V) <= band
    gap = float(np.max(np.abs(V - ref.values)[mask])) if mask.any() else 0.0
    tol = 3 * max(target.grid.spacing)
    return {"name": f"oracle_{model.name}", "band": band, "band_nodes": int(mask.sum()),
            "max_gap": gap, "tolerance": tol, "passed": bool(mask.any()) and gap <= tol}


def default_oracle_case():
    grid = make_grid(min=[-3.0, -np.pi], max=[3.0, np.pi], count=[101, 101], periodic=[False, True])
    target = signed_distance_box(grid, AxisBox((0,), (0.0,), (0.5,)))
    return build_model("dubins_sub1"), target, -0.5


def cmd_verify(config: RunConfig | None = None, fault: str | None = None) -> dict:
    """Run the verification suite. ``report["passed"]`` is False on any violation."""
    verify = dict(config.verify) if config else {}
    fault = fault or verify.get("fault") or None
    if fault is not None and fault not in FAULTS:
        raise ConfigError(f"unknown fault {fault!r}; expected one of {sorted(FAULTS)}", "verify.fault")
    seed = config.seed if config else 0
    n_sets = int(verify.get("lemma_sets", 20))
    recon_fn = FAULTS[fault] if fault else reconstruct

    if config and config.mapping is not None:
        mappings = {config.model_id: config.mapping}
    else:
        mappings = {name: SubsystemMapping(len(set(d[0]) | set(d[1])), d) for name, d in SUBSYSTEM_DIMS.items()}
    checks = []
    for name, mapping in mappings.items():
        rep = lemma1_bruteforce(mapping, random_seed=seed, n_sets=n_sets, reconstruct_fn=recon_fn)
        checks.append({"name": f"lemma1_{name}", **rep, "passed": rep["violations"] == 0})

    checks.append(analytic_integrator_check())

    if config is not None and config.model().state_dim <= 2:
        model = config.model()
        case = (model, signed_distance_box(config.grid, config.target), config.solver.horizon)
        ocfg = config.oracle
    else:
        case = default_oracle_case()
        ocfg = OracleConfig(11, 0.025, 4)
    checks.append(oracle_crossvalidation(*case, ocfg, band=float(verify.get("band", 0.2))))

    report = {"command": "verify", "seed": seed, "fault": fault, "checks": checks,
              "passed": all(c["passed"] for c in checks)}
    if config is not None:
        _write_json(Path(config.output_dir) / "verify" / "report.json", report)
    return report
