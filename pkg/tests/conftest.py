"""Shared fixtures and the acceptance summary printed at the end of a run."""

from __future__ import annotations

import numpy as np
import pytest

from scsreach import (
    AxisBox,
    SubsystemMapping,
    SolverConfig,
    decompose_box_target,
    dubins3d,
    dubins_subsystem,
    make_grid,
    reconstruct,
    signed_distance_box,
    solve_brs,
)

# (criterion number, title, passed, detail) appended by tests/test_acceptance.py
ACCEPTANCE_RESULTS: list[tuple[int, str, bool, str]] = []


def record(number: int, title: str, passed: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS.append((number, title, bool(passed), detail))
    print(f"ACCEPTANCE {number} {'PASS' if passed else 'FAIL'}: {title} ({detail})")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number}. {title}: {detail}")


def dubins_grid(n: int = 51):
    return make_grid(min=[-3.0, -3.0, -np.pi], max=[3.0, 3.0, np.pi], count=[n, n, n],
                     periodic=[False, False, True])


DUBINS_BOX = AxisBox((0, 1), (0.0, 0.0), (0.5, 0.5))
DUBINS_MAPPING = SubsystemMapping(3, ((0, 2), (1, 2)))


@pytest.fixture(scope="session")
def dubins51():
    """Full 3-D solve and subsystem reconstruction of the Dubins example at 51 nodes per dim."""
    grid = dubins_grid(51)
    target = signed_distance_box(grid, DUBINS_BOX)
    cfg = SolverConfig(-0.5, snapshot_times=(-0.25,))
    full = solve_brs(dubins3d(), target, cfg)
    L1, L2 = decompose_box_target(DUBINS_MAPPING, DUBINS_BOX, grid)
    sub1 = solve_brs(dubins_subsystem(which=1), L1, cfg)
    sub2 = solve_brs(dubins_subsystem(which=2), L2, cfg)
    recon = reconstruct(DUBINS_MAPPING, sub1.final, sub2.final, grid)
    return {"grid": grid, "target": target, "full": full, "sub1": sub1, "sub2": sub2, "recon": recon,
            "L1": L1, "L2": L2}
