import numpy as np
import pytest

from scsreach.decomp import (
    SubsystemMapping,
    backproject_field,
    backproject_membership,
    corollary1_membership,
    decompose_box_target,
    project_state,
    reconstruct,
    reconstruct_at,
    reconstruct_slice,
)
from scsreach.dynamics import SingleIntegrator, build_model
from scsreach.errors import DimMismatch, GridMismatch, InvalidSpec, OutOfDomain
from scsreach.grid import Field, make_grid
from scsreach.shapes import AxisBox, signed_distance_box
from scsreach.solver import SolverConfig, solve_brs

DUBINS = SubsystemMapping(3, ((0, 2), (1, 2)))
QUAD = SubsystemMapping(6, ((0, 1, 4, 5), (2, 3, 4, 5)))
DECOUPLED = SubsystemMapping(2, ((0,), (1,)))


def dubins_grid(n=21):
    return make_grid(min=[-3.0, -3.0, -np.pi], max=[3.0, 3.0, np.pi], count=[n, n, n], periodic=[False, False, True])


def quad_grid(n=7):
    return make_grid(min=[-3, -2, -3, -2, -np.pi, -5], max=[3, 2, 3, 2, np.pi, 5], count=[n] * 6,
                     periodic=[False, False, False, False, True, False])


def test_mapping_structure():
    assert DUBINS.shared_dims == (2,)
    assert DUBINS.exclusive(1) == (0,) and DUBINS.exclusive(2) == (1,)
    assert QUAD.shared_dims == (4, 5)
    assert DECOUPLED.shared_dims == ()


@pytest.mark.parametrize(
    "dims",
    [((0, 1), (1,)), ((0,), (0, 1)), ((0, 0), (1,)), ((0,), (2,)), ((0, 1), (0, 1))],
)
def test_mapping_rejects_invalid(dims):
    with pytest.raises(InvalidSpec):
        SubsystemMapping(2, dims)


def test_project_examples():
    assert project_state(DUBINS, 1, [1, 2, 3]).tolist() == [1, 3]
    assert project_state(DUBINS, 2, [1, 2, 3]).tolist() == [2, 3]
    assert project_state(DECOUPLED, 1, [5, 7]).tolist() == [5]
    with pytest.raises(DimMismatch):
        project_state(DUBINS, 1, [1, 2])


def test_backproject_examples():
    g = dubins_grid()
    sub = DUBINS.subsystem_grid(g, 1)
    l1 = signed_distance_box(sub, AxisBox((0,), (0.0,), (0.5,)))
    assert backproject_membership(DUBINS, 1, l1, [0.0, 99.0, 0.3]) == pytest.approx(-0.5)
    assert backproject_membership(DUBINS, 1, l1, [0.5, 99.0, 0.3]) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(GridMismatch):
        backproject_membership(DUBINS, 2, signed_distance_box(g, AxisBox((0,), (0.0,), (0.5,))), [0, 0, 0])


def test_backproject_matches_existential_definition():
    rng = np.random.default_rng(0)
    g = dubins_grid(6)
    sub = DUBINS.subsystem_grid(g, 2)
    mask = rng.random(sub.shape) < 0.4
    f = Field(sub, np.where(mask, -1.0, 1.0))
    members = sub.points()[mask.ravel()]
    bp = backproject_membership(DUBINS, 2, f, g.points()) <= 0
    for z, got in zip(g.points(), bp):
        x = project_state(DUBINS, 2, z)
        assert got == bool(np.any(np.all(members == x, axis=1)))
    assert np.array_equal(backproject_field(DUBINS, 2, f, g).flat <= 0, bp)


def test_paired_grid_checks():
    g = dubins_grid()
    bad = make_grid(min=[-3.0, -np.pi], max=[3.0, np.pi], count=[20, 21], periodic=[False, True])
    with pytest.raises(GridMismatch):
        DUBINS.check_paired(g, bad, 1)
    with pytest.raises(GridMismatch):
        reconstruct(DUBINS, Field(bad, np.zeros(bad.size)), Field(bad, np.zeros(bad.size)), g)


def test_decompose_dubins_target():
    g = dubins_grid()
    box = AxisBox((0, 1), (0.0, 0.0), (0.5, 0.5))
    L1, L2 = decompose_box_target(DUBINS, box, g)
    s1, s2 = DUBINS.subsystem_grid(g, 1), DUBINS.subsystem_grid(g, 2)
    assert np.array_equal(L1.values, signed_distance_box(s1, AxisBox((0,), (0.0,), (0.5,))).values)
    assert np.array_equal(L2.values, signed_distance_box(s2, AxisBox((0,), (0.0,), (0.5,))).values)
    assert np.array_equal(reconstruct(DUBINS, L1, L2, g).flat <= 0, box.contains(g.points()))


def test_decompose_quad_target():
    g = quad_grid()
    box = AxisBox((0, 2), (0.0, 0.0), (1.0, 1.0))
    L1, L2 = decompose_box_target(QUAD, box, g)
    s1 = QUAD.subsystem_grid(g, 1)
    assert np.array_equal(L1.values, signed_distance_box(s1, AxisBox((0,), (0.0,), (1.0,))).values)
    assert np.array_equal(reconstruct(QUAD, L1, L2, g).flat <= 0, box.contains(g.points()))


@pytest.mark.parametrize(
    "mapping,grid,box",
    [
        (DUBINS, dubins_grid(9), AxisBox((0, 1, 2), (0.3, -0.5, 0.2), (1.0, 0.7, 1.0))),
        (QUAD, quad_grid(5), AxisBox((0, 3, 4), (0.0, 0.5, 0.0), (1.0, 1.0, 1.5))),
        (DECOUPLED, make_grid(min=[-1, -1], max=[1, 1], count=[9, 9]), AxisBox((1,), (0.2,), (0.4,))),
    ],
)
def test_projection_of_target_equals_subsystem_target(mapping, grid, box):
    L1, L2 = decompose_box_target(mapping, box, grid)
    full_in = box.contains(grid.points())
    pts = grid.points()
    for i, L in ((1, L1), (2, L2)):
        proj = {tuple(x) for x in project_state(mapping, i, pts[full_in])}
        sub_in = {tuple(x) for x, v in zip(L.grid.points(), L.flat) if v <= 0}
        assert proj == sub_in
    assert np.array_equal(reconstruct(mapping, L1, L2, grid).flat <= 0, full_in)


def test_reconstruct_empty_when_one_side_positive():
    g = dubins_grid()
    L1, _ = decompose_box_target(DUBINS, AxisBox((0, 1), (0.0, 0.0), (0.5, 0.5)), g)
    s2 = DUBINS.subsystem_grid(g, 2)
    V = reconstruct(DUBINS, L1, Field(s2, np.full(s2.size, 0.1)), g)
    assert np.all(V.values > 0)


def test_reconstruct_order_independent():
    rng = np.random.default_rng(2)
    for mapping, g in ((DUBINS, dubins_grid(7)), (QUAD, quad_grid(4))):
        s1, s2 = mapping.subsystem_grid(g, 1), mapping.subsystem_grid(g, 2)
        V1, V2 = Field(s1, rng.normal(size=s1.size)), Field(s2, rng.normal(size=s2.size))
        swapped = SubsystemMapping(mapping.full_dim, mapping.subsystem_dims[::-1])
        assert np.array_equal(reconstruct(mapping, V1, V2, g).values, reconstruct(swapped, V2, V1, g).values)


def test_reconstruct_at_and_slice_agree_with_materialized():
    rng = np.random.default_rng(3)
    g = dubins_grid(7)
    s1, s2 = DUBINS.subsystem_grid(g, 1), DUBINS.subsystem_grid(g, 2)
    V1, V2 = Field(s1, rng.normal(size=s1.size)), Field(s2, rng.normal(size=s2.size))
    full = reconstruct(DUBINS, V1, V2, g)
    assert np.array_equal(reconstruct_at(DUBINS, V1, V2, g.points()), full.flat)
    sl, snapped = reconstruct_slice(DUBINS, V1, V2, g, {2: 0.1})
    k = int(np.argmin(np.abs(g.axes[2] - 0.1)))
    assert snapped == {2: g.axes[2][k]}
    assert np.array_equal(sl.values, full.values[:, :, k])
    sl, _ = reconstruct_slice(DUBINS, V1, V2, g, {0: 1.0, 1: -1.0})
    assert np.array_equal(sl.values, full.values[4, 2, :])
    value, _ = reconstruct_slice(DUBINS, V1, V2, g, {0: 1.0, 1: -1.0, 2: g.axes[2][3]})
    assert value == full.values[4, 2, 3]
    with pytest.raises(OutOfDomain):
        reconstruct_slice(DUBINS, V1, V2, g, {0: 10.0})


def test_corollary_examples():
    assert corollary1_membership(DUBINS, lambda x: True, lambda x: True, [0, 0, 0])
    assert not corollary1_membership(DUBINS, lambda x: True, lambda x: False, [0, 0, 0])
    assert not corollary1_membership(DUBINS, lambda x: False, lambda x: True, [0, 0, 0])


def test_decoupled_integrators_match_full_solve():
    g = make_grid(min=[-2.0, -2.0], max=[2.0, 2.0], count=[81, 81])
    box = AxisBox((0, 1), (0.0, 0.0), (0.5, 0.5))
    cfg = SolverConfig(-0.4)
    full = solve_brs(SingleIntegrator(1.0, dim=2), signed_distance_box(g, box), cfg).final
    L1, L2 = decompose_box_target(DECOUPLED, box, g)
    m = build_model("integrator1d")
    V1, V2 = solve_brs(m, L1, cfg).final, solve_brs(m, L2, cfg).final
    recon = reconstruct(DECOUPLED, V1, V2, g)
    mismatch = (full.values <= 0) != (recon.values <= 0)
    outside = np.minimum(np.abs(full.values), np.abs(recon.values)) > max(g.spacing)
    assert not np.any(mismatch & outside)
