"""Grid-based Hamilton-Jacobi reachability with self-contained subsystem decomposition."""

from .decomp import (
    SubsystemMapping,
    backproject_field,
    backproject_membership,
    corollary1_membership,
    decompose_box_target,
    project_state,
    reconstruct,
    reconstruct_slice,
)
from .dynamics import (
    ControlBox,
    DubinsParams,
    Model,
    QuadParams,
    build_model,
    dubins3d,
    dubins_subsystem,
    quad6d,
    quad_subsystem,
    single_integrator_1d,
)
from .fieldio import load_field, save_field
from .grid import Field, Grid, GridSpec, interpolate, linear_index, make_grid, multi_index, node_coordinates
from .shapes import AxisBox, intersect, signed_distance_box, union
from .solver import (
    SolveResult,
    SolverConfig,
    cfl_dt,
    extract_optimal_control,
    lax_friedrichs_hamiltonian,
    solve_brs,
    upwind_derivatives,
)

__version__ = "0.1.0"
