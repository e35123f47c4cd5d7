"""driftwind: planar up-right random vector fields and their streamlines.

Pipeline: discrete arrow fields on Z^2 -> piecewise-linear tiled potential
-> mollified smooth plane field -> optional Poisson gap warp -> trajectory
integration and finite-horizon statistics, all seeded and reproducible.
"""

from .arrows import (
    IID,
    Arrow,
    Constant,
    LatticeWalk,
    ProductSystem,
    RunSchedule,
    arrow_at,
    coalescence_check,
    double_exponential_lengths,
    slope_extremes_walk,
    walk,
)
from .flow import (
    IntegratorSpec,
    SpaceTimeField,
    Trajectory,
    in_regular_region,
    integrate,
    is_regular,
    spacetime_eval,
    spacetime_integrate,
    visited_cells,
)
from .mollify import (
    BumpKernel,
    QuadratureError,
    TiledField,
    TileField,
    build_cached_pair,
    build_tile_field,
    conv_grad,
    conv_potential,
    curl_check,
    kernel_eval,
    psi_eval,
)
from .poisson import (
    DeformedField,
    GapProfile,
    LatticeProcess,
    PointProcess,
    WarpMap,
    deformed_eval,
    sample_process,
    skew_orbit,
    solve_tilt,
    two_point_jump_process,
    warp_eval,
    warp_inverse,
    warp_jacobian,
)
from .potential import (
    Cell,
    Tessellation,
    build_tessellation,
    eval_tilde,
    grad_tilde,
    tessellation_to_json,
)
from .stats import EstimatorResult, SlopeRecord, birkhoff_average, mixing_cesaro, slope_record

__version__ = "0.1.0"
