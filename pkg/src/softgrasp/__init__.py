"""Minimum grasp-force prediction for two-finger grippers with soft fingertips."""

__version__ = "0.1.0"

from .contact import (
    DEFAULT_MATERIAL,
    ContactPatch,
    LimitSurfacePoint,
    QuadratureError,
    SoftMaterial,
    contact_radius,
    friction_integrals,
    limit_surface_residual,
    max_moment,
    pressure_at,
    pressure_normalizer,
    torque_curve,
)
from .forcemap import compute_force_map, export_map, sample_grasp_points
from .liftsim import (
    ControllerConfig,
    ControlMode,
    SimObject,
    find_max_speed,
    measure_and_regrasp,
    simulate_lift,
)
from .mesh import Mesh, load_mesh
from .solver import (
    GraspConfig,
    GraspSolution,
    SlipState,
    SolverError,
    UngraspableError,
    solve_grasp_force,
)
from .wrench import (
    RequiredWrench,
    WrenchFeedback,
    estimate_com,
    gravity_line,
    required_wrench_from_feedback,
    required_wrench_from_gravity,
)
