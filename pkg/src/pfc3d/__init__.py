"""pfc3d: energy-stable finite-difference solver for the three-dimensional
phase field crystal equation, with an FAS nonlinear multigrid core."""

from .energy import EnergyParams, coercivity_bound, discrete_energy, modified_energy
from .grid import CellField, FaceField, GridSpec
from .kernels import BACKEND, HAVE_COMPILED
from .multigrid import (
    MGConfig,
    MGHierarchy,
    SolveReport,
    SolverError,
    prolong,
    restrict,
    smooth,
    solve_first_order_step,
    solve_timestep,
    vcycle,
)
from .scheme import (
    MobilityModel,
    SchemeState,
    StageVector,
    apply_operator,
    assemble_source,
    mobility_faces,
    mu_of,
    residual,
)
from .driver import RunConfig, RunReport, init_random, init_smooth, run

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CellField",
    "EnergyParams",
    "FaceField",
    "GridSpec",
    "HAVE_COMPILED",
    "MGConfig",
    "MGHierarchy",
    "MobilityModel",
    "RunConfig",
    "RunReport",
    "SchemeState",
    "SolveReport",
    "SolverError",
    "StageVector",
    "apply_operator",
    "assemble_source",
    "coercivity_bound",
    "discrete_energy",
    "init_random",
    "init_smooth",
    "mobility_faces",
    "modified_energy",
    "mu_of",
    "prolong",
    "residual",
    "restrict",
    "run",
    "smooth",
    "solve_first_order_step",
    "solve_timestep",
    "vcycle",
    "__version__",
]
