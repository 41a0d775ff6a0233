"""FAS nonlinear multigrid V-cycle solver for the time-step system.

Full approximation scheme: each coarse level solves the full nonlinear
problem for the full approximation, with the right-hand side corrected by the
restricted fine-level residual.  Smoothing is pointwise nonlinear
Gauss-Seidel: at every cell a 3x3 linear system in (phi, mu, omega) is solved
by Cramer's rule, with the cubic term frozen at the previous iterate.  Coarse
levels rebuild the mobility faces and the frozen-cubic density from restricted
densities, so the coarse operator is a genuine re-discretization.

Transfers are cell-centered: restriction averages the 8 fine children of each
coarse cell; prolongation copies coarse values to their children (trilinear
interpolation available via MGConfig.prolongation).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .energy import EnergyParams
from .grid import CellField, GridSpec, laplacian_values
from .scheme import (
    MobilityModel,
    SchemeState,
    StageVector,
    cn_chemical_potential_arrays,
    cn_operator_arrays,
    cn_source_arrays,
    composite_residual_norm,
    extrapolated_density,
    fo_operator_arrays,
    fo_source_arrays,
    mobility_face_arrays,
)

SMOOTHER_ORDERS = ("lexicographic", "red-black")
PROLONGATION_MODES = ("constant", "trilinear")


class SolverError(RuntimeError):
    """A solve failed in a way the caller chose to treat as fatal."""


@dataclass(frozen=True)
class MGConfig:
    """Solver knobs: smoothing counts, tolerance, hierarchy depth, ordering."""

    nu1: int = 2
    nu2: int = 2
    tol: float = 1e-8
    max_cycles: int = 100
    coarsest_m: int = 2
    smoother_order: str = "lexicographic"
    coarse_sweeps: int = 50
    residual_norm: str = "l2"
    prolongation: str = "constant"

    def __post_init__(self):
        if self.nu1 < 0 or self.nu2 < 0:
            raise ValueError("smoothing counts must be nonnegative")
        if not (np.isfinite(self.tol) and self.tol > 0):
            raise ValueError(f"tol must be positive, got {self.tol!r}")
        if self.max_cycles < 1:
            raise ValueError("max_cycles must be >= 1")
        if self.coarsest_m < 2:
            raise ValueError("coarsest_m must be >= 2")
        if self.smoother_order not in SMOOTHER_ORDERS:
            raise ValueError(f"smoother_order must be one of {SMOOTHER_ORDERS}")
        if self.residual_norm not in ("l2", "linf"):
            raise ValueError("residual_norm must be 'l2' or 'linf'")
        if self.prolongation not in PROLONGATION_MODES:
            raise ValueError(f"prolongation must be one of {PROLONGATION_MODES}")
        if self.coarse_sweeps < 1:
            raise ValueError("coarse_sweeps must be >= 1")


@dataclass
class SolveReport:
    """Outcome of one time-step solve."""

    cycles: int
    residual_history: list  # (cycle index, composite residual norm)
    converged: bool


# -- transfer operators ----------------------------------------------------------


def restrict_values(v: np.ndarray) -> np.ndarray:
    """Cell-centered full weighting: each coarse cell averages its 8 children."""
    m = v.shape[0]
    if m % 2:
        raise ValueError(f"cannot restrict odd grid size m={m}")
    mc = m // 2
    return v.reshape(mc, 2, mc, 2, mc, 2).mean(axis=(1, 3, 5))


def prolong_values(v: np.ndarray, mode: str = "constant") -> np.ndarray:
    """Coarse-to-fine interpolation onto the 8 children of each coarse cell."""
    if mode == "constant":
        return np.repeat(np.repeat(np.repeat(v, 2, 0), 2, 1), 2, 2)
    if mode == "trilinear":
        out = v
        for ax in range(3):
            lo = 0.75 * out + 0.25 * np.roll(out, 1, ax)
            hi = 0.75 * out + 0.25 * np.roll(out, -1, ax)
            out = np.stack((lo, hi), axis=ax + 1)
            shape = list(out.shape)
            shape[ax : ax + 2] = [shape[ax] * 2]
            out = out.reshape(shape)
        return np.ascontiguousarray(out)
    raise ValueError(f"unknown prolongation mode {mode!r}")


def restrict(f: CellField) -> CellField:
    return CellField(f.spec.coarsened(), restrict_values(f.values))


def prolong(f_coarse: CellField, mode: str = "constant") -> CellField:
    spec = GridSpec(2 * f_coarse.spec.m, f_coarse.spec.L)
    return CellField(spec, prolong_values(f_coarse.values, mode))


# -- hierarchy -------------------------------------------------------------------


@dataclass
class GridLevel:
    """One level of the hierarchy: grid, frozen densities, mobility faces."""

    spec: GridSpec
    phik: np.ndarray
    mx: np.ndarray
    my: np.ndarray
    mz: np.ndarray
    tau: float
    eps: float
    cubic_mode: int  # 0: two-level midpoint step, 1: first-order step
    lin: float
    halfc: float


def _level_chain(m: int, coarsest_m: int) -> list[int]:
    sizes = [m]
    while sizes[-1] > coarsest_m:
        if sizes[-1] % 2:
            raise ValueError(
                f"grid size {sizes[-1]} not divisible by 2 on the way down to "
                f"coarsest_m={coarsest_m}"
            )
        sizes.append(sizes[-1] // 2)
    return sizes


class MGHierarchy:
    """Chain of grid levels from the solve grid down to the coarsest."""

    def __init__(self, levels: list[GridLevel]):
        self.levels = levels

    def __len__(self):
        return len(self.levels)

    @classmethod
    def from_state(cls, state: SchemeState, config: MGConfig) -> "MGHierarchy":
        spec = state.spec
        sizes = _level_chain(spec.m, config.coarsest_m)
        eps = state.params.epsilon
        lin = 0.5 * (1.0 - eps)
        levels = []
        phik = state.phi_k.values
        phikm1 = state.phi_km1.values
        for m in sizes:
            lspec = GridSpec(m, spec.L)
            star = extrapolated_density(phik, phikm1)
            mx, my, mz = mobility_face_arrays(star, state.mobility)
            levels.append(
                GridLevel(lspec, phik, mx, my, mz, state.tau, eps, 0, lin, 0.5)
            )
            if m > config.coarsest_m:
                phik = restrict_values(phik)
                phikm1 = restrict_values(phikm1)
        return cls(levels)

    @classmethod
    def first_order(
        cls,
        phi0: CellField,
        tau: float,
        params: EnergyParams,
        mobility: MobilityModel,
        config: MGConfig,
    ) -> "MGHierarchy":
        spec = phi0.spec
        sizes = _level_chain(spec.m, config.coarsest_m)
        eps = params.epsilon
        levels = []
        dens = phi0.values
        for m in sizes:
            lspec = GridSpec(m, spec.L)
            mx, my, mz = mobility_face_arrays(dens, mobility)
            levels.append(
                GridLevel(lspec, dens, mx, my, mz, tau, eps, 1, 1.0 - eps, 1.0)
            )
            if m > config.coarsest_m:
                dens = restrict_values(dens)
        return cls(levels)


# -- level-local operations ------------------------------------------------------


def _level_operator(level: GridLevel, u):
    phi, mu, om = u
    if level.cubic_mode == 0:
        return cn_operator_arrays(
            phi, mu, om, level.phik, level.mx, level.my, level.mz,
            level.tau, level.eps, level.spec.h,
        )
    return fo_operator_arrays(
        phi, mu, om, level.mx, level.my, level.mz,
        level.tau, level.eps, level.spec.h,
    )


def _level_residual(level: GridLevel, u, S):
    n = _level_operator(level, u)
    return tuple(s - nv for s, nv in zip(S, n))


def _level_residual_norm(level: GridLevel, u, S, kind: str) -> float:
    r1, r2, r3 = _level_residual(level, u, S)
    return composite_residual_norm(r1, r2, r3, level.spec.cell_volume, kind)


def _level_smooth(level: GridLevel, u, S, sweeps: int, order: str):
    kernels.smoother_sweeps(
        u[0], u[1], u[2], S[0], S[1], S[2], level.phik,
        level.mx, level.my, level.mz,
        level.tau, level.spec.h, level.lin, level.halfc, level.cubic_mode,
        sweeps, order,
    )


def _coarse_solve(level: GridLevel, u, S, config: MGConfig):
    target = 0.1 * config.tol
    for _ in range(config.coarse_sweeps):
        _level_smooth(level, u, S, 1, config.smoother_order)
        if _level_residual_norm(level, u, S, config.residual_norm) <= target:
            break


def _vcycle(levels: list[GridLevel], li: int, u, S, config: MGConfig):
    level = levels[li]
    if li == len(levels) - 1:
        _coarse_solve(level, u, S, config)
        return
    _level_smooth(level, u, S, config.nu1, config.smoother_order)
    r = _level_residual(level, u, S)
    uc = tuple(restrict_values(a) for a in u)
    rc = tuple(restrict_values(a) for a in r)
    coarse = levels[li + 1]
    nc = _level_operator(coarse, uc)
    Sc = tuple(n + rr for n, rr in zip(nc, rc))
    v = tuple(a.copy() for a in uc)
    _vcycle(levels, li + 1, v, Sc, config)
    for a, vn, v0 in zip(u, v, uc):
        a += prolong_values(vn - v0, config.prolongation)
    _level_smooth(level, u, S, config.nu2, config.smoother_order)


def _run_cycles(levels, u, S, config: MGConfig) -> SolveReport:
    kind = config.residual_norm
    history = [(0, _level_residual_norm(levels[0], u, S, kind))]
    cycles = 0
    while True:
        _vcycle(levels, 0, u, S, config)
        cycles += 1
        r = _level_residual_norm(levels[0], u, S, kind)
        history.append((cycles, r))
        if r <= config.tol or cycles >= config.max_cycles:
            break
    return SolveReport(cycles, history, r <= config.tol)


def _check_mass(phi_new: np.ndarray, phik: np.ndarray, spec: GridSpec, tol: float):
    drift = abs(float(np.mean(phi_new)) - float(np.mean(phik)))
    budget = 10.0 * tol / spec.L**1.5
    if drift > budget:
        raise SolverError(
            f"mass conservation violated: |mean drift|={drift:.3e} "
            f"exceeds {budget:.3e}"
        )


# -- public entry points ---------------------------------------------------------


def smooth(
    u: StageVector,
    state: SchemeState,
    source,
    sweeps: int,
    order: str = "lexicographic",
) -> StageVector:
    """Apply Gauss-Seidel sweeps of the time-step system to a stage vector."""
    spec = state.spec
    star = extrapolated_density(state.phi_k.values, state.phi_km1.values)
    mx, my, mz = mobility_face_arrays(star, state.mobility)
    arrays = (u.phi.values.copy(), u.mu.values.copy(), u.omega.values.copy())
    S = tuple(np.ascontiguousarray(s.values) for s in source)
    eps = state.params.epsilon
    kernels.smoother_sweeps(
        arrays[0], arrays[1], arrays[2], S[0], S[1], S[2],
        np.ascontiguousarray(state.phi_k.values), mx, my, mz,
        state.tau, spec.h, 0.5 * (1.0 - eps), 0.5, 0, sweeps, order,
    )
    return StageVector(*(CellField(spec, a) for a in arrays))


def vcycle(
    hierarchy: MGHierarchy,
    u: StageVector,
    source,
    config: MGConfig,
    level: int = 0,
) -> StageVector:
    """One FAS V-cycle starting at the given hierarchy level."""
    arrays = (u.phi.values.copy(), u.mu.values.copy(), u.omega.values.copy())
    S = tuple(np.ascontiguousarray(s.values) for s in source)
    _vcycle(hierarchy.levels, level, arrays, S, config)
    spec = hierarchy.levels[level].spec
    return StageVector(*(CellField(spec, a) for a in arrays))


def default_initial_guess(state: SchemeState) -> StageVector:
    """Cheap consistent guess: phi^k, its Laplacian, and the matching potential."""
    spec = state.spec
    h = spec.h
    phik = state.phi_k.values
    phi = phik.copy()
    om = laplacian_values(phik, h)
    mu = cn_chemical_potential_arrays(
        phik, phik, state.phi_km1.values, state.params.epsilon, h
    )
    return StageVector(
        CellField(spec, phi), CellField(spec, mu), CellField(spec, om)
    )


def solve_timestep(
    state: SchemeState,
    config: MGConfig,
    u0: StageVector | None = None,
) -> tuple[StageVector, SolveReport]:
    """Advance one time step by V-cycles until the residual meets the tolerance.

    Returns the final stage vector and a report; non-convergence is reported,
    not raised (the caller decides whether it is fatal).  A converged solve is
    additionally checked for mass conservation at the solver tolerance.
    """
    hier = MGHierarchy.from_state(state, config)
    spec = state.spec
    S = cn_source_arrays(
        state.phi_k.values, state.phi_km1.values, state.params.epsilon, spec.h
    )
    if u0 is None:
        u0 = default_initial_guess(state)
    arrays = (u0.phi.values.copy(), u0.mu.values.copy(), u0.omega.values.copy())
    report = _run_cycles(hier.levels, arrays, S, config)
    if report.converged:
        _check_mass(arrays[0], state.phi_k.values, spec, config.tol)
    sv = StageVector(*(CellField(spec, a) for a in arrays))
    return sv, report


def solve_first_order_step(
    phi0: CellField,
    tau: float,
    params: EnergyParams,
    mobility: MobilityModel,
    config: MGConfig,
) -> tuple[StageVector, SolveReport]:
    """One step of the first-order splitting scheme (used for bootstrapping).

    The quartic, quadratic and biharmonic energy terms are implicit; the
    concave diffusion term is explicit at the known level.
    """
    hier = MGHierarchy.first_order(phi0, tau, params, mobility, config)
    spec = phi0.spec
    h = spec.h
    eps = params.epsilon
    v0 = phi0.values
    S = fo_source_arrays(v0, eps, h)
    lap0 = laplacian_values(v0, h)
    mu0 = (
        v0 * v0 * v0
        + (1.0 - eps) * v0
        + 2.0 * lap0
        + laplacian_values(lap0, h)
    )
    arrays = (v0.copy(), mu0, lap0.copy())
    report = _run_cycles(hier.levels, arrays, S, config)
    if report.converged:
        _check_mass(arrays[0], v0, spec, config.tol)
    sv = StageVector(*(CellField(spec, a) for a in arrays))
    return sv, report
