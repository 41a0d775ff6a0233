"""The implicit time step as a nonlinear algebraic system N(u) = S.

One step advances the density phi^k (with history phi^{k-1}) to phi^{k+1} by
solving a coupled system in the stage unknowns u = (phi^{k+1}, mu, omega):
mu is the midpoint chemical potential and omega the midpoint Laplacian of
phi.  The convex energy contributions (quartic, quadratic, biharmonic) enter
implicitly through u; the concave diffusion term is extrapolated from the two
known levels, which is what makes the step unconditionally energy stable.

The module exposes the operator N, the source S, residuals, and the expanded
chemical potential; a first-order companion system (used to bootstrap the
two-level method from a single initial state) lives alongside.  Raw ndarray
variants carry the hot paths for the multigrid solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .energy import EnergyParams
from .grid import (
    CellField,
    FaceField,
    GridSpec,
    _require_same_spec,
    _sum,
    cell_diff_values,
    face_avg_values,
    face_diff_values,
    laplacian_values,
)

AXIS_NAMES = ("x", "y", "z")


@dataclass(frozen=True)
class MobilityModel:
    """Scalar mobility M(v) > 0 evaluated at face-averaged densities.

    `fn` maps density values to mobilities elementwise (NumPy-vectorized).
    The default `fn=None` denotes the constant-one mobility and skips
    evaluation entirely in the solver.
    """

    fn: Callable | None = None
    name: str = "constant_one"

    @property
    def is_constant_one(self) -> bool:
        return self.fn is None

    def __call__(self, v: np.ndarray) -> np.ndarray:
        if self.fn is None:
            return np.ones_like(v)
        out = np.asarray(self.fn(v), dtype=np.float64)
        if out.shape != v.shape:
            out = np.full_like(v, float(out))
        return out


@dataclass(frozen=True)
class SchemeState:
    """Frozen per-step context: the two known density levels and parameters."""

    phi_k: CellField
    phi_km1: CellField
    tau: float
    params: EnergyParams
    mobility: MobilityModel = field(default_factory=MobilityModel)

    def __post_init__(self):
        _require_same_spec(self.phi_k, self.phi_km1)
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise ValueError(f"tau must be positive and finite, got {self.tau!r}")

    @property
    def spec(self) -> GridSpec:
        return self.phi_k.spec


@dataclass
class StageVector:
    """The unknowns of one time step: (phi^{k+1}, mu, omega)."""

    phi: CellField
    mu: CellField
    omega: CellField

    def __post_init__(self):
        _require_same_spec(self.phi, self.mu)
        _require_same_spec(self.phi, self.omega)

    @property
    def spec(self) -> GridSpec:
        return self.phi.spec

    def copy(self) -> "StageVector":
        return StageVector(self.phi.copy(), self.mu.copy(), self.omega.copy())


# -- raw ndarray helpers --------------------------------------------------------


def extrapolated_density(phik: np.ndarray, phikm1: np.ndarray) -> np.ndarray:
    """Second-order midpoint extrapolation 3/2 phi^k - 1/2 phi^{k-1}."""
    return 1.5 * phik - 0.5 * phikm1


def mobility_face_arrays(density: np.ndarray, mobility: MobilityModel):
    """Mobility evaluated at the face averages of `density`, per axis.

    Raises ValueError naming the first offending face if any mobility value
    fails to be strictly positive.
    """
    faces = []
    for ax in range(3):
        mvals = mobility(face_avg_values(density, ax))
        if not np.all(mvals > 0.0):
            bad = np.unravel_index(int(np.argmin(mvals)), mvals.shape)
            ijk = tuple(int(b) + 1 for b in bad)
            raise ValueError(
                f"mobility {mobility.name!r} is not positive at {AXIS_NAMES[ax]}-face "
                f"{ijk}: M={float(mvals[bad])!r}"
            )
        faces.append(mvals)
    return tuple(faces)


def flux_divergence(mu: np.ndarray, mx, my, mz, h: float) -> np.ndarray:
    """div(M grad mu) with face mobilities (mx, my, mz)."""
    acc = None
    for ax, mvals in ((0, mx), (1, my), (2, mz)):
        g = mvals * face_diff_values(mu, ax, h)
        d = cell_diff_values(g, ax, h)
        acc = d if acc is None else acc + d
    return acc


def cn_source_arrays(phik, phikm1, eps: float, h: float):
    lk = laplacian_values(phik, h)
    lkm1 = laplacian_values(phikm1, h)
    s1 = phik.copy()
    s2 = 0.5 * (1.0 - eps) * phik + 3.0 * lk - lkm1
    s3 = 0.5 * lk
    return s1, s2, s3


def cn_operator_arrays(phi, mu, om, phik, mx, my, mz, tau: float, eps: float, h: float):
    n1 = phi - tau * flux_divergence(mu, mx, my, mz, h)
    n2 = (
        mu
        - 0.25 * (phi + phik) * (phi * phi + phik * phik)
        - 0.5 * (1.0 - eps) * phi
        - laplacian_values(om, h)
    )
    n3 = om - 0.5 * laplacian_values(phi, h)
    return n1, n2, n3


def cn_chemical_potential_arrays(phi_new, phik, phikm1, eps: float, h: float):
    """Fully expanded midpoint chemical potential of the two-level step."""
    lk = laplacian_values(phik, h)
    lnew = laplacian_values(phi_new, h)
    return (
        0.25 * (phi_new + phik) * (phi_new * phi_new + phik * phik)
        + 0.5 * (1.0 - eps) * (phi_new + phik)
        + 3.0 * lk
        - laplacian_values(phikm1, h)
        + 0.5 * (laplacian_values(lnew, h) + laplacian_values(lk, h))
    )


def fo_source_arrays(phi0, eps: float, h: float):
    s1 = phi0.copy()
    s2 = 2.0 * laplacian_values(phi0, h)
    s3 = np.zeros_like(phi0)
    return s1, s2, s3


def fo_operator_arrays(phi, mu, om, mx, my, mz, tau: float, eps: float, h: float):
    n1 = phi - tau * flux_divergence(mu, mx, my, mz, h)
    n2 = mu - phi * phi * phi - (1.0 - eps) * phi - laplacian_values(om, h)
    n3 = om - laplacian_values(phi, h)
    return n1, n2, n3


def composite_residual_norm(r1, r2, r3, cell_volume: float, kind: str = "l2") -> float:
    if kind == "l2":
        s = _sum(r1 * r1) + _sum(r2 * r2) + _sum(r3 * r3)
        return float(np.sqrt(cell_volume * s))
    if kind == "linf":
        return float(max(np.max(np.abs(r1)), np.max(np.abs(r2)), np.max(np.abs(r3))))
    raise ValueError(f"unknown residual norm {kind!r}")


# -- public operations ----------------------------------------------------------


def mobility_faces(state: SchemeState) -> tuple[FaceField, FaceField, FaceField]:
    """Mobility at the face-averaged extrapolated density, one field per axis."""
    star = extrapolated_density(state.phi_k.values, state.phi_km1.values)
    mx, my, mz = mobility_face_arrays(star, state.mobility)
    spec = state.spec
    return (
        FaceField(spec, "x", mx),
        FaceField(spec, "y", my),
        FaceField(spec, "z", mz),
    )


def assemble_source(state: SchemeState) -> tuple[CellField, CellField, CellField]:
    """Right-hand side S of the step system, built from the known levels."""
    s1, s2, s3 = cn_source_arrays(
        state.phi_k.values, state.phi_km1.values, state.params.epsilon, state.spec.h
    )
    spec = state.spec
    return CellField(spec, s1), CellField(spec, s2), CellField(spec, s3)


def apply_operator(u: StageVector, state: SchemeState) -> tuple[CellField, CellField, CellField]:
    """The nonlinear operator N applied to a stage vector."""
    _require_same_spec(u.phi, state.phi_k)
    mx, my, mz = (f.values for f in mobility_faces(state))
    n1, n2, n3 = cn_operator_arrays(
        u.phi.values,
        u.mu.values,
        u.omega.values,
        state.phi_k.values,
        mx,
        my,
        mz,
        state.tau,
        state.params.epsilon,
        state.spec.h,
    )
    spec = state.spec
    return CellField(spec, n1), CellField(spec, n2), CellField(spec, n3)


def residual(u: StageVector, state: SchemeState, norm: str = "l2"):
    """Residual r = S - N(u) and its composite norm."""
    s = assemble_source(state)
    n = apply_operator(u, state)
    spec = state.spec
    r = tuple(CellField(spec, sv.values - nv.values) for sv, nv in zip(s, n))
    value = composite_residual_norm(
        r[0].values, r[1].values, r[2].values, spec.cell_volume, norm
    )
    return r, value


def mu_of(phi_new: CellField, state: SchemeState) -> CellField:
    """Expanded midpoint chemical potential for a candidate phi^{k+1}.

    Used for diagnostics and as the single-equation form of the step: at the
    exact solution, mu equals this expression pointwise.
    """
    _require_same_spec(phi_new, state.phi_k)
    vals = cn_chemical_potential_arrays(
        phi_new.values,
        state.phi_k.values,
        state.phi_km1.values,
        state.params.epsilon,
        state.spec.h,
    )
    return CellField(state.spec, vals)
