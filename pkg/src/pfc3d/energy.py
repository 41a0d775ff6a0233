"""Discrete free energy of the density field and its stability functional."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .grid import (
    CellField,
    _require_same_spec,
    _sum,
    grad_norm_sq,
    lap_norm_sq,
    norm_22_sq,
    norm_p,
)


@dataclass(frozen=True)
class EnergyParams:
    """Physical parameter of the free energy (undercooling epsilon)."""

    epsilon: float

    def __post_init__(self):
        if not np.isfinite(self.epsilon):
            raise ValueError(f"epsilon must be finite, got {self.epsilon!r}")
        if not 0.0 < self.epsilon < 1.0:
            warnings.warn(
                f"epsilon={self.epsilon} outside the usual range (0, 1)",
                stacklevel=2,
            )


def discrete_energy(phi: CellField, params: EnergyParams) -> float:
    """Free energy: 1/4 ||phi||_4^4 + (1-eps)/2 ||phi||_2^2 - ||grad phi||^2 + 1/2 ||lap phi||^2."""
    quartic = 0.25 * norm_p(phi, 4) ** 4
    quad = 0.5 * (1.0 - params.epsilon) * phi.spec.cell_volume * _sum(phi.values * phi.values)
    return quartic + quad - grad_norm_sq(phi) + 0.5 * lap_norm_sq(phi)


def modified_energy(phi_curr: CellField, phi_prev: CellField, params: EnergyParams) -> float:
    """Energy plus the nonnegative correction 1/2 ||grad (phi_curr - phi_prev)||^2.

    This is the quantity the time stepper never increases, regardless of the
    step size; it bounds discrete_energy(phi_curr) from above.
    """
    _require_same_spec(phi_curr, phi_prev)
    diff = CellField(phi_curr.spec, phi_curr.values - phi_prev.values)
    return discrete_energy(phi_curr, params) + 0.5 * grad_norm_sq(diff)


def coercivity_bound(phi: CellField, params: EnergyParams) -> tuple[float, float]:
    """Both sides of the coercivity estimate, as (F + L^3/4, ||phi||_{2,2}^2).

    The energy dominates a positive multiple of the squared H2-type norm up
    to the constant L^3/4; the multiple depends only on the domain and is not
    known in closed form, so callers monitor the ratio of the returned pair.
    """
    lhs = discrete_energy(phi, params) + 0.25 * phi.spec.volume
    rhs = norm_22_sq(phi)
    return lhs, rhs
