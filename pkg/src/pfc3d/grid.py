"""Periodic cell-centered grid functions and their finite-difference calculus.

Fields live on a uniform m x m x m grid over a cubic periodic box of edge
length L.  Cell centers sit at x_i = (i - 1/2) h with h = L / m.  Differences
and averages map cell fields to face fields (one value per face along a
single axis) and back; composing them yields the standard 7-point Laplacian.
All index arithmetic wraps periodically.

Storage is C-contiguous float64 with axis order (i, j, k), so the k index
varies fastest in memory.  Public operations never mutate their inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

AXES = ("x", "y", "z")
_AXIS_INDEX = {"x": 0, "y": 1, "z": 2}


def _axis_index(axis: str) -> int:
    try:
        return _AXIS_INDEX[axis]
    except (KeyError, TypeError):
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}") from None


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic cubic grid: m cells per axis over a box of edge L."""

    m: int
    L: float

    def __post_init__(self):
        if not isinstance(self.m, (int, np.integer)) or isinstance(self.m, bool):
            raise ValueError(f"m must be an integer, got {self.m!r}")
        if self.m < 2:
            raise ValueError(f"m must be >= 2, got {self.m}")
        if not (np.isfinite(self.L) and self.L > 0):
            raise ValueError(f"L must be positive and finite, got {self.L!r}")

    @property
    def h(self) -> float:
        return self.L / self.m

    @property
    def cell_volume(self) -> float:
        return self.h**3

    @property
    def volume(self) -> float:
        return self.L**3

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.m, self.m, self.m)

    def cell_centers(self) -> np.ndarray:
        """1D coordinates of cell centers along any axis."""
        return (np.arange(1, self.m + 1) - 0.5) * self.h

    def coarsened(self) -> "GridSpec":
        if self.m % 2:
            raise ValueError(f"cannot coarsen odd grid size m={self.m}")
        return GridSpec(self.m // 2, self.L)


def _as_grid_array(values, spec: GridSpec) -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.shape != spec.shape:
        raise ValueError(f"values shape {arr.shape} does not match grid {spec.shape}")
    return arr


@dataclass
class CellField:
    """Real-valued grid function with one value per cell center."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = _as_grid_array(self.values, self.spec)

    @classmethod
    def zeros(cls, spec: GridSpec) -> "CellField":
        return cls(spec, np.zeros(spec.shape))

    @classmethod
    def full(cls, spec: GridSpec, value: float) -> "CellField":
        return cls(spec, np.full(spec.shape, float(value)))

    @classmethod
    def from_function(cls, spec: GridSpec, fn: Callable) -> "CellField":
        """Sample fn(x, y, z) at the cell centers (fn must broadcast)."""
        x = spec.cell_centers()
        return cls(spec, fn(x[:, None, None], x[None, :, None], x[None, None, :]))

    def copy(self) -> "CellField":
        return CellField(self.spec, self.values.copy())

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.values).all())

    def __add__(self, other: "CellField") -> "CellField":
        _require_same_spec(self, other)
        return CellField(self.spec, self.values + other.values)

    def __sub__(self, other: "CellField") -> "CellField":
        _require_same_spec(self, other)
        return CellField(self.spec, self.values - other.values)

    def __neg__(self) -> "CellField":
        return CellField(self.spec, -self.values)

    def __mul__(self, scalar: float) -> "CellField":
        return CellField(self.spec, self.values * float(scalar))

    __rmul__ = __mul__


@dataclass
class FaceField:
    """Grid function with one value per cell face along a single axis.

    Entry [i, j, k] (0-based) along axis x holds the value at the face
    between cells i and i+1 (periodically wrapped), i.e. at x_{i+1/2};
    likewise for y and z.
    """

    spec: GridSpec
    axis: str
    values: np.ndarray

    def __post_init__(self):
        _axis_index(self.axis)
        self.values = _as_grid_array(self.values, self.spec)

    def copy(self) -> "FaceField":
        return FaceField(self.spec, self.axis, self.values.copy())


def _require_same_spec(f, g):
    if f.spec != g.spec:
        raise ValueError(f"grid mismatch: {f.spec} vs {g.spec}")


def _require_axis(g: FaceField, axis: str | None):
    if axis is not None and axis != g.axis:
        raise ValueError(f"axis mismatch: field is on {g.axis!r} faces, requested {axis!r}")


def _sum(a: np.ndarray) -> float:
    # np.sum is pairwise over contiguous float64: needed to retain ~1e-9-scale
    # quantities when reducing 128^3 cells, and deterministic.
    return float(np.sum(a))


# -- raw ndarray stencils (shared by scheme/multigrid/spectral hot paths) -----


def face_diff_values(v: np.ndarray, ax: int, h: float) -> np.ndarray:
    return (np.roll(v, -1, ax) - v) / h


def face_avg_values(v: np.ndarray, ax: int) -> np.ndarray:
    return 0.5 * (np.roll(v, -1, ax) + v)


def cell_diff_values(g: np.ndarray, ax: int, h: float) -> np.ndarray:
    return (g - np.roll(g, 1, ax)) / h


def cell_avg_values(g: np.ndarray, ax: int) -> np.ndarray:
    return 0.5 * (g + np.roll(g, 1, ax))


def laplacian_values(v: np.ndarray, h: float) -> np.ndarray:
    out = np.roll(v, -1, 0)
    out += np.roll(v, 1, 0)
    out += np.roll(v, -1, 1)
    out += np.roll(v, 1, 1)
    out += np.roll(v, -1, 2)
    out += np.roll(v, 1, 2)
    out -= 6.0 * v
    out /= h * h
    return out


# -- difference / average operators -------------------------------------------


def face_difference(f: CellField, axis: str) -> FaceField:
    """Forward divided difference onto the faces of the given axis."""
    ax = _axis_index(axis)
    return FaceField(f.spec, axis, face_diff_values(f.values, ax, f.spec.h))


def face_average(f: CellField, axis: str) -> FaceField:
    """Midpoint average onto the faces of the given axis."""
    ax = _axis_index(axis)
    return FaceField(f.spec, axis, face_avg_values(f.values, ax))


def cell_difference(g: FaceField, axis: str | None = None) -> CellField:
    """Divided difference of a face field back onto cell centers."""
    _require_axis(g, axis)
    ax = _axis_index(g.axis)
    return CellField(g.spec, cell_diff_values(g.values, ax, g.spec.h))


def cell_average(g: FaceField, axis: str | None = None) -> CellField:
    """Midpoint average of a face field back onto cell centers."""
    _require_axis(g, axis)
    ax = _axis_index(g.axis)
    return CellField(g.spec, cell_avg_values(g.values, ax))


def laplacian(f: CellField) -> CellField:
    """Periodic 7-point Laplacian, (sum of six neighbors - 6f) / h^2."""
    return CellField(f.spec, laplacian_values(f.values, f.spec.h))


# -- inner products, norms, means ----------------------------------------------


def inner_product(f: CellField, g: CellField) -> float:
    """Grid inner product h^3 sum f*g."""
    _require_same_spec(f, g)
    return f.spec.cell_volume * _sum(f.values * g.values)


def face_inner_product(a: FaceField, b: FaceField) -> float:
    """Face-field inner product h^3 sum a*b (fields on the same axis)."""
    _require_same_spec(a, b)
    if a.axis != b.axis:
        raise ValueError(f"axis mismatch: {a.axis!r} vs {b.axis!r}")
    return a.spec.cell_volume * _sum(a.values * b.values)


def norm_p(f: CellField, p: int) -> float:
    """Discrete p-norm (h^3 sum |f|^p)^(1/p)."""
    if p == 2:
        s = _sum(f.values * f.values)
    else:
        s = _sum(np.abs(f.values) ** p)
    return (f.spec.cell_volume * s) ** (1.0 / p)


def norm_inf(f: CellField) -> float:
    return float(np.max(np.abs(f.values)))


def grad_norm_sq(f: CellField) -> float:
    """Squared discrete gradient norm, summed over the three face differences."""
    h = f.spec.h
    acc = 0.0
    for ax in range(3):
        d = face_diff_values(f.values, ax, h)
        acc += _sum(d * d)
    return f.spec.cell_volume * acc


def lap_norm_sq(f: CellField) -> float:
    w = laplacian_values(f.values, f.spec.h)
    return f.spec.cell_volume * _sum(w * w)


def norm_22_sq(f: CellField) -> float:
    """Squared discrete H2-type norm: ||f||^2 + ||grad f||^2 + ||lap f||^2."""
    cv = f.spec.cell_volume
    return cv * _sum(f.values * f.values) + grad_norm_sq(f) + lap_norm_sq(f)


def norm_22(f: CellField) -> float:
    return math.sqrt(norm_22_sq(f))


def mean(f: CellField) -> float:
    """Domain average h^3 sum f / L^3 (= plain average of the values)."""
    return float(np.mean(f.values))
