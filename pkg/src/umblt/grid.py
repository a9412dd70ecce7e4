"""Uniform node-centred grids, direction sets and the fields living on them.

Scalar fields are stored as ``(ny, nx)`` arrays (row index along x2, column
index along x1); angular fields as ``(M, ny, nx)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import DomainMismatchError, UMBLTError, UndefinedMetricError

__all__ = [
    "Grid2D",
    "DirectionSet",
    "ScalarField",
    "AngularField",
    "angular_integrate",
    "interpolate",
    "interpolate_angular",
    "inner",
    "l2_norm",
    "relative_l2_error",
    "read_csv",
    "write_csv",
]


@dataclass(frozen=True)
class Grid2D:
    nx: int
    ny: int
    x1_min: float = 0.0
    x1_max: float = 1.0
    x2_min: float = 0.0
    x2_max: float = 1.0

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ValueError(f"grid needs at least 2 nodes per axis, got {self.nx}x{self.ny}")
        if not (self.x1_max > self.x1_min and self.x2_max > self.x2_min):
            raise ValueError("grid bounds must be strictly ordered")

    @classmethod
    def square(cls, n, side=1.0, origin=0.0):
        return cls(n, n, origin, origin + side, origin, origin + side)

    @property
    def dx1(self):
        return (self.x1_max - self.x1_min) / (self.nx - 1)

    @property
    def dx2(self):
        return (self.x2_max - self.x2_min) / (self.ny - 1)

    @property
    def shape(self):
        return (self.ny, self.nx)

    @property
    def x1(self):
        return np.linspace(self.x1_min, self.x1_max, self.nx)

    @property
    def x2(self):
        return np.linspace(self.x2_min, self.x2_max, self.ny)

    def mesh(self):
        """Node coordinates as two ``(ny, nx)`` arrays."""
        return np.meshgrid(self.x1, self.x2)

    def diameter(self):
        return float(np.hypot(self.x1_max - self.x1_min, self.x2_max - self.x2_min))

    def side_lengths(self):
        return (self.x1_max - self.x1_min, self.x2_max - self.x2_min)

    def cell_weights(self):
        """Trapezoidal quadrature weights (area units) for every node."""
        w1 = np.full(self.nx, self.dx1)
        w1[[0, -1]] *= 0.5
        w2 = np.full(self.ny, self.dx2)
        w2[[0, -1]] *= 0.5
        return np.outer(w2, w1)

    def contains(self, other: "Grid2D", rtol=1e-12):
        tol = rtol * max(abs(self.x1_max - self.x1_min), abs(self.x2_max - self.x2_min))
        return (
            other.x1_min >= self.x1_min - tol
            and other.x1_max <= self.x1_max + tol
            and other.x2_min >= self.x2_min - tol
            and other.x2_max <= self.x2_max + tol
        )


@dataclass(frozen=True)
class DirectionSet:
    """``M`` equally spaced unit vectors on the circle with equal weights."""

    M: int

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("need at least one direction")

    @property
    def angles(self):
        return np.arange(self.M) * (2.0 * np.pi / self.M)

    @property
    def weight(self):
        return 2.0 * np.pi / self.M

    @property
    def cos(self):
        return _snap(np.cos(self.angles))

    @property
    def sin(self):
        return _snap(np.sin(self.angles))

    @property
    def vectors(self):
        return np.stack([self.cos, self.sin], axis=1)


def _snap(a, eps=1e-14):
    # exact zeros let the upwind stencil drop the corresponding difference term
    a = a.copy()
    a[np.abs(a) < eps] = 0.0
    return a


def _frozen(values):
    values = np.array(values, dtype=float)
    values.flags.writeable = False
    return values


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid2D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = _frozen(self.values)
        if values.shape != self.grid.shape:
            raise ValueError(f"expected shape {self.grid.shape}, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise UMBLTError("scalar field contains non-finite values")
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid, value):
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_function(cls, grid, func):
        X1, X2 = grid.mesh()
        return cls(grid, np.broadcast_to(func(X1, X2), grid.shape))

    def with_values(self, values):
        return ScalarField(self.grid, values)

    def __add__(self, other):
        return self.with_values(self.values + _vals(other))

    def __sub__(self, other):
        return self.with_values(self.values - _vals(other))

    def __mul__(self, other):
        return self.with_values(self.values * _vals(other))

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)

    def to_csv(self, path):
        write_csv(self, path)


@dataclass(frozen=True, eq=False)
class AngularField:
    grid: Grid2D
    directions: DirectionSet
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = _frozen(self.values)
        expected = (self.directions.M,) + self.grid.shape
        if values.shape != expected:
            raise ValueError(f"expected shape {expected}, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise UMBLTError("angular field contains non-finite values")
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid, directions, value):
        return cls(grid, directions, np.full((directions.M,) + grid.shape, float(value)))

    def with_values(self, values):
        return AngularField(self.grid, self.directions, values)

    def direction(self, i) -> ScalarField:
        return ScalarField(self.grid, self.values[i])

    def write_csvs(self, directory, stem="u"):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = []
        for i in range(self.directions.M):
            path = directory / f"{stem}_dir{i:02d}.csv"
            write_csv(self.direction(i), path)
            paths.append(path)
        return paths


def _vals(x):
    return x.values if isinstance(x, (ScalarField, AngularField)) else x


def angular_integrate(f: AngularField) -> ScalarField:
    """Equal-weight (periodic trapezoidal) quadrature over directions."""
    return ScalarField(f.grid, f.values.sum(axis=0) * f.directions.weight)


def _interpolator_points(source: Grid2D, target: Grid2D):
    if not source.contains(target):
        raise DomainMismatchError(
            f"target bounds {target.x1_min, target.x1_max, target.x2_min, target.x2_max} "
            f"exceed source bounds {source.x1_min, source.x1_max, source.x2_min, source.x2_max}"
        )
    X1, X2 = target.mesh()
    pts = np.stack([X2.ravel(), X1.ravel()], axis=-1)
    # clip round-off excursions so the interpolator never extrapolates
    pts[:, 0] = np.clip(pts[:, 0], source.x2_min, source.x2_max)
    pts[:, 1] = np.clip(pts[:, 1], source.x1_min, source.x1_max)
    return pts


def interpolate(f: ScalarField, target: Grid2D) -> ScalarField:
    """Bilinear resampling of ``f`` onto the nodes of ``target``."""
    if target == f.grid:
        return f
    pts = _interpolator_points(f.grid, target)
    interp = RegularGridInterpolator((f.grid.x2, f.grid.x1), f.values, method="linear")
    return ScalarField(target, interp(pts).reshape(target.shape))


def interpolate_angular(f: AngularField, target: Grid2D) -> AngularField:
    if target == f.grid:
        return f
    pts = _interpolator_points(f.grid, target)
    out = np.empty((f.directions.M,) + target.shape)
    for i in range(f.directions.M):
        interp = RegularGridInterpolator((f.grid.x2, f.grid.x1), f.values[i], method="linear")
        out[i] = interp(pts).reshape(target.shape)
    return AngularField(target, f.directions, out)


def inner(a: ScalarField, b: ScalarField) -> float:
    if a.grid != b.grid:
        raise DomainMismatchError("inner product of fields on different grids")
    return float(np.sum(a.grid.cell_weights() * a.values * b.values))


def l2_norm(f) -> float:
    """Cell-weighted discrete L2 norm of a ScalarField."""
    return float(np.sqrt(np.sum(f.grid.cell_weights() * f.values**2)))


def relative_l2_error(approx: ScalarField, truth: ScalarField) -> float:
    if approx.grid != truth.grid:
        raise DomainMismatchError("error metric needs both fields on the same grid")
    denom = l2_norm(truth)
    if denom == 0.0:
        raise UndefinedMetricError("relative error against a zero-norm reference")
    return l2_norm(approx - truth) / denom


def write_csv(f: ScalarField, path):
    g = f.grid
    header = f"{g.nx} {g.ny} {g.x1_min!r} {g.x1_max!r} {g.x2_min!r} {g.x2_max!r}"
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, f.values, fmt="%.12e", delimiter=",", header=header, comments="# ")


def read_csv(path) -> ScalarField:
    path = Path(path)
    with path.open() as fh:
        first = fh.readline()
    if not first.startswith("#"):
        raise UMBLTError(f"{path}: missing '# nx ny x1_min x1_max x2_min x2_max' header")
    parts = first[1:].split()
    nx, ny = int(parts[0]), int(parts[1])
    bounds = [float(p) for p in parts[2:6]]
    values = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    return ScalarField(Grid2D(nx, ny, *bounds), values)
