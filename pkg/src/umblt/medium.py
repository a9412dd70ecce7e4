"""Optical coefficients, the Henyey-Greenstein kernel and condition audits."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, PositivityError, SingularKernelError
from .grid import AngularField, DirectionSet, Grid2D, ScalarField, angular_integrate, interpolate, read_csv

__all__ = [
    "hg_kernel",
    "OpticalMedium",
    "WellPosednessReport",
    "ContractionAudit",
    "scattering_bound_rho",
    "check_wellposedness",
    "contraction_audit",
    "medium_from_spec",
]


def hg_kernel(g, phi):
    """Henyey-Greenstein density on the circle for the angle ``phi`` between directions."""
    g = float(g)
    if abs(g) >= 1.0:
        if abs(g) == 1.0:
            raise SingularKernelError("|g| = 1 makes the Henyey-Greenstein kernel a delta")
        raise ValueError(f"anisotropy must lie in (-1, 1), got {g}")
    return (1.0 - g * g) / (1.0 + g * g - 2.0 * g * np.cos(phi)) / (2.0 * np.pi)


@dataclass(frozen=True, eq=False)
class OpticalMedium:
    """Attenuation field plus a rotation-invariant scattering kernel.

    ``kernel`` is the quadrature matrix ``K[i, j] = k(theta_i, theta_j) * dw``.
    ``kernel_scale`` optionally multiplies the kernel pointwise in space (used
    for acoustic modulation); ``None`` means 1 everywhere.
    """

    sigma: ScalarField
    directions: DirectionSet
    kernel: np.ndarray = field(repr=False)
    g: Optional[float] = None
    kernel_scale: Optional[ScalarField] = field(default=None, repr=False)

    def __post_init__(self):
        K = np.array(self.kernel, dtype=float)
        M = self.directions.M
        if K.shape != (M, M):
            raise ValueError(f"kernel matrix must be {M}x{M}, got {K.shape}")
        if np.any(K < 0):
            raise ValueError("scattering kernel must be non-negative")
        if np.any(self.sigma.values < 0):
            raise ValueError("attenuation must be non-negative")
        K.flags.writeable = False
        object.__setattr__(self, "kernel", K)
        if self.kernel_scale is not None:
            if self.kernel_scale.grid != self.sigma.grid:
                raise ValueError("kernel_scale must live on the attenuation grid")
            if np.any(self.kernel_scale.values < 0):
                raise ValueError("kernel scale must be non-negative")

    @classmethod
    def henyey_greenstein(cls, sigma: ScalarField, directions: DirectionSet, g: float):
        w = directions.angles
        K = hg_kernel(g, w[:, None] - w[None, :]) * directions.weight
        return cls(sigma, directions, K, g=float(g))

    @classmethod
    def tabulated(cls, sigma: ScalarField, directions: DirectionSet, k_table):
        """Kernel given as density samples ``k(theta_i, theta_j)`` (no quadrature weight)."""
        return cls(sigma, directions, np.asarray(k_table, dtype=float) * directions.weight)

    @classmethod
    def non_scattering(cls, sigma: ScalarField, directions: DirectionSet):
        return cls(sigma, directions, np.zeros((directions.M, directions.M)))

    @property
    def grid(self) -> Grid2D:
        return self.sigma.grid

    def scale_values(self):
        if self.kernel_scale is None:
            return np.ones(self.grid.shape)
        return self.kernel_scale.values

    def on_grid(self, grid: Grid2D) -> "OpticalMedium":
        """Same medium with its spatial fields resampled onto ``grid``."""
        if grid == self.grid:
            return self
        scale = None if self.kernel_scale is None else interpolate(self.kernel_scale, grid)
        return OpticalMedium(interpolate(self.sigma, grid), self.directions, self.kernel, self.g, scale)

    def modulated(self, factor: ScalarField) -> "OpticalMedium":
        """Multiply both attenuation and kernel by a spatial factor."""
        scale = factor.values * self.scale_values()
        return OpticalMedium(
            self.sigma * factor, self.directions, self.kernel, self.g, ScalarField(self.grid, scale)
        )

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        g = self.grid
        h.update(repr((g.nx, g.ny, g.x1_min, g.x1_max, g.x2_min, g.x2_max, self.directions.M)).encode())
        h.update(np.ascontiguousarray(self.sigma.values).tobytes())
        h.update(np.ascontiguousarray(self.kernel).tobytes())
        h.update(np.ascontiguousarray(self.scale_values()).tobytes())
        return h.hexdigest()


def scattering_bound_rho(m: OpticalMedium) -> float:
    """Largest discrete scattering row sum over all nodes and directions."""
    row = m.kernel.sum(axis=1).max()
    return float(row * m.scale_values().max())


@dataclass(frozen=True)
class WellPosednessReport:
    rho: float
    inf_sigma: float
    alpha: float
    x1_holds: bool
    diameter: float
    diam_rho: float
    x2_holds: bool

    def summary(self):
        return (
            f"rho={self.rho:.6g} inf_sigma={self.inf_sigma:.6g} alpha={self.alpha:.6g} "
            f"X1={'holds' if self.x1_holds else 'fails'} diam*rho={self.diam_rho:.6g} "
            f"X2={'holds' if self.x2_holds else 'fails'}"
        )


def check_wellposedness(m: OpticalMedium) -> WellPosednessReport:
    rho = scattering_bound_rho(m)
    inf_sigma = float(m.sigma.values.min())
    alpha = inf_sigma - rho
    diam = m.grid.diameter()
    return WellPosednessReport(
        rho=rho,
        inf_sigma=inf_sigma,
        alpha=alpha,
        x1_holds=alpha > 0,
        diameter=diam,
        diam_rho=diam * rho,
        x2_holds=diam * rho < 1,
    )


@dataclass(frozen=True)
class ContractionAudit:
    bound_x1: float
    bound_x2: float
    neumann_guaranteed: bool
    v0_sup: float
    v0_integral_inf: float
    sigma_sup: float
    wellposedness: WellPosednessReport

    def summary(self):
        return (
            f"|v0|_C={self.v0_sup:.6g} inf_int_v0={self.v0_integral_inf:.6g} "
            f"bound_x1={self.bound_x1:.6g} bound_x2={self.bound_x2:.6g} "
            f"neumann_guaranteed={self.neumann_guaranteed}"
        )


def contraction_audit(m: OpticalMedium, v0: AngularField) -> ContractionAudit:
    """Evaluate both operator-norm bounds for the Neumann perturbation operator."""
    if v0.values.min() <= 0:
        raise PositivityError(f"v0 must be strictly positive, min is {v0.values.min():.3e}")
    report = check_wellposedness(m)
    v0_sup = float(v0.values.max())
    int_inf = float(angular_integrate(v0).values.min())
    sigma_sup = float(np.abs(m.sigma.values).max())
    vol = m.directions.weight * m.directions.M
    numerator = v0_sup * (sigma_sup + report.rho) * vol
    bound_x1 = numerator / (report.alpha * int_inf) if report.x1_holds else math.inf
    if report.x2_holds:
        bound_x2 = numerator * report.diameter / ((1.0 - report.diam_rho) * int_inf)
    else:
        bound_x2 = math.inf
    return ContractionAudit(
        bound_x1=bound_x1,
        bound_x2=bound_x2,
        neumann_guaranteed=report.x2_holds and bound_x2 < 1.0,
        v0_sup=v0_sup,
        v0_integral_inf=int_inf,
        sigma_sup=sigma_sup,
        wellposedness=report,
    )


def _sigma_from_spec(spec, grid):
    if isinstance(spec, (int, float)):
        return ScalarField.constant(grid, spec)
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ConfigError(f"sigma spec must have exactly one key, got {spec!r}")
    (kind, value), = spec.items()
    if kind == "affine":
        c0, c1, c2 = (float(c) for c in value)
        return ScalarField.from_function(grid, lambda x1, x2: c0 + c1 * x1 + c2 * x2)
    if kind == "constant":
        return ScalarField.constant(grid, value)
    if kind == "csv":
        return interpolate(read_csv(value), grid)
    raise ConfigError(f"unknown sigma kind {kind!r}")


def medium_from_spec(spec: dict, grid: Grid2D, directions: DirectionSet) -> OpticalMedium:
    """Build a medium from ``{"sigma": {...}, "kernel": {...}}`` config tables."""
    try:
        sigma = _sigma_from_spec(spec["sigma"], grid)
    except KeyError:
        raise ConfigError("medium spec needs a 'sigma' entry") from None
    kernel = spec.get("kernel", {"none": True})
    if not isinstance(kernel, dict) or len(kernel) != 1:
        raise ConfigError(f"kernel spec must have exactly one key, got {kernel!r}")
    (kind, value), = kernel.items()
    if kind == "hg":
        return OpticalMedium.henyey_greenstein(sigma, directions, float(value))
    if kind == "none":
        return OpticalMedium.non_scattering(sigma, directions)
    raise ConfigError(f"unknown kernel kind {kind!r}")
