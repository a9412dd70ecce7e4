"""Sources and coefficient fields used in the experiments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import convolve1d

from .errors import ConfigError
from .grid import Grid2D, ScalarField

__all__ = ["PhantomSpec", "render", "gaussian_smooth", "gaussian_kernel", "SHEPP_LOGAN_ELLIPSES"]

# intensity, semi-axis a, semi-axis b, centre x, centre y, rotation (degrees)
SHEPP_LOGAN_ELLIPSES = (
    (1.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0),
    (-0.98, 0.6624, 0.8740, 0.00, -0.0184, 0.0),
    (-0.02, 0.1100, 0.3100, 0.22, 0.0000, -18.0),
    (-0.02, 0.1600, 0.4100, -0.22, 0.0000, 18.0),
    (0.01, 0.2100, 0.2500, 0.00, 0.3500, 0.0),
    (0.01, 0.0460, 0.0460, 0.00, 0.1000, 0.0),
    (0.01, 0.0460, 0.0460, 0.00, -0.1000, 0.0),
    (0.01, 0.0460, 0.0230, -0.08, -0.6050, 0.0),
    (0.01, 0.0230, 0.0230, 0.00, -0.6060, 0.0),
    (0.01, 0.0230, 0.0460, 0.06, -0.6050, 0.0),
)

KINDS = ("gaussian", "shepp_logan", "smoothed_shepp_logan", "affine", "constant")


@dataclass(frozen=True)
class PhantomSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown phantom kind {self.kind!r}; expected one of {KINDS}")

    @classmethod
    def from_config(cls, entry):
        """Parse ``{kind: params}`` (params may be omitted or ``true``)."""
        if isinstance(entry, str):
            return cls(entry)
        items = {k: v for k, v in entry.items() if k != "name"}
        if len(items) != 1:
            raise ConfigError(f"phantom entry needs exactly one kind key, got {sorted(items)}")
        (kind, params), = items.items()
        if params is True or params is None:
            params = {}
        if kind == "affine" and isinstance(params, list):
            params = {"coefficients": params}
        if kind == "constant" and not isinstance(params, dict):
            params = {"value": params}
        return cls(kind, dict(params))


def _gaussian(params, X1, X2):
    c1, c2 = (float(c) for c in params.get("center", (0.5, 0.5)))
    if "rate" in params:
        rate = float(params["rate"])
    elif "width" in params:
        rate = 1.0 / float(params["width"]) ** 2
    else:
        raise ConfigError("gaussian phantom needs 'rate' or 'width'")
    return np.exp(-rate * ((X1 - c1) ** 2 + (X2 - c2) ** 2))


def _shepp_logan(grid: Grid2D):
    X1, X2 = grid.mesh()
    # map the domain onto the phantom's [-1, 1]^2 frame
    px = 2.0 * (X1 - grid.x1_min) / (grid.x1_max - grid.x1_min) - 1.0
    py = 2.0 * (X2 - grid.x2_min) / (grid.x2_max - grid.x2_min) - 1.0
    out = np.zeros(grid.shape)
    for value, a, b, cx, cy, deg in SHEPP_LOGAN_ELLIPSES:
        t = math.radians(deg)
        dx, dy = px - cx, py - cy
        xr = dx * math.cos(t) + dy * math.sin(t)
        yr = -dx * math.sin(t) + dy * math.cos(t)
        out[(xr / a) ** 2 + (yr / b) ** 2 <= 1.0] += value
    return np.clip(out, 0.0, None)


def render(spec: PhantomSpec, grid: Grid2D, pixel=None) -> ScalarField:
    """Sample ``spec`` on ``grid``.

    ``pixel`` is the length of one pixel for smoothing widths given in
    pixels; it defaults to the spacing of ``grid`` itself.
    """
    X1, X2 = grid.mesh()
    p = spec.params
    if spec.kind == "gaussian":
        return ScalarField(grid, _gaussian(p, X1, X2))
    if spec.kind == "shepp_logan":
        return ScalarField(grid, _shepp_logan(grid))
    if spec.kind == "smoothed_shepp_logan":
        std = float(p.get("std", 3.0))
        if pixel is not None:
            std *= pixel / grid.dx1
        return gaussian_smooth(ScalarField(grid, _shepp_logan(grid)), std)
    if spec.kind == "affine":
        c0, c1, c2 = (float(c) for c in p["coefficients"])
        return ScalarField(grid, c0 + c1 * X1 + c2 * X2)
    return ScalarField.constant(grid, float(p.get("value", 1.0)))


def gaussian_kernel(std_pixels):
    radius = int(math.ceil(4.0 * std_pixels))
    x = np.arange(-radius, radius + 1, dtype=float)
    k = np.exp(-0.5 * (x / std_pixels) ** 2)
    return k / k.sum()


def gaussian_smooth(f: ScalarField, std_pixels) -> ScalarField:
    """Truncated Gaussian blur, renormalised over the part of the kernel inside the grid."""
    if not std_pixels > 0:
        raise ValueError("smoothing std must be positive")
    k = gaussian_kernel(std_pixels)

    def blur(a):
        a = convolve1d(a, k, axis=0, mode="constant", cval=0.0)
        return convolve1d(a, k, axis=1, mode="constant", cval=0.0)

    mass = blur(np.ones(f.grid.shape))
    return f.with_values(blur(f.values) / mass)
