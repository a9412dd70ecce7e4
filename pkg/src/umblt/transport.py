"""Discrete-ordinates upwind solvers for the forward, adjoint and modulated RTE.

Every direction of every node carries one unknown.  A boundary node takes the
prescribed boundary value for direction ``theta`` when ``theta`` points into
the domain through one of its faces or runs tangentially along it; all other
nodes satisfy the upwind-differenced transport equation.  The coupled system
is solved with Jacobi sweeps.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _backend
from .errors import DivergenceError, WellPosednessWarning
from .grid import AngularField, DirectionSet, Grid2D, ScalarField
from .medium import OpticalMedium, check_wellposedness

__all__ = [
    "SolverSettings",
    "TransportSolution",
    "inflow_mask",
    "solve_forward",
    "solve_forward_batch",
    "solve_adjoint",
    "solve_modulated",
    "modulation_factor",
]


@dataclass(frozen=True)
class SolverSettings:
    tolerance: float = 1e-10
    max_iterations: int = 50_000
    damping: float = 1.0
    backend: Optional[str] = None

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")


@dataclass(frozen=True)
class TransportSolution:
    field: AngularField
    iterations: int
    final_residual: float
    converged: bool


def inflow_mask(grid: Grid2D, directions: DirectionSet, reverse=False):
    """Boolean ``(M, ny, nx)`` mask of nodes that take boundary data.

    With ``reverse=True`` the advection direction is ``-theta`` (adjoint
    problem), so the mask marks the outgoing boundary of the forward problem.
    """
    sign = -1.0 if reverse else 1.0
    c = sign * directions.cos
    s = sign * directions.sin
    mask = np.zeros((directions.M,) + grid.shape, dtype=bool)
    for i in range(directions.M):
        if c[i] >= 0:
            mask[i, :, 0] = True
        if c[i] <= 0:
            mask[i, :, -1] = True
        if s[i] >= 0:
            mask[i, 0, :] = True
        if s[i] <= 0:
            mask[i, -1, :] = True
    return mask


def _assemble(m: OpticalMedium, reverse: bool):
    grid, dirs = m.grid, m.directions
    sign = -1.0 if reverse else 1.0
    c = sign * dirs.cos
    s = sign * dirs.sin
    ax = np.abs(c) / grid.dx1
    ay = np.abs(s) / grid.dx2
    K = m.kernel.T if reverse else m.kernel
    scale = m.scale_values()
    diag = ax[:, None, None] + ay[:, None, None] + m.sigma.values[None] - scale[None] * np.diag(K)[:, None, None]
    koff = K - np.diag(np.diag(K))
    return dict(
        ax=ax,
        ay=ay,
        sx=np.sign(c).astype(np.intc),
        sy=np.sign(s).astype(np.intc),
        diag=diag,
        koff=np.ascontiguousarray(koff),
        scale=np.ascontiguousarray(scale),
        fixed=inflow_mask(grid, dirs, reverse),
    )


def _boundary_values(bc, m: OpticalMedium):
    shape = (m.directions.M,) + m.grid.shape
    if isinstance(bc, AngularField):
        return bc.values
    return np.broadcast_to(np.asarray(bc, dtype=float), shape)


def _warn_if_illposed(m: OpticalMedium):
    report = check_wellposedness(m)
    if not (report.x1_holds or report.x2_holds):
        warnings.warn(
            f"neither well-posedness condition holds ({report.summary()}); proceeding",
            WellPosednessWarning,
            stacklevel=3,
        )


def _solve(m, sources, bc, reverse, settings):
    settings = settings or SolverSettings()
    ops = _assemble(m, reverse)
    sources = np.asarray(sources, dtype=float)
    B = sources.shape[0]
    u0 = np.zeros((B, m.directions.M) + m.grid.shape)
    bcv = _boundary_values(bc, m)
    u0[:, ops["fixed"]] = bcv[ops["fixed"]]
    u, it, resid = _backend.jacobi_solve(
        u0,
        sources,
        ops["diag"],
        ops["scale"],
        ops["koff"],
        ops["ax"],
        ops["ay"],
        ops["sx"],
        ops["sy"],
        ops["fixed"],
        settings.tolerance,
        settings.max_iterations,
        settings.damping,
        backend=settings.backend,
    )
    if not np.all(np.isfinite(u)):
        raise DivergenceError("transport iterate became non-finite", residual=float("inf"))
    if not resid <= settings.tolerance:
        raise DivergenceError(
            f"Jacobi iteration did not reach tolerance {settings.tolerance:g} in "
            f"{settings.max_iterations} sweeps (last relative update {resid:.3e})",
            residual=resid,
        )
    return u, it, resid


def solve_forward(
    m: OpticalMedium, S: ScalarField, inflow=0.0, settings: SolverSettings = None
) -> TransportSolution:
    """Solve ``theta.grad u + sigma u - K u = S`` with ``u = inflow`` on the incoming boundary."""
    if S.grid != m.grid:
        raise ValueError("source and medium must share a grid")
    _warn_if_illposed(m)
    u, it, resid = _solve(m, S.values[None], inflow, False, settings)
    return TransportSolution(AngularField(m.grid, m.directions, u[0]), it, resid, True)


def solve_forward_batch(m: OpticalMedium, sources, settings: SolverSettings = None, chunk=64):
    """Zero-inflow forward solves for a stack of isotropic sources ``(B, ny, nx)``.

    Returns the ``(B, M, ny, nx)`` solutions and the largest sweep count used.
    """
    sources = np.asarray(sources, dtype=float)
    out = np.empty((sources.shape[0], m.directions.M) + m.grid.shape)
    iters = 0
    for start in range(0, sources.shape[0], chunk):
        u, it, _ = _solve(m, sources[start : start + chunk], 0.0, False, settings)
        out[start : start + chunk] = u
        iters = max(iters, it)
    return out, iters


def solve_adjoint(m: OpticalMedium, outflow=1.0, settings: SolverSettings = None) -> TransportSolution:
    """Solve ``-theta.grad v + sigma v - K^T v = 0`` with ``v = outflow`` on the outgoing boundary."""
    _warn_if_illposed(m)
    zero = np.zeros((1,) + m.grid.shape)
    v, it, resid = _solve(m, zero, outflow, True, settings)
    return TransportSolution(AngularField(m.grid, m.directions, v[0]), it, resid, True)


def modulation_factor(grid: Grid2D, eps, q, phase) -> ScalarField:
    """``1 + eps cos(q.x + phase)`` sampled on the grid."""
    q1, q2 = (float(v) for v in q)
    return ScalarField.from_function(grid, lambda x1, x2: 1.0 + eps * np.cos(q1 * x1 + q2 * x2 + phase))


def solve_modulated(
    m: OpticalMedium, S: ScalarField, eps, q, phase=0.0, settings: SolverSettings = None
) -> TransportSolution:
    """Forward solve with attenuation, kernel and source all modulated by the acoustic factor."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"modulation amplitude must lie in [0, 1], got {eps}")
    factor = modulation_factor(m.grid, eps, q, phase)
    return solve_forward(m.modulated(factor), S * factor, 0.0, settings)
