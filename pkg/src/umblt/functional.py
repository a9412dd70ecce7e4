"""The internal functional and the operators of the reconstruction equation.

With ``v0`` an adjoint solution, a measured functional ``H`` satisfies

    M[H] = S + M[K[S_op[S]]]

where ``S_op`` maps a source to its zero-inflow transport solution, ``K``
integrates ``A u * v0`` over directions and ``M`` divides by the angular
integral of ``v0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainMismatchError, PositivityError
from .grid import AngularField, ScalarField, angular_integrate
from .medium import OpticalMedium
from .transport import SolverSettings, solve_forward, solve_forward_batch

__all__ = [
    "InternalFunctional",
    "apply_A",
    "internal_functional",
    "internal_functional_gradient_form",
    "op_S",
    "op_K",
    "op_M",
    "op_M_inverse",
    "forward_map_T",
    "perturbation",
    "perturbation_batch",
    "boundary_integral",
    "volume_integral",
    "modulated_boundary_functional",
    "fourier_moment",
]


@dataclass(frozen=True)
class InternalFunctional:
    h: ScalarField
    v0_meta: dict = field(default_factory=dict)

    @property
    def grid(self):
        return self.h.grid


def _check(u: AngularField, m: OpticalMedium):
    if u.grid != m.grid or u.directions != m.directions:
        raise DomainMismatchError("angular field and medium live on different grids")


def _apply_A_values(u, m: OpticalMedium):
    scat = np.einsum("ij,...jyx->...iyx", m.kernel, u, optimize=True)
    return m.scale_values() * scat - m.sigma.values * u


def apply_A(u: AngularField, m: OpticalMedium) -> AngularField:
    """``-sigma u + int k u dtheta'`` evaluated with the medium's quadrature."""
    _check(u, m)
    return u.with_values(_apply_A_values(u.values, m))


def internal_functional(u: AngularField, v0: AngularField, S: ScalarField, m: OpticalMedium, meta=None):
    _check(u, m)
    _check(v0, m)
    integrand = v0.values * (_apply_A_values(u.values, m) + S.values[None])
    h = ScalarField(m.grid, integrand.sum(axis=0) * m.directions.weight)
    return InternalFunctional(h, dict(meta or {}))


def internal_functional_gradient_form(u: AngularField, v0: AngularField) -> ScalarField:
    """``int v0 theta.grad u dtheta`` with second-order central differences.

    Independent of the solver's upwind stencil; agrees with
    :func:`internal_functional` only up to discretization error.
    """
    g, d = u.grid, u.directions
    du2, du1 = np.gradient(u.values, g.dx2, g.dx1, axis=(1, 2))
    deriv = d.cos[:, None, None] * du1 + d.sin[:, None, None] * du2
    return ScalarField(g, (v0.values * deriv).sum(axis=0) * d.weight)


def op_S(S: ScalarField, m: OpticalMedium, settings: SolverSettings = None) -> AngularField:
    return solve_forward(m, S, 0.0, settings).field


def op_K(u: AngularField, v0: AngularField, m: OpticalMedium) -> ScalarField:
    _check(u, m)
    _check(v0, m)
    vals = (_apply_A_values(u.values, m) * v0.values).sum(axis=0) * m.directions.weight
    return ScalarField(m.grid, vals)


def _v0_integral(v0: AngularField):
    denom = angular_integrate(v0).values
    if denom.min() <= 0:
        raise PositivityError(f"angular integral of v0 must be positive, min is {denom.min():.3e}")
    return denom


def op_M(f: ScalarField, v0: AngularField) -> ScalarField:
    if f.grid != v0.grid:
        raise DomainMismatchError("field and weight live on different grids")
    return f.with_values(f.values / _v0_integral(v0))


def op_M_inverse(f: ScalarField, v0: AngularField) -> ScalarField:
    if f.grid != v0.grid:
        raise DomainMismatchError("field and weight live on different grids")
    return f.with_values(f.values * _v0_integral(v0))


def perturbation(S: ScalarField, v0: AngularField, m: OpticalMedium, settings=None) -> ScalarField:
    """``M[K[S_op[S]]]``, the compact part of the reconstruction operator."""
    return op_M(op_K(op_S(S, m, settings), v0, m), v0)


def perturbation_batch(sources, v0: AngularField, m: OpticalMedium, settings=None):
    """:func:`perturbation` applied to each ``(ny, nx)`` slice of ``sources``."""
    _check(v0, m)
    u, _ = solve_forward_batch(m, sources, settings)
    kv = (_apply_A_values(u, m) * v0.values[None]).sum(axis=1) * m.directions.weight
    return kv / _v0_integral(v0)[None]


def forward_map_T(S: ScalarField, v0: AngularField, m: OpticalMedium, settings=None) -> ScalarField:
    return S + perturbation(S, v0, m, settings)


def _face_weights(n, h):
    w = np.full(n, h)
    w[[0, -1]] *= 0.5
    return w


def boundary_integral(f: AngularField, weight: AngularField) -> float:
    """``sum_i sum_boundary f w (n.theta_i) dw ds`` with face-wise trapezoidal weights."""
    g, d = f.grid, f.directions
    prod = f.values * weight.values
    w1 = _face_weights(g.nx, g.dx1)
    w2 = _face_weights(g.ny, g.dx2)
    total = 0.0
    # faces: left (n=-e1), right (n=+e1), bottom (n=-e2), top (n=+e2)
    total += np.sum(-d.cos[:, None] * prod[:, :, 0] * w2)
    total += np.sum(d.cos[:, None] * prod[:, :, -1] * w2)
    total += np.sum(-d.sin[:, None] * prod[:, 0, :] * w1)
    total += np.sum(d.sin[:, None] * prod[:, -1, :] * w1)
    return float(total * d.weight)


def volume_integral(f: ScalarField) -> float:
    return float(np.sum(f.grid.cell_weights() * f.values))


def modulated_boundary_functional(u_eps: AngularField, u0: AngularField, v: AngularField) -> float:
    if not (u_eps.grid == u0.grid == v.grid):
        raise DomainMismatchError("boundary functional needs all fields on one grid")
    return boundary_integral(u_eps.with_values(u_eps.values - u0.values), v)


def fourier_moment(H: ScalarField, q, phase=0.0) -> float:
    """``int cos(q.x + phase) H(x) dx`` by the trapezoidal rule."""
    X1, X2 = H.grid.mesh()
    wave = np.cos(q[0] * X1 + q[1] * X2 + phase)
    return float(np.sum(H.grid.cell_weights() * wave * H.values))
