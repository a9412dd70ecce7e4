"""Neumann-series and Galerkin (Fredholm) reconstruction of the source."""

from __future__ import annotations

import hashlib
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DivergenceError, DomainMismatchError, RankDeficiencyWarning
from .functional import InternalFunctional, op_M, perturbation, perturbation_batch
from .grid import AngularField, Grid2D, ScalarField, l2_norm
from .medium import OpticalMedium
from .transport import SolverSettings

__all__ = [
    "ReconstructionResult",
    "BasisSet",
    "evaluate_basis",
    "basis_matrix",
    "basis_columns",
    "neumann_invert",
    "fredholm_invert",
    "fixed_point_residual",
]

log = logging.getLogger(__name__)


@dataclass
class ReconstructionResult:
    source: ScalarField
    iterations_or_rank: int
    residual_history: list
    converged: bool
    method: str
    coefficients: Optional[np.ndarray] = field(default=None, repr=False)
    gram_residual: Optional[float] = None
    effective_rank: Optional[int] = None
    basis_size: Optional[int] = None


def neumann_invert(
    H: InternalFunctional,
    v0: AngularField,
    m: OpticalMedium,
    tol=1e-6,
    max_iter=200,
    alternating=True,
    settings: SolverSettings = None,
    divergence_factor=1e3,
    relative=True,
) -> ReconstructionResult:
    """Sum the Neumann series of ``(Id + P)^-1`` applied to ``M[H]``.

    Each correction is ``dS <- -P[dS]``; ``alternating=False`` drops the
    minus sign (the update as it is sometimes printed), which only converges
    to the right answer when ``P`` vanishes.  Iteration stops once the
    cell-weighted L2 norm of the correction is at most ``tol``, measured
    against ``|M[H]|`` unless ``relative=False``.
    """
    if H.grid != m.grid:
        raise DomainMismatchError("measurement and medium live on different grids")
    rhs = op_M(H.h, v0)
    ref = l2_norm(rhs)
    sign = -1.0 if alternating else 1.0
    threshold = tol * ref if relative else tol
    S = np.zeros(m.grid.shape)
    dS = rhs
    history = []
    steps = 0
    while True:
        size = l2_norm(dS)
        history.append(size)
        if size <= threshold:
            break
        if ref > 0 and size > divergence_factor * ref:
            raise DivergenceError(
                f"Neumann corrections grew to {size:.3e} (> {divergence_factor:g} x |M[H]|)",
                residual=size,
                result=_neumann_result(m, S, steps, history, False),
            )
        if steps >= max_iter:
            raise DivergenceError(
                f"Neumann series not converged after {max_iter} corrections (|dS| = {size:.3e})",
                residual=size,
                result=_neumann_result(m, S, steps, history, False),
            )
        S = S + dS.values
        steps += 1
        dS = perturbation(dS, v0, m, settings) * sign
        log.debug("neumann step %d: |dS| = %.3e", steps, l2_norm(dS))
    return _neumann_result(m, S, steps, history, True)


def _neumann_result(m, S, steps, history, converged):
    return ReconstructionResult(ScalarField(m.grid, S), steps, list(history), converged, "neumann")


def fixed_point_residual(result: ReconstructionResult, H: InternalFunctional, v0, m, settings=None):
    """``|T[S_rec] - M[H]| / |M[H]|`` for a reconstructed source."""
    rhs = op_M(H.h, v0)
    Ts = result.source + perturbation(result.source, v0, m, settings)
    return l2_norm(Ts - rhs) / l2_norm(rhs)


@dataclass(frozen=True)
class BasisSet:
    """Monomials of total degree ``<= poly_degree`` plus tent-shaped pyramids.

    Pyramid ``(i, j)`` peaks at ``(i/n, j/n)`` in coordinates normalised to
    the unit square, with ``n = pyramid_divisions``.  ``domain`` is
    ``(x1_min, x1_max, x2_min, x2_max)``; ``None`` uses the evaluation grid.
    """

    poly_degree: int = 10
    pyramid_divisions: int = 20
    use_polynomials: bool = True
    use_pyramids: bool = True
    domain: Optional[tuple] = None

    def polynomial_exponents(self):
        if not self.use_polynomials:
            return []
        # graded lexicographic, x1 before x2
        return [(d - j, j) for d in range(self.poly_degree + 1) for j in range(d + 1)]

    def pyramid_vertices(self):
        if not self.use_pyramids:
            return []
        n = self.pyramid_divisions
        return [(i, j) for i in range(n + 1) for j in range(n + 1)]

    def __len__(self):
        return len(self.polynomial_exponents()) + len(self.pyramid_vertices())

    def labels(self):
        return [f"x1^{i} x2^{j}" for i, j in self.polynomial_exponents()] + [
            f"pyramid({i},{j})" for i, j in self.pyramid_vertices()
        ]

    def key(self):
        return repr((self.poly_degree, self.pyramid_divisions, self.use_polynomials, self.use_pyramids, self.domain))


def _normalised_coords(basis: BasisSet, grid: Grid2D):
    if basis.domain is None:
        lo1, hi1, lo2, hi2 = grid.x1_min, grid.x1_max, grid.x2_min, grid.x2_max
    else:
        lo1, hi1, lo2, hi2 = basis.domain
        if not Grid2D(2, 2, lo1, hi1, lo2, hi2).contains(grid):
            raise DomainMismatchError("grid extends outside the basis domain")
    X1, X2 = grid.mesh()
    return (X1 - lo1) / (hi1 - lo1), (X2 - lo2) / (hi2 - lo2)


def basis_matrix(basis: BasisSet, grid: Grid2D) -> np.ndarray:
    """All basis functions sampled on ``grid`` as an ``(n_basis, ny, nx)`` array."""
    t1, t2 = _normalised_coords(basis, grid)
    out = []
    for i, j in basis.polynomial_exponents():
        out.append(t1**i * t2**j)
    n = basis.pyramid_divisions
    for i, j in basis.pyramid_vertices():
        r = np.maximum(np.abs(n * t1 - i), np.abs(n * t2 - j))
        out.append(np.maximum(1.0 - r, 0.0))
    if not out:
        return np.zeros((0,) + grid.shape)
    return np.stack(out)


def evaluate_basis(basis: BasisSet, grid: Grid2D) -> list:
    return [ScalarField(grid, b) for b in basis_matrix(basis, grid)]


_COLUMN_CACHE: dict = {}


def _column_key(basis, v0, m, settings):
    h = hashlib.sha256()
    h.update(m.fingerprint().encode())
    h.update(np.ascontiguousarray(v0.values).tobytes())
    h.update(basis.key().encode())
    s = settings or SolverSettings()
    h.update(repr((s.tolerance, s.max_iterations, s.damping)).encode())
    return h.hexdigest()


def basis_columns(basis: BasisSet, v0: AngularField, m: OpticalMedium, settings=None, cache_dir=None):
    """``T[b_i]`` for every basis function, cached in memory and optionally on disk."""
    key = _column_key(basis, v0, m, settings)
    if key in _COLUMN_CACHE:
        return _COLUMN_CACHE[key]
    path = Path(cache_dir) / f"columns-{key[:24]}.npy" if cache_dir else None
    if path is not None and path.exists():
        cols = np.load(path)
    else:
        b = basis_matrix(basis, m.grid)
        log.info("computing %d basis columns on a %dx%d grid", len(b), m.grid.nx, m.grid.ny)
        cols = b + perturbation_batch(b, v0, m, settings)
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            np.save(path, cols)
    cols.flags.writeable = False
    _COLUMN_CACHE[key] = cols
    return cols


def fredholm_invert(
    H: InternalFunctional,
    v0: AngularField,
    m: OpticalMedium,
    basis: BasisSet = None,
    svd_rtol=1e-10,
    settings: SolverSettings = None,
    cache_dir=None,
) -> ReconstructionResult:
    """Galerkin solve of ``T[S] = M[H]`` in the span of ``basis``.

    The Gram system ``<T b_i, T b_j> c = <M[H], T b_j>`` is solved by
    truncated SVD, discarding singular values below ``svd_rtol`` times the
    largest one.
    """
    basis = basis or BasisSet()
    if H.grid != m.grid:
        raise DomainMismatchError("measurement and medium live on different grids")
    b = basis_matrix(basis, m.grid)
    cols = basis_columns(basis, v0, m, settings, cache_dir)
    w = m.grid.cell_weights()
    rhs = op_M(H.h, v0).values
    flat = cols.reshape(len(cols), -1)
    weighted = flat * w.ravel()
    gram = weighted @ flat.T
    r = weighted @ rhs.ravel()
    U, s, Vt = np.linalg.svd(gram)
    keep = s > svd_rtol * s[0] if s.size and s[0] > 0 else np.zeros_like(s, dtype=bool)
    rank = int(keep.sum())
    coef = Vt[keep].T @ ((U[:, keep].T @ r) / s[keep])
    gram_residual = float(np.linalg.norm(gram @ coef - r))
    if rank < len(s):
        warnings.warn(
            f"Gram matrix truncated to effective rank {rank} of {len(s)}",
            RankDeficiencyWarning,
            stacklevel=2,
        )
    source = ScalarField(m.grid, np.tensordot(coef, b, axes=1))
    return ReconstructionResult(
        source,
        rank,
        [gram_residual],
        True,
        "fredholm",
        coefficients=coef,
        gram_residual=gram_residual,
        effective_rank=rank,
        basis_size=len(s),
    )
