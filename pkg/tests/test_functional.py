import math

import numpy as np
import pytest

from umblt.errors import DomainMismatchError, PositivityError
from umblt.functional import (
    apply_A,
    boundary_integral,
    forward_map_T,
    fourier_moment,
    internal_functional,
    internal_functional_gradient_form,
    modulated_boundary_functional,
    op_K,
    op_M,
    op_M_inverse,
    op_S,
    perturbation,
    perturbation_batch,
)
from umblt.grid import AngularField, Grid2D, ScalarField
from umblt.medium import contraction_audit, scattering_bound_rho
from umblt.transport import solve_adjoint, solve_forward, solve_modulated

from conftest import hg_medium, vacuum_medium


@pytest.fixture(scope="module")
def exp1_small():
    g = Grid2D.square(31, side=0.2)
    m = hg_medium(g, ScalarField.from_function(g, lambda x, y: 0.1 + 0.1 * x))
    v0 = solve_adjoint(m, 1.0).field
    S = ScalarField.from_function(g, lambda x, y: np.exp(-100 * ((x - 0.08) ** 2 + (y - 0.12) ** 2)))
    return g, m, v0, S


def test_apply_A_examples(small_grid, dirs8):
    m = hg_medium(small_grid, ScalarField.from_function(small_grid, lambda x, y: 1 + x))
    zero = AngularField.constant(small_grid, dirs8, 0.0)
    assert np.all(apply_A(zero, m).values == 0)
    ones = AngularField.constant(small_grid, dirs8, 1.0)
    expected = -m.sigma.values + scattering_bound_rho(m)
    assert np.allclose(apply_A(ones, m).values, expected[None])
    u = AngularField(small_grid, dirs8, np.random.default_rng(0).normal(size=(8,) + small_grid.shape))
    mv = vacuum_medium(small_grid, 2.0)
    assert np.allclose(apply_A(u, mv).values, -2.0 * u.values)


def test_functional_vacuum_gives_source(small_grid):
    m = vacuum_medium(small_grid, 0.0)
    v0 = solve_adjoint(m, 1.0).field
    S = ScalarField.from_function(small_grid, lambda x, y: 1 + np.sin(3 * x) * y)
    H = internal_functional(solve_forward(m, S).field, v0, S, m)
    assert np.allclose(op_M(H.h, v0).values, S.values, rtol=1e-12)


def test_functional_zero_source(exp1_small):
    g, m, v0, _ = exp1_small
    Z = ScalarField.constant(g, 0.0)
    H = internal_functional(solve_forward(m, Z).field, v0, Z, m)
    assert np.all(H.h.values == 0.0)


def test_gradient_form_agrees():
    gaps = []
    for n in (41, 81):
        g = Grid2D.square(n)
        m = hg_medium(g, ScalarField.from_function(g, lambda x, y: 1.1 + 0.2 * x))
        S = ScalarField.from_function(g, lambda x, y: np.exp(-10 * ((x - 0.4) ** 2 + (y - 0.6) ** 2)))
        u = solve_forward(m, S).field
        v0 = solve_adjoint(m, 1.0).field
        a = internal_functional(u, v0, S, m).h.values[2:-2, 2:-2]
        b = internal_functional_gradient_form(u, v0).values[2:-2, 2:-2]
        gaps.append(np.abs(a - b).max() / np.abs(a).max())
    assert gaps[1] < gaps[0] < 0.15


def test_op_K_examples(small_grid, dirs8):
    m = vacuum_medium(small_grid, 0.7)
    ones = AngularField.constant(small_grid, dirs8, 1.0)
    u = AngularField(small_grid, dirs8, np.random.default_rng(1).normal(size=(8,) + small_grid.shape))
    assert np.allclose(op_K(u, ones, m).values, -0.7 * u.values.sum(axis=0) * dirs8.weight)
    assert np.all(op_K(AngularField.constant(small_grid, dirs8, 0.0), ones, m).values == 0)


def test_op_K_bound(exp1_small):
    g, m, v0, _ = exp1_small
    rng = np.random.default_rng(5)
    u = AngularField(g, m.directions, rng.uniform(-1, 1, size=(8,) + g.shape))
    lhs = np.abs(op_K(u, v0, m).values).max()
    rhs = v0.values.max() * (m.sigma.values.max() + scattering_bound_rho(m)) * 2 * math.pi * np.abs(u.values).max()
    assert lhs <= rhs


def test_op_M(small_grid, dirs8):
    ones = AngularField.constant(small_grid, dirs8, 1.0)
    f = ScalarField.from_function(small_grid, lambda x, y: x + 2 * y)
    assert np.allclose(op_M(f, ones).values, f.values / (2 * math.pi))
    assert np.all(op_M(ScalarField.constant(small_grid, 0.0), ones).values == 0)
    v0 = ones.with_values(np.random.default_rng(2).uniform(0.2, 2, size=ones.values.shape))
    assert np.allclose(op_M(op_M_inverse(f, v0), v0).values, f.values)
    neg = ones.with_values(-ones.values)
    with pytest.raises(PositivityError):
        op_M(f, neg)
    with pytest.raises(DomainMismatchError):
        op_M(ScalarField.constant(Grid2D.square(5), 1.0), ones)


def test_forward_map_consistency(exp1_small):
    g, m, v0, S = exp1_small
    H = internal_functional(op_S(S, m), v0, S, m)
    assert np.allclose(forward_map_T(S, v0, m).values, op_M(H.h, v0).values, rtol=1e-9, atol=1e-12)


def test_forward_map_vacuum_identity(small_grid):
    m = vacuum_medium(small_grid, 0.0)
    v0 = solve_adjoint(m, 1.0).field
    S = ScalarField.from_function(small_grid, lambda x, y: np.cos(x + y))
    assert np.allclose(forward_map_T(S, v0, m).values, S.values)
    Z = ScalarField.constant(small_grid, 0.0)
    assert np.all(forward_map_T(Z, v0, m).values == 0)


def test_operators_linear(exp1_small):
    g, m, v0, _ = exp1_small
    rng = np.random.default_rng(8)
    a = ScalarField(g, rng.normal(size=g.shape))
    b = ScalarField(g, rng.normal(size=g.shape))
    lhs = forward_map_T(a * 1.5 - b * 0.25, v0, m).values
    rhs = 1.5 * forward_map_T(a, v0, m).values - 0.25 * forward_map_T(b, v0, m).values
    assert np.allclose(lhs, rhs, atol=1e-9 * np.abs(rhs).max())


def test_batch_perturbation(exp1_small):
    g, m, v0, S = exp1_small
    stack = np.stack([S.values, 2 * S.values + 1])
    out = perturbation_batch(stack, v0, m)
    assert np.allclose(out[0], perturbation(S, v0, m).values, rtol=1e-8, atol=1e-13)


def test_operator_norm_below_audit_bound(exp1_small):
    g, m, v0, _ = exp1_small
    audit = contraction_audit(m, v0)
    rng = np.random.default_rng(11)
    stack = rng.uniform(-1, 1, size=(12,) + g.shape)
    stack[0] = 1.0
    stack /= np.abs(stack).max(axis=(1, 2), keepdims=True)
    out = perturbation_batch(stack, v0, m)
    assert np.abs(out).max() <= audit.bound_x2


def test_boundary_integral_constant(small_grid, dirs8):
    # a constant field has zero net flux through the boundary
    ones = AngularField.constant(small_grid, dirs8, 1.0)
    assert boundary_integral(ones, ones) == pytest.approx(0.0, abs=1e-12)
    # unit outflow through the right face only: side length times the positive cosines
    vals = np.zeros(ones.values.shape)
    vals[dirs8.cos > 0, :, -1] = 1.0
    expected = dirs8.cos[dirs8.cos > 0].sum() * dirs8.weight
    assert boundary_integral(ones.with_values(vals), ones) == pytest.approx(expected)


def test_fourier_moment():
    g = Grid2D.square(201)
    H = ScalarField.from_function(g, lambda x, y: np.cos(2 * np.pi * x))
    assert fourier_moment(H, (2 * np.pi, 0.0), 0.0) == pytest.approx(0.5, rel=1e-4)
    assert fourier_moment(H, (2 * np.pi, 0.0), np.pi / 2) == pytest.approx(0.0, abs=1e-10)


def test_modulated_functional_scaling_and_fourier(exp1_small):
    g, m, v0, S = exp1_small
    q = (2 * np.pi / 0.2, 0.0)
    u0 = solve_forward(m, S).field
    assert modulated_boundary_functional(u0, u0, v0) == 0.0
    H = internal_functional(u0, v0, S, m).h
    vals = {}
    for eps in (0.02, 0.01):
        ue = solve_modulated(m, S, eps, q, 0.0).field
        vals[eps] = modulated_boundary_functional(ue, u0, v0)
    assert vals[0.02] / vals[0.01] == pytest.approx(2.0, rel=0.02)
    ref = 0.01 * fourier_moment(H, q, 0.0)
    assert vals[0.01] == pytest.approx(ref, rel=0.1)
