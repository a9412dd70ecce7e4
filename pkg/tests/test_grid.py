import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from umblt.errors import DomainMismatchError, UMBLTError, UndefinedMetricError
from umblt.grid import (
    AngularField,
    DirectionSet,
    Grid2D,
    ScalarField,
    angular_integrate,
    interpolate,
    read_csv,
    relative_l2_error,
    write_csv,
)


def test_grid_spacing_and_diameter():
    g = Grid2D(5, 3, 0.0, 2.0, -1.0, 1.0)
    assert g.dx1 == pytest.approx(0.5)
    assert g.dx2 == pytest.approx(1.0)
    assert g.shape == (3, 5)
    assert Grid2D.square(11, side=0.2).diameter() == pytest.approx(0.2 * math.sqrt(2))


@pytest.mark.parametrize("args", [(1, 5), (5, 1), (3, 3, 1.0, 0.0), (3, 3, 0.0, 1.0, 1.0, 1.0)])
def test_grid_rejects_degenerate(args):
    with pytest.raises(ValueError):
        Grid2D(*args)


def test_cell_weights_trapezoid():
    g = Grid2D.square(5)
    w = g.cell_weights()
    h2 = g.dx1 * g.dx2
    assert w[2, 2] == pytest.approx(h2)
    assert w[0, 2] == pytest.approx(h2 / 2)
    assert w[0, 0] == pytest.approx(h2 / 4)
    assert w.sum() == pytest.approx(1.0)


def test_directions():
    d = DirectionSet(8)
    assert d.weight * d.M == pytest.approx(2 * math.pi, abs=0)
    assert np.allclose(np.hypot(d.cos, d.sin), 1.0, atol=1e-15)
    assert d.angles[1] == pytest.approx(math.pi / 4)
    # axis directions carry exact zeros so the solver drops the matching difference
    assert d.sin[0] == 0.0 and d.cos[2] == 0.0 and d.sin[4] == 0.0 and d.cos[6] == 0.0


def test_angular_integrate_examples(small_grid, dirs8):
    ones = AngularField.constant(small_grid, dirs8, 1.0)
    assert np.allclose(angular_integrate(ones).values, 2 * math.pi)
    cosf = AngularField(small_grid, dirs8, np.broadcast_to(dirs8.cos[:, None, None], (8,) + small_grid.shape))
    assert np.allclose(angular_integrate(cosf).values, 0.0, atol=1e-14)
    # by hand: cos^2 at multiples of pi/4 sums to 4
    cos2 = cosf.with_values(cosf.values**2)
    assert np.allclose(angular_integrate(cos2).values, math.pi)


@settings(max_examples=25, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 2**31 - 1))
def test_angular_integrate_linear(a, b, seed):
    g, d = Grid2D.square(4), DirectionSet(6)
    rng = np.random.default_rng(seed)
    f = AngularField(g, d, rng.normal(size=(6, 4, 4)))
    h = AngularField(g, d, rng.normal(size=(6, 4, 4)))
    lhs = angular_integrate(f.with_values(a * f.values + b * h.values)).values
    rhs = a * angular_integrate(f).values + b * angular_integrate(h).values
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_fields_reject_bad_values(small_grid):
    with pytest.raises(ValueError):
        ScalarField(small_grid, np.zeros((3, 3)))
    bad = np.zeros(small_grid.shape)
    bad[1, 1] = np.nan
    with pytest.raises(UMBLTError):
        ScalarField(small_grid, bad)


def test_fields_are_read_only(small_grid):
    f = ScalarField.constant(small_grid, 1.0)
    with pytest.raises(ValueError):
        f.values[0, 0] = 2.0


def test_interpolate_constant_and_identity():
    src = Grid2D.square(21)
    f = ScalarField.constant(src, 3.5)
    assert np.allclose(interpolate(f, Grid2D.square(7)).values, 3.5)
    g = ScalarField.from_function(src, lambda x, y: np.sin(x) * y)
    assert interpolate(g, src) is g


def test_interpolate_reproduces_bilinear():
    fine, coarse = Grid2D.square(121), Grid2D.square(61)
    func = lambda x, y: 0.3 - 1.2 * x + 2.5 * y + 4.0 * x * y
    out = interpolate(ScalarField.from_function(fine, func), coarse)
    assert np.allclose(out.values, ScalarField.from_function(coarse, func).values, atol=1e-13)
    # nodes that do not coincide with fine nodes
    odd = Grid2D(17, 13)
    out = interpolate(ScalarField.from_function(fine, func), odd)
    assert np.allclose(out.values, ScalarField.from_function(odd, func).values, atol=1e-13)


def test_interpolate_outside_domain():
    f = ScalarField.constant(Grid2D.square(5), 1.0)
    with pytest.raises(DomainMismatchError):
        interpolate(f, Grid2D(5, 5, 0.0, 1.5, 0.0, 1.0))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(3, 15), st.integers(3, 15))
def test_interpolate_bounded(seed, nx, ny):
    rng = np.random.default_rng(seed)
    f = ScalarField(Grid2D(9, 7), rng.normal(size=(7, 9)))
    out = interpolate(f, Grid2D(nx, ny)).values
    assert out.min() >= f.values.min() - 1e-12
    assert out.max() <= f.values.max() + 1e-12


def test_relative_error_examples():
    g = Grid2D.square(11)
    t = ScalarField.from_function(g, lambda x, y: 1 + x + y**2)
    assert relative_l2_error(t, t) == 0.0
    assert relative_l2_error(t * 1.01, t) == pytest.approx(0.01)
    bumped = t.values.copy()
    bumped[4, 6] += 0.3
    w = g.cell_weights()[4, 6]
    norm = np.sqrt(np.sum(g.cell_weights() * t.values**2))
    assert relative_l2_error(t.with_values(bumped), t) == pytest.approx(0.3 * math.sqrt(w) / norm)
    with pytest.raises(UndefinedMetricError):
        relative_l2_error(t, ScalarField.constant(g, 0.0))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.01, 100) | st.floats(-100, -0.01))
def test_relative_error_scale_invariant(seed, alpha):
    g = Grid2D.square(6)
    rng = np.random.default_rng(seed)
    a = ScalarField(g, rng.normal(size=g.shape))
    t = ScalarField(g, rng.normal(size=g.shape) + 3)
    assert relative_l2_error(a * alpha, t * alpha) == pytest.approx(relative_l2_error(a, t), rel=1e-10)


def test_csv_roundtrip(tmp_path):
    g = Grid2D(7, 4, -0.5, 0.2, 1.0, 3.0)
    f = ScalarField(g, np.random.default_rng(1).normal(size=g.shape))
    path = tmp_path / "f.csv"
    write_csv(f, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# 7 4 -0.5 0.2 1.0 3.0"
    assert len(lines) == 1 + g.ny
    assert len(lines[1].split(",")) == g.nx
    back = read_csv(path)
    assert back.grid == g
    assert np.allclose(back.values, f.values, rtol=1e-12, atol=0)


def test_csv_without_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1,2\n3,4\n")
    with pytest.raises(UMBLTError):
        read_csv(path)
