import math

import numpy as np
import pytest

from umblt.errors import ConfigError
from umblt.grid import Grid2D, ScalarField, relative_l2_error
from umblt.phantoms import PhantomSpec, gaussian_kernel, gaussian_smooth, render


def test_gaussian_sources():
    g = Grid2D(26, 21, 0.0, 0.2, 0.0, 0.2)
    s1 = render(PhantomSpec("gaussian", {"center": [0.08, 0.12], "rate": 100.0}), g)
    i, j = np.unravel_index(np.argmax(s1.values), g.shape)
    assert s1.values[i, j] == pytest.approx(1.0)
    assert (g.x1[j], g.x2[i]) == pytest.approx((0.08, 0.12))

    g = Grid2D.square(11)
    s3 = render(PhantomSpec.from_config({"gaussian": {"center": [0.4, 0.6], "rate": 10.0}}), g)
    assert s3.values[6, 4] == pytest.approx(1.0)
    assert s3.values[7, 4] == pytest.approx(math.exp(-10 * 0.1**2))
    by_width = render(PhantomSpec("gaussian", {"center": [0.4, 0.6], "width": 10**-0.5}), g)
    assert np.allclose(by_width.values, s3.values)


def test_affine_and_constant():
    g = Grid2D.square(11, side=0.2)
    s = render(PhantomSpec.from_config({"affine": [0.1, 0.1, 0.0]}), g)
    assert s.values[0, -1] == pytest.approx(0.12)
    c = render(PhantomSpec.from_config({"constant": 2.5}), g)
    assert np.all(c.values == 2.5)


def test_unknown_kind():
    with pytest.raises(ConfigError):
        PhantomSpec("ellipse")
    with pytest.raises(ConfigError):
        PhantomSpec.from_config({"gaussian": {}, "shepp_logan": {}})
    with pytest.raises(ConfigError):
        render(PhantomSpec("gaussian", {"center": [0, 0]}), Grid2D.square(5))


def test_shepp_logan_properties():
    g = Grid2D.square(64)
    a = render(PhantomSpec("shepp_logan"), g)
    b = render(PhantomSpec.from_config({"name": "S2", "shepp_logan": {}}), g)
    assert np.array_equal(a.values, b.values)
    assert a.values.min() >= 0.0
    assert a.values.max() <= 1.0 + 1e-12
    # skull ring at full intensity, brain interior at 0.02
    assert a.values[32, 1] == pytest.approx(0.0)
    assert np.isclose(a.values, 1.0).any()
    assert a.values[32, 32] == pytest.approx(0.02)
    # scaled to the bounding box of the domain
    small = render(PhantomSpec("shepp_logan"), Grid2D.square(64, side=0.2))
    assert np.array_equal(small.values, a.values)


def test_smooth_constant_is_constant():
    f = ScalarField.constant(Grid2D.square(30), 4.2)
    assert np.allclose(gaussian_smooth(f, 3.0).values, 4.2)


def test_smooth_delta():
    g = Grid2D.square(61)
    vals = np.zeros(g.shape)
    vals[30, 30] = 1.0
    out = gaussian_smooth(ScalarField(g, vals), 3.0).values
    k = gaussian_kernel(3.0)
    assert len(k) == 2 * 12 + 1
    assert out[30, 30] == pytest.approx(k[12] ** 2)
    assert out.sum() == pytest.approx(1.0, abs=1e-12)


def test_smooth_preserves_interior_mean():
    g = Grid2D.square(81)
    f = render(PhantomSpec("gaussian", {"center": [0.5, 0.5], "rate": 200.0}), g)
    out = gaussian_smooth(f, 2.0)
    assert out.values.mean() == pytest.approx(f.values.mean(), abs=1e-10)


def test_smoothing_monotone():
    g = Grid2D.square(61)
    sl = render(PhantomSpec("shepp_logan"), g)
    d = [relative_l2_error(gaussian_smooth(sl, s), sl) for s in (1.0, 2.0, 3.0)]
    assert d[0] < d[1] < d[2]
    with pytest.raises(ValueError):
        gaussian_smooth(sl, 0.0)


def test_smoothing_pixel_length():
    # std in pixels of a coarser grid equals a wider std on the render grid
    g = Grid2D.square(121)
    spec = PhantomSpec("smoothed_shepp_logan", {"std": 3})
    a = render(spec, g, pixel=1 / 60)
    b = gaussian_smooth(render(PhantomSpec("shepp_logan"), g), 6.0)
    assert np.allclose(a.values, b.values)
    assert np.allclose(render(spec, g).values, gaussian_smooth(render(PhantomSpec("shepp_logan"), g), 3.0).values)
