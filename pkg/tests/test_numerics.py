import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from hetcap.numerics import (Density2D, Grid1D, Grid2D, MassWarning, SupportError,
                             differential_entropy, gaussian_density, gaussian_entropy,
                             gaussian_kernel, integrate_2d, kl_divergence, plogp,
                             smooth_y)


def grid2(sx=1.0, sy=1.0, points=256, nsigma=8.0, mx=0.0, my=0.0):
    return Grid2D(Grid1D.covering(mx, sx, points, nsigma), Grid1D.covering(my, sy, points, nsigma))


def mvn(grid, mean, var):
    # scipy as the reference sampler, independent of gaussian_density
    x, y = grid.mesh()
    pdf = stats.multivariate_normal(mean, np.diag(var)).pdf(np.dstack([x, y]))
    return Density2D(grid, pdf)


def gauss_kl(m1, v1, m2, v2):
    m1, v1, m2, v2 = map(np.asarray, (m1, v1, m2, v2))
    return 0.5 * float(np.sum(v1 / v2 + (m2 - m1) ** 2 / v2 - 1 + np.log(v2 / v1)))


# -- grids -----------------------------------------------------------------------

def test_grid_step_and_symmetry():
    g = Grid1D(1.0, 3.0, 31)
    assert g.step == pytest.approx(0.2)
    assert np.allclose(g.nodes - 1.0, -(g.nodes - 1.0)[::-1])
    assert g.weights.sum() == pytest.approx(6.0)


@pytest.mark.parametrize("kw", [dict(half_width=0.0), dict(half_width=-1.0), dict(points=15)])
def test_grid_rejects_invalid(kw):
    args = dict(center=0.0, half_width=1.0, points=64) | kw
    with pytest.raises(ValueError):
        Grid1D(**args)


def test_density_rejects_shape_and_sign():
    g = grid2(points=32)
    with pytest.raises(ValueError):
        Density2D(g, np.ones((31, 32)))
    with pytest.raises(ValueError):
        Density2D(g, -np.ones(g.shape))
    d = Density2D(g, np.full(g.shape, -1e-20))
    assert d.values.min() == 0.0


# -- integration ----------------------------------------------------------------

def test_constant_density_mass():
    g = grid2(points=64)
    d = Density2D(g, np.full(g.shape, 1.0 / g.area))
    assert integrate_2d(d) == pytest.approx(1.0, abs=1e-12)


def test_standard_gaussian_mass():
    assert integrate_2d(mvn(grid2(), (0, 0), (1, 1))) == pytest.approx(1.0, abs=1e-6)


def test_second_moment_matches_covariance():
    d = mvn(grid2(1.0, np.sqrt(0.5)), (0, 0), (1.0, 0.5))
    assert d.moment(fx=np.square) == pytest.approx(1.0, abs=1e-4)
    assert d.moment(fy=np.square) == pytest.approx(0.5, abs=1e-4)


def test_gaussian_density_matches_scipy():
    g = grid2(1.3, 0.7, 64, mx=0.4, my=-1.0)
    a = gaussian_density(g, (0.4, -1.0), (1.69, 0.49)).values
    b = mvn(g, (0.4, -1.0), (1.69, 0.49)).values
    assert np.max(np.abs(a - b)) < 1e-12


# -- entropies ------------------------------------------------------------------

def test_entropy_standard_gaussian():
    h = differential_entropy(mvn(grid2(), (0, 0), (1, 1)))
    ref = stats.multivariate_normal(np.zeros(2), np.eye(2)).entropy()
    assert h == pytest.approx(ref, abs=1e-4)
    assert h == pytest.approx(np.log(2 * np.pi * np.e), abs=1e-4)


def test_entropy_anisotropic_gaussian():
    h = differential_entropy(mvn(grid2(1.0, 0.5), (0, 0), (1.0, 0.25)))
    assert h == pytest.approx(np.log(2 * np.pi * np.e * 0.5), abs=1e-4)
    assert gaussian_entropy(1.0, 0.25) == pytest.approx(np.log(np.pi * np.e), abs=1e-14)


def test_entropy_uniform():
    g = Grid2D(Grid1D(0, 1.5, 64), Grid1D(0, 2.0, 64))
    d = Density2D(g, np.full(g.shape, 1.0 / g.area))
    assert differential_entropy(d) == pytest.approx(np.log(g.area), abs=1e-12)


def test_entropy_warns_on_mass_drift():
    g = grid2(points=64)
    d = Density2D(g, np.full(g.shape, 1.1 / g.area))
    with pytest.warns(MassWarning):
        differential_entropy(d)


def test_plogp_zero_convention():
    assert np.array_equal(plogp(np.array([0.0, 1e-310, 1.0])), np.zeros(3))


# -- KL -------------------------------------------------------------------------

def test_kl_identical_is_zero():
    p = mvn(grid2(), (0.3, -0.2), (1.0, 2.0))
    assert kl_divergence(p, p) == 0.0


def test_kl_mean_offset():
    g = grid2(points=256, nsigma=10.0)
    p, q = mvn(g, (1, 0), (1, 1)), mvn(g, (0, 0), (1, 1))
    assert kl_divergence(p, q) == pytest.approx(0.5, abs=1e-4)


def test_kl_variance_ratio():
    g = grid2(np.sqrt(2), np.sqrt(2))
    p, q = mvn(g, (0, 0), (2, 2)), mvn(g, (0, 0), (1, 1))
    assert kl_divergence(p, q) == pytest.approx(1 - np.log(2), abs=1e-4)


def test_kl_support_error():
    g = grid2(points=64)
    p = Density2D(g, np.full(g.shape, 1.0 / g.area))
    vals = np.zeros(g.shape)
    vals[:32] = 2.0 / g.area
    with pytest.raises(SupportError):
        kl_divergence(p, Density2D(g, vals))


def test_kl_grid_mismatch():
    with pytest.raises(ValueError):
        kl_divergence(mvn(grid2(points=64), (0, 0), (1, 1)), mvn(grid2(points=65), (0, 0), (1, 1)))


@given(m=st.tuples(st.floats(-1, 1), st.floats(-1, 1)),
       v=st.tuples(st.floats(0.5, 2), st.floats(0.5, 2)))
def test_kl_gaussian_closed_form_property(m, v):
    g = grid2(2.0, 2.0, 200, nsigma=7.0)
    p, q = mvn(g, m, v), mvn(g, (0, 0), (1, 1))
    kl = kl_divergence(p, q)
    assert kl >= -1e-8
    assert kl == pytest.approx(gauss_kl(m, v, (0, 0), (1, 1)), abs=1e-4)


# -- smoothing ------------------------------------------------------------------

def test_kernel_unit_sum():
    k = gaussian_kernel(0.3, 0.05)
    assert k.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.allclose(k, k[::-1])
    with pytest.raises(ValueError):
        gaussian_kernel(0.0, 0.1)


def test_smoothing_adds_variance():
    g = Grid2D(Grid1D(0, 1, 32), Grid1D(0, 9.0, 9001))
    p = mvn(g, (0, 0), (0.1, 1e-4))
    s = smooth_y(p, 1.0)
    my = s.marginal_y() / s.mass
    var = float(np.sum(g.gy.weights * g.gy.nodes**2 * my))
    assert var == pytest.approx(1.0001, abs=1e-3)


def test_smoothing_tiny_time_is_identity():
    p = mvn(grid2(points=128), (0.2, 0.1), (1, 1))
    s = smooth_y(p, 1e-8)
    assert np.max(np.abs(s.values - p.values)) < 1e-6


def test_smoothing_leak_warns():
    g = Grid2D(Grid1D(0, 8, 64), Grid1D(0, 2.0, 64))
    p = Density2D(g, np.outer(np.full(64, 1 / 16.0), np.full(64, 1 / 4.0)), probability=True)
    with pytest.warns(MassWarning):
        smooth_y(p, 1.0)


gauss_params = st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.5, 1.5), st.floats(0.5, 1.5))


@given(a=gauss_params, b=gauss_params, t=st.floats(0.05, 1.0))
def test_data_processing_property(a, b, t):
    g = grid2(1.5, 2.0, 160, nsigma=9.0)
    p = mvn(g, a[:2], a[2:])
    q = mvn(g, b[:2], b[2:])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MassWarning)
        lhs = kl_divergence(smooth_y(p, t), smooth_y(q, t))
    assert lhs <= kl_divergence(p, q) + 1e-8
    # exact value: the smoothing just adds t to the y variances
    ref = gauss_kl(a[:2], (a[2], a[3] + t), b[:2], (b[2], b[3] + t))
    assert lhs == pytest.approx(ref, abs=1e-4)


@given(s=st.floats(0.05, 1.0), t=st.floats(0.05, 1.0))
def test_semigroup_property(s, t):
    g = Grid2D(Grid1D(0, 4, 32), Grid1D(0, 12.0, 1201))
    p = mvn(g, (0, 0.5), (0.5, 0.3))
    a = smooth_y(smooth_y(p, s), t)
    b = smooth_y(p, s + t)
    assert np.max(np.abs(a.values - b.values)) < 1e-6


@given(m=st.floats(-1, 1), v=st.floats(0.2, 1.5), t=st.floats(0.01, 1.0))
def test_smoothing_raises_entropy(m, v, t):
    g = grid2(1.5, 2.0, 160, nsigma=9.0)
    p = mvn(g, (0, m), (1.0, v))
    assert differential_entropy(smooth_y(p, t)) >= differential_entropy(p) - 1e-8


@given(m=st.tuples(st.floats(-2, 2), st.floats(-2, 2)),
       v=st.tuples(st.floats(0.3, 3), st.floats(0.3, 3)))
def test_constructed_density_mass_property(m, v):
    g = grid2(np.sqrt(v[0]), np.sqrt(v[1]), 128, mx=m[0], my=m[1])
    assert abs(integrate_2d(gaussian_density(g, m, v)) - 1) <= 1e-6
