import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orowan.fractional import (Grid1D, GridField, LevyQuadratureConfig, half_laplacian_linear_growth,
                               half_laplacian_matrix, half_laplacian_quadrature, line_kernel,
                               half_laplacian_spectral, half_laplacian_zero_extended)


def arctan_i1(x):
    return -x / (1 + x**2)


def test_grid():
    g = Grid1D(2.0, 8)
    assert g.spacing == 0.25
    assert np.allclose(g.nodes(), np.arange(8) * 0.25)
    with pytest.raises(ValueError):
        Grid1D(-1.0, 8)


def test_gridfield_validation():
    g = Grid1D(1.0, 8)
    with pytest.raises(ValueError):
        GridField(g, np.zeros(7))
    with pytest.raises(ValueError):
        GridField(g, np.full(8, np.inf))
    f = GridField(g, np.zeros(8))
    with pytest.raises(ValueError):
        f.values[0] = 1.0


@pytest.mark.parametrize("kw", [dict(r=0.0), dict(r=1.5), dict(R=0.5), dict(nodes_per_decade=4)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        LevyQuadratureConfig(**kw)


def test_spectral_constant_and_slope():
    g = Grid1D(3.0, 32)
    assert np.allclose(half_laplacian_spectral(GridField(g, np.full(32, 2.5))).values, 0, atol=1e-14)
    out = half_laplacian_spectral(GridField(g, np.zeros(32), slope=3.0))
    assert out.slope == 0.0 and np.all(out.values == 0)


@pytest.mark.parametrize("period,m", [(1.0, 1), (2 * np.pi, 3), (5.0, 2)])
def test_spectral_cos(period, m):
    g = Grid1D(period, 64)
    x = g.nodes()
    out = half_laplacian_spectral(GridField(g, np.cos(2 * np.pi * m * x / period)))
    assert np.allclose(out.values, -(2 * np.pi * m / period) * np.cos(2 * np.pi * m * x / period),
                       atol=1e-12)


def test_tiny_grid_rejected():
    with pytest.raises(ValueError):
        Grid1D(1.0, 2)


def test_quadrature_constant():
    assert half_laplacian_quadrature(lambda z: np.full_like(z, 3.0), 0.0, 0.7) == pytest.approx(0, abs=1e-14)


@pytest.mark.parametrize("x", [0.0, 1.0, 2.0, 5.0, -3.0])
def test_quadrature_arctan(x):
    val = half_laplacian_quadrature(np.arctan, 1 / (1 + x * x), x)
    assert val == pytest.approx(arctan_i1(x), abs=1e-6)


@pytest.mark.parametrize("r", [0.05, 0.1, 0.25, 0.5])
def test_r_independence(r):
    base = half_laplacian_quadrature(np.arctan, 0.5, 1.0, LevyQuadratureConfig(r=0.1))
    assert half_laplacian_quadrature(np.arctan, 0.5, 1.0, LevyQuadratureConfig(r=r)) == pytest.approx(base, abs=1e-8)


@pytest.mark.parametrize("periodic", [False, True])
def test_quadrature_matches_spectral(periodic):
    P = 2.0
    g = Grid1D(P, 32)
    f = lambda z: np.sin(2 * np.pi * z / P) + 0.3 * np.cos(4 * np.pi * z / P)
    fp = lambda z: 2 * np.pi / P * np.cos(2 * np.pi * z / P) - 0.3 * 4 * np.pi / P * np.sin(4 * np.pi * z / P)
    spec = half_laplacian_spectral(GridField(g, f(g.nodes()))).values
    for j in range(0, 32, 5):
        x = g.nodes()[j]
        # without the fold, panels must resolve the oscillation
        cfg = LevyQuadratureConfig() if periodic else LevyQuadratureConfig(max_panel=P / 8)
        q = half_laplacian_quadrature(f, fp(x), x, cfg, period=P if periodic else None)
        assert q == pytest.approx(spec[j], abs=1e-7 * np.max(np.abs(spec)))


def test_quadrature_rejects_nonfinite():
    with pytest.raises(ValueError):
        half_laplacian_quadrature(lambda z: np.where(z > 3, np.nan, 0.0), 0.0, 0.0)


def test_linear_growth_examples():
    assert half_laplacian_linear_growth(lambda z: 3 * z, 3.0, 1.3) == pytest.approx(0, abs=1e-8)
    f = lambda z: z + np.arctan(z)
    assert half_laplacian_linear_growth(f, 1.0, 0.0) == pytest.approx(0, abs=1e-10)
    assert half_laplacian_linear_growth(f, 1.0, 2.0) == pytest.approx(-0.4, abs=1e-6)


def test_linear_growth_periodic():
    f = lambda z: z + 0.2 * np.sin(2 * np.pi * z)
    val = half_laplacian_linear_growth(f, 1.0, 0.3, period=1.0)
    assert val == pytest.approx(-2 * np.pi * 0.2 * np.sin(2 * np.pi * 0.3), rel=1e-8)


@settings(max_examples=15, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3), x=st.floats(-4, 4))
def test_linearity(a, b, x):
    f = lambda z: np.arctan(z)
    g = lambda z: np.exp(-z * z)
    fp, gp = 1 / (1 + x * x), -2 * x * np.exp(-x * x)
    lhs = half_laplacian_quadrature(lambda z: a * f(z) + b * g(z), a * fp + b * gp, x)
    rhs = a * half_laplacian_quadrature(f, fp, x) + b * half_laplacian_quadrature(g, gp, x)
    assert lhs == pytest.approx(rhs, abs=1e-10 * (1 + abs(a) + abs(b)))


@settings(max_examples=15, deadline=None)
@given(c=st.floats(-5, 5), x=st.floats(-3, 3))
def test_translation(c, x):
    shifted = half_laplacian_quadrature(lambda z: np.arctan(z - c), 1 / (1 + (x - c) ** 2), x)
    assert shifted == pytest.approx(arctan_i1(x - c), abs=1e-6)


def test_matrix_matches_zero_extended_apply(rng):
    n, h = 65, 0.2
    u = rng.standard_normal(n)
    A = half_laplacian_matrix(n, h)
    assert np.allclose(A @ u, half_laplacian_zero_extended(u, h), atol=1e-12)
    assert np.allclose(A, A.T)


def test_line_kernel_values():
    h = 0.5
    assert line_kernel(0, h) == pytest.approx(-np.pi / (2 * h))
    assert line_kernel(3, h) == pytest.approx(2 / (9 * np.pi * h))
    assert line_kernel(4, h) == 0.0
    assert line_kernel(-3, h) == line_kernel(3, h)


def test_matrix_tail_column():
    n, h = 21, 0.5
    A0 = half_laplacian_matrix(n, h)
    A = half_laplacian_matrix(n, h, tail_power=2.0, tail_extent=2000)
    X = 0.5 * (n - 1) * h
    k = np.arange(1, 400000)
    t = (X / (X + k * h)) ** 2
    for j in (0, 3, 10, 20):
        brute = np.sum(line_kernel(n - 1 - j + k, h) * t)
        assert A[j, -1] - A0[j, -1] == pytest.approx(brute, abs=1e-9)
        assert A[n - 1 - j, 0] - A0[n - 1 - j, 0] == pytest.approx(brute, abs=1e-9)


def test_matrix_converges_on_bump():
    errs = []
    for count in (600, 1200):
        x = np.linspace(-30, 30, count + 1)
        u = np.exp(-x**2)
        out = half_laplacian_matrix(x.size, x[1] - x[0]) @ u
        pts = [count // 2, count // 2 + count // 60, count // 2 + count // 6]
        cfg = LevyQuadratureConfig(max_panel=0.25)
        ref = [half_laplacian_quadrature(lambda z: np.exp(-z * z), -2 * x[j] * u[j], x[j], cfg)
               for j in pts]
        errs.append(np.max(np.abs(out[pts] - ref)))
    # sinc collocation is spectrally accurate for a resolved Gaussian
    assert max(errs) < 1e-9
