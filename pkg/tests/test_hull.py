import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import polygamma

from orowan.hull import (HullParams, accelerated_sum, ansatz_partial_sum, claim1_reference_sums,
                         far_field_contribution, far_field_limit, hull_value, nl_residual,
                         residual_scan, split_lattice, termwise_sums)


@pytest.fixture(scope="module")
def two_params(two_layer, two_corr, two_harmonic):
    return HullParams(0.1, 1.0, 1.0, 8, two_layer, two_corr[1.0], two_harmonic)


@pytest.fixture(scope="module")
def std_params(std_layer, std_corr, standard):
    return lambda d, L=1.0: HullParams(d, 1.0, L, 8, std_layer, std_corr[L], standard)


def closed_form(eps, x):
    """h' and eps I1[h] for superposed arctan layers."""
    den = np.cosh(2 * np.pi * eps) - np.cos(2 * np.pi * x)
    return np.sinh(2 * np.pi * eps) / den, -eps * np.sin(2 * np.pi * x) / den


def test_params_validation(two_layer, two_corr, two_harmonic):
    with pytest.raises(ValueError, match="1/\\(delta"):
        HullParams(0.6, 1.0, 1.0, 8, two_layer, two_corr[1.0], two_harmonic)
    with pytest.raises(ValueError, match="solved for L"):
        HullParams(0.1, 1.0, 2.0, 8, two_layer, two_corr[1.0], two_harmonic)
    with pytest.raises(ValueError):
        HullParams(0.1, 0.0, 1.0, 8, two_layer, two_corr[1.0], two_harmonic)


@pytest.mark.parametrize("x,i0,gamma", [(0.5, 0, 0.5), (-0.5, -1, 0.5), (1.2, 1, 0.2), (2.5, 2, 0.5)])
def test_split_lattice(x, i0, gamma):
    assert split_lattice(x) == (i0, pytest.approx(gamma))


@pytest.mark.parametrize("n", [1, 5, 40])
def test_standard_centre_value(std_params, n):
    p = std_params(0.1, 0.0)
    p = HullParams(p.delta, p.p0, p.L, n, p.layer, p.corrector, p.potential)
    assert ansatz_partial_sum(p, 0.0) == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("delta", [0.2, 0.05])
@pytest.mark.parametrize("x", [0.0, 0.013, 0.37, -0.45])
def test_standard_closed_forms(std_params, delta, x):
    ev = hull_value(std_params(delta, 0.0), x)
    h1, ei1 = closed_form(delta, x)
    assert ev.h1 == pytest.approx(h1, rel=1e-9)
    assert delta * ev.i1 == pytest.approx(ei1, abs=1e-9)
    assert ev.h2 == pytest.approx(np.gradient([closed_form(delta, x + s)[0] for s in (-1e-5, 0, 1e-5)], 1e-5)[1], rel=1e-5)


def test_fields(two_params):
    ev = hull_value(two_params, 0.3)
    assert ev.lambda_bar == pytest.approx(0.1**2 * two_params.layer.c0 * 1.0 * 1.0)
    assert ev.i0 == 0 and ev.gamma == pytest.approx(0.3)
    assert ev.increment < 1e-10
    expect = ev.lambda_bar * ev.h1 - 0.1 - 0.1 * ev.i1 + float(two_params.potential(ev.h, 1))
    assert ev.nl == pytest.approx(expect, abs=1e-15)


def test_bounded_deviation(two_params, rng):
    xs = rng.uniform(-5, 5, 100)
    dev = np.abs(accelerated_sum(two_params, xs, 64) - xs)
    assert dev.max() <= 1.0


def test_monotone(two_params):
    xs = np.linspace(-1, 1, 401)
    assert np.all(np.diff(accelerated_sum(two_params, xs, 64)) > 0)


def test_periodic_shift(two_params):
    for x in (-0.3, 0.1, 0.44):
        a = accelerated_sum(two_params, np.array([x, x + 1.0]), 512)
        assert a[1] - a[0] - 1.0 == pytest.approx(0, abs=1e-10)


def test_acceleration_matches_raw_sum(two_params):
    tol = 1e-6
    raw = HullParams(two_params.delta, two_params.p0, two_params.L, 10_000, two_params.layer,
                     two_params.corrector, two_params.potential)
    for x in (0.25, -0.4):
        ev = hull_value(two_params, x, tol=tol)
        for k, val in enumerate((ev.h, ev.h1, ev.h2)):
            scale = two_params.eps ** -k
            assert ansatz_partial_sum(raw, x, k) == pytest.approx(val, abs=10 * tol * scale)


@pytest.mark.parametrize("order", [0, 1, 2])
def test_cauchy_raw_sums(two_params, order):
    x = 0.3
    vals = []
    for n in (250, 500, 1000, 2000):
        p = HullParams(0.1, 1.0, 1.0, n, two_params.layer, two_params.corrector, two_params.potential)
        vals.append(ansatz_partial_sum(p, x, order))
    inc = np.abs(np.diff(vals))
    assert np.all(inc[1:] < 0.6 * inc[:-1] + 1e-13)
    assert inc[-1] < 1e-3


def test_reference_sums_exact_oracles():
    half = claim1_reference_sums(0.5, 10)
    assert half.S1_limit == pytest.approx(-2.0, abs=1e-10)
    zero = claim1_reference_sums(0.0, 10)
    assert zero.S1_limit == 0.0
    assert zero.S2_limit == pytest.approx(np.pi**2 / 6, abs=1e-10)
    assert zero.S3_limit == pytest.approx(np.pi**2 / 6, abs=1e-10)


@settings(max_examples=10, deadline=None)
@given(g=st.floats(-0.49, 0.5).filter(lambda v: abs(v) > 1e-3))
def test_reference_sums_closed_forms(g):
    s = claim1_reference_sums(g, 50)
    assert s.S1_limit == pytest.approx(-(1 - np.pi * g / np.tan(np.pi * g)) / g, abs=1e-10)
    assert s.S2_limit == pytest.approx(polygamma(1, 1 + g), abs=1e-10)
    assert s.S3_limit == pytest.approx(polygamma(1, 1 - g), abs=1e-10)
    # finite partial sums approach the limits like 1/n
    assert abs(s.S2 - s.S2_limit) < 1.1 / 50


def test_reference_sums_rejects_gamma():
    with pytest.raises(ValueError):
        claim1_reference_sums(-0.5, 10)


def test_termwise_sums_converge(two_params):
    x = 0.3
    phi_sums, psi_sums = termwise_sums(two_params, x, 64)
    inc = np.abs(np.diff(phi_sums[[8, 16, 32, 64]]))
    assert np.all(inc[1:] < 0.6 * inc[:-1])
    assert np.abs(np.diff(psi_sums[[32, 64]]))[0] < 1e-4
    # termwise route agrees with I1[h] once the 1/z far field is added back
    ev = hull_value(two_params, x)
    eps = two_params.eps
    m = 64
    tail = -(eps / np.pi) * 2 * x * np.sum(1 / (x**2 - np.arange(m + 1, 10**6) ** 2))
    total = phi_sums[-1] + two_params.delta * psi_sums[-1] + tail
    assert total == pytest.approx(eps * ev.i1, abs=2e-4)


def test_far_field_stabilises(two_params):
    vals = [far_field_contribution(two_params, 0.25, 4.0, n) for n in (40, 80, 160)]
    limit = far_field_limit(two_params, 0.25, 4.0)
    err = np.abs(np.array(vals) - limit)
    assert np.all(err[1:] < 0.6 * err[:-1])
    # first-order Richardson extrapolation lands on the periodised limit
    assert 2 * vals[2] - vals[1] == pytest.approx(limit, abs=1e-4)


def test_far_field_needs_large_n(two_params):
    with pytest.raises(ValueError):
        far_field_contribution(two_params, 0.25, 8.0, 9)


def test_far_field_one_over_a(two_params):
    a = np.array([2.0, 4.0, 8.0, 16.0])
    vals = np.array([far_field_limit(two_params, 0.25, ai) for ai in a])
    C = np.max(np.abs(vals) * a)
    assert np.all(np.abs(vals) <= C / a)
    ratios = vals[1:] / vals[:-1]
    assert np.all(np.abs(ratios - 0.5) <= 0.15)


def test_residual_small_relative_to_delta(std_params):
    r = [abs(nl_residual(std_params(d), 0.1)) / d for d in (0.2, 0.1, 0.05)]
    assert r[2] < r[1] < r[0]


def test_residual_scan_quadratic(std_params):
    scan = residual_scan(std_params, [0.2, 0.1, 0.05], points=9)
    assert scan.slope >= 1.8
    assert np.all(scan.sup_residual <= scan.C * scan.deltas**2 * (1 + 1e-12))


def test_rejects_nonfinite(two_params):
    with pytest.raises(ValueError):
        ansatz_partial_sum(two_params, np.nan)
    with pytest.raises(ValueError):
        hull_value(two_params, np.inf)
