import numpy as np
import pytest

from orowan.exceptions import ConvergenceError
from orowan.layer import (assemble_layer, c0_constant, layer_residual_quadrature, reference_profile,
                          solve_layer, verify_layer_decay)


def test_reference_profile_derivatives():
    x = np.linspace(-4, 4, 9)
    a = 1.5
    h = 1e-5
    for k in range(3):
        fd = (reference_profile(x + h, a, k) - reference_profile(x - h, a, k)) / (2 * h)
        assert np.allclose(fd, reference_profile(x, a, k + 1), atol=1e-7)


@pytest.mark.parametrize("kw", [dict(half_width=10.0), dict(count=256), dict(count=1025), dict(tol=0.0)])
def test_preconditions(standard, kw):
    args = dict(half_width=40.0, count=1024, tol=1e-10) | kw
    with pytest.raises(ValueError):
        solve_layer(standard, **args)


def test_standard_matches_arctan(std_layer):
    band = np.abs(std_layer.xs) <= 20
    ref = 0.5 + np.arctan(std_layer.xs[band]) / np.pi
    assert np.max(np.abs(std_layer.phi[band] - ref)) <= 1e-3
    assert float(std_layer.evaluate(0.0)) == pytest.approx(0.5, abs=1e-12)
    assert np.all(std_layer.phi1 > 0)


def test_recovers_arctan_from_perturbed_start(standard):
    lay = solve_layer(standard, 40.0, 1024, u0=lambda x: 0.05 * np.sin(x) * np.exp(-x**2 / 50))
    assert len(lay.residual_history) > 2
    assert np.max(np.abs(lay.phi - 0.5 - np.arctan(lay.xs) / np.pi)) < 1e-10


def test_symmetry(std_layer, two_layer):
    for lay in (std_layer, two_layer):
        assert np.max(np.abs(lay.phi + lay.phi[::-1] - 1)) < 1e-9


def test_residual_history_decreasing(two_layer):
    hist = np.array(two_layer.residual_history)
    assert hist[-1] <= 1e-10
    assert np.all(np.diff(hist[-10:]) < 0)


def test_quadrature_residual(two_layer, two_harmonic):
    r = layer_residual_quadrature(two_layer, two_harmonic, [0.0, 0.5, 2.0, 7.0, -3.0])
    assert np.max(np.abs(r)) < 1e-6


def test_tail_model(two_layer):
    K1 = two_layer.K1
    a = two_layer.alpha
    for x in (30.0, 60.0, -45.0):
        dev = float(two_layer.evaluate(x)) - (x > 0) + 1 / (a * np.pi * x)
        assert abs(dev) <= K1 / x**2


def test_evaluate_continuous_at_edge(two_layer):
    X = two_layer.half_width
    jump = [float(two_layer.evaluate(X * (1 + 1e-12), k) - two_layer.evaluate(X * (1 - 1e-12), k))
            for k in (0, 1)]
    assert abs(jump[0]) < 1e-12
    assert abs(jump[1]) < 1e-7


def test_c0_standard(std_layer):
    assert std_layer.c0 == pytest.approx(2 * np.pi, rel=1e-6)


def test_c0_domain_and_grid_stability(two_harmonic, two_layer):
    wide = solve_layer(two_harmonic, 80.0, 2048)
    fine = solve_layer(two_harmonic, 40.0, 4096)
    assert wide.c0 == pytest.approx(two_layer.c0, rel=1e-3)
    assert fine.c0 == pytest.approx(two_layer.c0, rel=5e-3)


def test_c0_quadratic_homogeneity(std_layer):
    from dataclasses import replace

    doubled = replace(std_layer, phi1=2 * std_layer.phi1)
    assert c0_constant(doubled) == pytest.approx(std_layer.c0 / 4, rel=1e-12)


def test_decay_constants(std_layer, two_layer):
    rep = verify_layer_decay(std_layer)
    assert rep.ok
    assert rep.K0 <= 1 / np.pi <= rep.K1
    rep2 = verify_layer_decay(two_layer)
    assert rep2.ok and 0 < rep2.K0 < rep2.K1 < np.inf


def test_decay_violations_reported(two_layer):
    rep = verify_layer_decay(two_layer, K0=two_layer.K0 * 2, K1=two_layer.K1 / 2)
    assert not rep.ok
    names = {name for name, _ in rep.violations}
    assert "phi1_lower" in names


def test_assemble_round_trip(two_layer, two_harmonic):
    again = assemble_layer(two_harmonic, two_layer.xs, two_layer.u, two_layer.residual_history)
    assert again.c0 == two_layer.c0
    assert np.array_equal(again.phi1, two_layer.phi1)


def test_non_convergence_reported(two_harmonic):
    with pytest.raises(ConvergenceError) as info:
        solve_layer(two_harmonic, 40.0, 1024, tol=1e-10, max_iter=1)
    assert len(info.value.history) >= 1
