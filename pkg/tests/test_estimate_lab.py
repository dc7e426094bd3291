import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wignerkin import estimate_lab as lab


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 5.0), st.floats(0.3, 2.5), st.floats(1.0, 200.0))
def test_line_integral_closed_form_matches_quadrature(distance, beta, radius):
    closed = float(lab.line_integral(distance, beta, radius))
    np.testing.assert_allclose(closed, lab.line_integral_quadrature(distance, beta, radius), rtol=1e-9)


def test_untruncated_line_integral():
    assert np.isinf(lab.line_integral(0.0, 0.5))
    np.testing.assert_allclose(lab.line_integral(0.0, 1.0), np.pi / 2)


def test_graded_nodes_integrate_smooth_and_kinked_functions():
    x, w = lab.graded_nodes([0.0], 50.0, 8)
    np.testing.assert_allclose(w.sum(), 100.0, rtol=1e-12)
    np.testing.assert_allclose(w @ np.exp(-np.abs(x)), 2 * (1 - np.exp(-50.0)), rtol=1e-10)


def test_radial_power_integral():
    np.testing.assert_allclose(lab.radial_power_integral(1.25), lab.radial_power_closed(1.25), rtol=1e-8)
    assert np.isinf(lab.radial_power_closed(0.9))


def test_loss_integral_at_origin_factorizes():
    probe = lab.eval_loss_K(0.0, 0.0, 0.0, 1.0, 1.0)
    np.testing.assert_allclose(probe.value, np.pi ** 3 / 16, rtol=1e-6)
    np.testing.assert_allclose(probe.value, np.prod(lab.loss_K_origin_factors(1.0, 1.0)), rtol=1e-6)
    assert probe.classification == "finite"
    row = probe.row()
    assert row["target"] == "K_loss" and row["value"] == probe.value


def test_gain_first_integral_at_origin():
    probe = lab.eval_gain_I1((0.0, 0.0), 1.0)
    np.testing.assert_allclose(probe.value, lab.gain_I1_origin(1.0), rtol=1e-6)


def test_lab_is_two_dimensional_only():
    with pytest.raises(ValueError):
        lab.eval_loss_K(0.0, 0.0, 0.0, d=3)


@pytest.mark.parametrize("exponent, diverges", [(-0.5, False), (0.0, True), (0.3, True)])
def test_shell_series_divergence_detection(exponent, diverges):
    sums = lab.shell_series(1.0 + exponent, 2, 30, 0)
    assert lab.series_diverges(sums) is diverges


@pytest.mark.parametrize("which", ["I", "Iprime"])
@pytest.mark.parametrize("beta, eps", [(1.5, 0.05), (0.6, 0.05), (0.4, 0.2)])
def test_dyadic_bound_holds_and_matches_exponent(which, beta, eps):
    r = lab.dyadic_check((30.0, 1.0), beta, eps, 40, which)
    assert r.direct <= r.bound
    assert r.divergent == (r.exponent >= 0) == lab.series_diverges(r.partial_sums)


def test_growth_slope_of_power_law():
    xs = np.array([1.0, 2.0, 4.0, 8.0])
    np.testing.assert_allclose(lab.growth_slope(xs, 3 * xs ** 0.7), 0.7)
