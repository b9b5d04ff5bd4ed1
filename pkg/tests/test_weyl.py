import numpy as np
import pytest

from error_handler import (
    InvalidParameterError,
    NegativeTemperatureError,
    PathOutsideChartError,
    ThermalProfileError,
)
from fields import Chart, CovectorField, ScalarField
from geom_core import metric_from_expressions, metric_from_surface
from weyl import (
    ThermalProfile,
    WeylData,
    field_strength,
    gauge_transform,
    metricity_residual,
    sigma_of_theta,
    thermal_epsilon,
    thermal_length,
    transport_length,
    weyl_connection,
    weyl_connection_field,
    weyl_scalar,
    weyl_scalar_field,
)


@pytest.fixture
def chart():
    return Chart((-1.0, 1.0), (-1.0, 1.0), (9, 9))


@pytest.fixture
def metric(chart):
    return metric_from_expressions(chart, "1 + 0.1*u1^2", "0.05*u1*u2", "1 + 0.1*u2^2 + 0.02*u1")


def test_weyl_connection_is_semi_metric(chart, metric):
    w = CovectorField.from_expressions(chart, "0.3*u2", "sin(u1)")
    weyl = WeylData(metric, w)
    for node in ((0, 0), (4, 4), (6, 2), (8, 3)):
        np.testing.assert_allclose(metricity_residual(weyl, node), 0.0, atol=1e-12)


def test_levi_civita_connection_is_not_semi_metric_for_nonzero_w(chart, metric):
    w = CovectorField.from_expressions(chart, "0.3*u2", "sin(u1)")
    # w = (−0.15, sin 0.5) at (6, 2)
    node = (6, 2)
    levi_civita = weyl_connection(metric, CovectorField.zeros(chart), node)
    residual = metricity_residual(WeylData(metric, w), node, connection=levi_civita)
    assert np.max(np.abs(residual)) > 1e-3


def test_corrupted_connection_breaks_metricity(chart, metric):
    w = CovectorField.from_expressions(chart, "0.3*u2", "sin(u1)")
    weyl = WeylData(metric, w)
    for node in ((4, 4), (6, 2)):
        gamma = weyl_connection(metric, w, node).copy()
        gamma[0, 1, 1] += 0.1
        assert np.max(np.abs(metricity_residual(weyl, node, connection=gamma))) > 1e-3


def test_weyl_connection_is_symmetric(chart, metric):
    gamma = weyl_connection_field(metric, CovectorField.from_expressions(chart, "u1", "u2"))
    np.testing.assert_allclose(gamma, np.swapaxes(gamma, -2, -1), atol=1e-15)


def test_gauge_transform_leaves_connection_invariant(chart, metric):
    w = CovectorField.from_expressions(chart, "0.3*u2", "sin(u1)")
    sigma = ScalarField.from_expression(chart, "0.2*sin(u1)*u2 + 0.1*u1^2")
    metric2, w2 = gauge_transform(metric, w, sigma)
    np.testing.assert_allclose(weyl_connection_field(metric2, w2), weyl_connection_field(metric, w), atol=1e-12)
    np.testing.assert_allclose(metric2.values, np.exp(-2.0 * sigma.values)[..., None, None] * metric.values)


def test_transport_along_constant_covector(chart):
    eps = CovectorField.from_expressions(chart, "0.1", "0")
    assert transport_length([(0.0, 0.0), (1.0, 0.0)], eps, 2.0) == pytest.approx(2.0 * np.exp(0.1), rel=1e-12)


def test_transport_around_loop_of_exact_form(chart):
    eps = CovectorField.from_expressions(chart, "u2", "u1")
    loop = [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5), (-0.5, -0.5)]
    assert transport_length(loop, eps, 1.5) == pytest.approx(1.5, rel=1e-12)


def test_transport_around_loop_of_closed_curvature(chart):
    # ∮ ε = ∬ (∂_1 ε_2 − ∂_2 ε_1) = 2 · area
    eps = CovectorField.from_expressions(chart, "-u2", "u1")
    loop = [(0.0, 0.0), (0.5, 0.0), (0.5, 0.5), (0.0, 0.5), (0.0, 0.0)]
    assert transport_length(loop, eps, 1.0) == pytest.approx(np.exp(0.5), rel=1e-12)
    F = field_strength(eps)
    np.testing.assert_allclose(F[..., 0, 1], 2.0, atol=1e-12)
    np.testing.assert_allclose(F[..., 1, 0], -2.0, atol=1e-12)


def test_transport_rejects_bad_paths(chart):
    eps = CovectorField.zeros(chart)
    with pytest.raises(PathOutsideChartError):
        transport_length([(0.0, 0.0), (2.0, 0.0)], eps, 1.0)
    with pytest.raises(InvalidParameterError):
        transport_length([(0.0, 0.0)], eps, 1.0)
    with pytest.raises(InvalidParameterError):
        transport_length([(0.0, 0.0), (0.5, 0.0)], eps, 0.0)


def test_weyl_scalar_reduces_to_twice_gauss_curvature(sphere2):
    metric = metric_from_surface(sphere2)
    w = CovectorField.zeros(sphere2.chart)
    np.testing.assert_allclose(weyl_scalar_field(metric, w).values, 0.5, atol=1e-10)
    assert weyl_scalar(metric, w, (3, 3)) == pytest.approx(0.5)


# Thermal profiles

def test_constant_profile():
    profile = ThermalProfile.constant(0.5, theta0=1.0)
    assert profile.theta_range is None
    assert sigma_of_theta(profile, 3.0) == pytest.approx(1.0)
    assert thermal_length(profile, 3.0) == pytest.approx(np.e)


def test_undeclared_range_follows_the_temperatures():
    # temperatures below θ_0 are valid without a declared range
    profile = ThermalProfile.constant(0.5, theta0=2.0)
    assert sigma_of_theta(profile, 0.5) == pytest.approx(-0.75)
    assert sigma_of_theta(profile, 40.0) == pytest.approx(19.0)
    # k/θ is admissible above θ = k only
    inverse = ThermalProfile.inverse(2.0, theta0=3.0)
    assert sigma_of_theta(inverse, 6.0) == pytest.approx(2.0 * np.log(2.0), rel=1e-10)
    with pytest.raises(ThermalProfileError):
        sigma_of_theta(inverse, 1.0)
    theta = ScalarField.from_expression(Chart((0.0, 1.0), (0.0, 1.0), (5, 5)), "0.5 + u1")
    assert thermal_epsilon(ThermalProfile.constant(0.5, theta0=1.0), theta).violation_count == 0


def test_inverse_profile_gives_proportional_length():
    profile = ThermalProfile.inverse(1.0, theta0=1.0, l0=2.0, theta_range=(1.0, 10.0))
    assert thermal_length(profile, 4.0) == pytest.approx(8.0, rel=1e-10)


def test_linear_and_tabulated_profiles():
    linear = ThermalProfile.linear(0.1, 0.01, theta0=0.0)
    assert sigma_of_theta(linear, 1.0) == pytest.approx(0.105, rel=1e-10)
    table = ThermalProfile.tabulated([0.0, 1.0, 2.0], [0.0, 0.5, 0.5], theta0=0.0)
    assert sigma_of_theta(table, 2.0) == pytest.approx(0.75, rel=1e-10)
    np.testing.assert_allclose(sigma_of_theta(table, np.array([0.0, 1.0])), [0.0, 0.25], atol=1e-12)


def test_profile_from_spec():
    profile = ThermalProfile.from_spec({"kind": "constant", "beta": 0.2, "theta0": 2.0, "range": [0, 5]})
    assert profile.theta_range == (0.0, 5.0)
    with pytest.raises(InvalidParameterError):
        ThermalProfile.from_spec({"kind": "constant"})
    with pytest.raises(InvalidParameterError):
        ThermalProfile.from_spec({"kind": "cubic"})


def test_profile_admissibility():
    with pytest.raises(ThermalProfileError):
        ThermalProfile.constant(1.5, theta0=1.0)
    with pytest.raises(NegativeTemperatureError):
        ThermalProfile.constant(0.5, theta0=-1.0)
    with pytest.raises(ThermalProfileError):
        ThermalProfile.constant(0.5, theta0=1.0, theta_range=(2.0, 3.0))
    with pytest.raises(ThermalProfileError):
        ThermalProfile.tabulated([1.0, 0.0], [0.1, 0.2], theta0=0.5)
    # k/θ exceeds 1 below θ = k
    with pytest.raises(ThermalProfileError):
        ThermalProfile.inverse(2.0, theta0=3.0, theta_range=(1.0, 4.0))


def test_temperature_outside_range_is_refused():
    profile = ThermalProfile.constant(0.5, theta0=1.0, theta_range=(0.0, 10.0))
    with pytest.raises(ThermalProfileError):
        sigma_of_theta(profile, 20.0)
    with pytest.raises(NegativeTemperatureError):
        sigma_of_theta(profile, -1.0)


def test_thermal_epsilon_is_exact():
    profile = ThermalProfile.constant(0.5, theta0=0.0, theta_range=(0.0, 1.0))
    theta = ScalarField.from_expression(Chart((0.0, 1.0), (0.0, 1.0), (9, 9)), "u1*u2")
    result = thermal_epsilon(profile, theta)
    u1, u2 = theta.chart.mesh()
    np.testing.assert_allclose(result.eps.values[..., 0], 0.5 * u2)
    np.testing.assert_allclose(result.eps.values[..., 1], 0.5 * u1)
    np.testing.assert_allclose(result.sigma.values, 0.5 * u1 * u2, atol=1e-12)
    np.testing.assert_allclose(field_strength(result.eps), 0.0, atol=1e-12)
    np.testing.assert_allclose(result.weyl_covector().values, 2.0 * result.eps.values)
    assert result.violation_count == 0
    assert result.negative_components == 0


def test_thermal_epsilon_flags_negative_components():
    profile = ThermalProfile.constant(0.5, theta0=0.0, theta_range=(0.0, 2.0))
    theta = ScalarField.from_expression(Chart((0.0, 1.0), (0.0, 1.0), (5, 5)), "1 - u1")
    result = thermal_epsilon(profile, theta)
    assert result.negative_components == 25
    # cooling directions are not admissibility violations
    assert result.violation_count == 0
