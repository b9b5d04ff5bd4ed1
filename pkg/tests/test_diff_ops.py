import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from diff_ops import (
    Box3,
    CausalClass,
    Metric3,
    causal_class,
    cross_h,
    curl3,
    curl_at,
    div_a,
    div_a_christoffel,
    grad_a,
    h_metric,
    hessian_laplacian,
    inner_e,
    inner_h,
    isotropic_pair,
    lambda_ab,
    laplace_beltrami,
    split_isotropic,
)
from error_handler import DegenerateSecondFormError, InvalidParameterError, NonUnitFieldError
from fields import Chart, ScalarField, VectorField
from geom_core import MetricField, curvature_fields, metric_from_expressions, metric_from_surface
from surface_lang import catalog, sample_surface
from thermal import assemble_operator


def test_flat_laplacian_of_quadratic():
    chart = Chart((-1.0, 1.0), (-1.0, 1.0), (9, 9))
    f = ScalarField.from_expression(chart, "u1^2 + u2^2")
    np.testing.assert_allclose(laplace_beltrami(MetricField.flat(chart), f).values, 4.0, atol=1e-10)
    np.testing.assert_allclose(hessian_laplacian(MetricField.flat(chart), f).values, 4.0, atol=1e-12)


def test_gradient_raises_index(sphere2):
    metric = metric_from_surface(sphere2)
    f = ScalarField.from_expression(sphere2.chart, "u2")
    grad = grad_a(metric, f)
    u1, _ = sphere2.chart.mesh()
    np.testing.assert_allclose(grad.values[..., 0], 0.0, atol=1e-14)
    np.testing.assert_allclose(grad.values[..., 1], 1.0 / (4.0 * np.sin(u1) ** 2), rtol=1e-12)


def test_laplacian_of_height_on_sphere(unit_sphere):
    metric = metric_from_surface(unit_sphere)
    z = ScalarField.from_expression(unit_sphere.chart, "cos(u1)")
    u1, _ = unit_sphere.chart.mesh()
    inside = unit_sphere.chart.interior()
    exact = -2.0 * np.cos(u1)
    np.testing.assert_allclose(hessian_laplacian(metric, z).values, exact, atol=1e-12)
    np.testing.assert_allclose(laplace_beltrami(metric, z).values[inside], exact[inside], atol=2e-2)


def _sphere_eigen_errors(n):
    """Max error of Δ_a cos(u1) = −2 cos(u1) on the unit sphere, sampled values only."""
    chart = Chart((0.2, np.pi - 0.2), (0.0, 2.0 * np.pi), (n, n), (False, True))
    metric = metric_from_surface(sample_surface(catalog("sphere", R=1.0), chart))
    u1, _ = chart.mesh()
    f = ScalarField(chart, np.cos(u1))
    exact = -2.0 * np.cos(u1)
    inside = (slice(2, -2), slice(None))
    wide = laplace_beltrami(metric, f).values
    compact = assemble_operator(metric).laplacian(f.values)
    return (float(np.max(np.abs(wide - exact)[inside])), float(np.max(np.abs(compact - exact)[inside])))


def test_sphere_height_is_a_laplacian_eigenfunction_on_fine_grid():
    wide, compact = _sphere_eigen_errors(129)
    assert wide <= 1e-3
    assert compact <= 1e-3


def test_discrete_laplacian_converges_at_second_order():
    errors = np.array([_sphere_eigen_errors(n) for n in (33, 65, 129)])
    ratios = errors[:-1] / errors[1:]
    assert np.all((ratios > 3.5) & (ratios < 4.5))


def test_divergence_forms_agree(torus):
    metric = metric_from_surface(torus)
    v = VectorField.from_expressions(torus.chart, "sin(u2)", "cos(u1)*sin(u2)")
    np.testing.assert_allclose(div_a(metric, v).values, div_a_christoffel(metric, v).values, atol=1e-12)


def test_lambda_refuses_developable_regions(cylinder):
    metric = metric_from_surface(cylinder)
    forms = curvature_fields(cylinder).forms
    f = ScalarField.from_expression(cylinder.chart, "u2")
    with pytest.raises(DegenerateSecondFormError):
        lambda_ab(metric, forms, np.zeros(cylinder.chart.shape), f)


def test_lambda_of_constant_vanishes(sphere2):
    metric = metric_from_surface(sphere2)
    data = curvature_fields(sphere2)
    f = ScalarField.constant(sphere2.chart, 2.0)
    np.testing.assert_allclose(lambda_ab(metric, data.forms, data.curvature.K, f).values, 0.0, atol=1e-12)


def test_lambda_on_unit_sphere_reduces_to_laplacian(unit_sphere):
    # b = a on the unit sphere and K = 1
    metric = metric_from_surface(unit_sphere)
    data = curvature_fields(unit_sphere)
    f = ScalarField.from_expression(unit_sphere.chart, "cos(u1)")
    lam = lambda_ab(metric, data.forms, data.curvature.K, f).values
    u1, _ = unit_sphere.chart.mesh()
    inside = unit_sphere.chart.interior()
    np.testing.assert_allclose(lam[inside], -2.0 * np.cos(u1)[inside], atol=2e-2)


def test_curl_of_rotation():
    box = Box3(((-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)), (9, 9, 9))
    p = box.mesh()
    v = np.stack([-p[..., 1], p[..., 0], np.zeros(p.shape[:-1])], axis=-1)
    curl = curl3(np.eye(3), v, box)
    np.testing.assert_allclose(curl[..., 2], 2.0, atol=1e-12)
    np.testing.assert_allclose(curl[..., :2], 0.0, atol=1e-12)


def test_minkowski_curl_lowers_the_field():
    field = lambda q: np.stack([np.zeros(len(q)), np.zeros(len(q)), q[:, 0]], axis=-1)
    euclid = curl_at(Metric3.minkowski(1), field, (0.3, 0.2, 0.1), 1e-3)
    minkowski = curl_at(Metric3.minkowski(-1), field, (0.3, 0.2, 0.1), 1e-3)
    np.testing.assert_allclose(euclid, [0.0, -1.0, 0.0], atol=1e-10)
    np.testing.assert_allclose(minkowski, [0.0, 1.0, 0.0], atol=1e-10)


def test_curl_rejects_varying_metric():
    box = Box3(((0.0, 1.0), (0.0, 1.0), (0.0, 1.0)), (3, 3, 3))
    g = np.broadcast_to(np.eye(3), (3, 3, 3, 3, 3)).copy()
    g[0, 0, 0] *= 2.0
    with pytest.raises(InvalidParameterError):
        curl3(g, np.zeros((3, 3, 3, 3)), box)


def test_box_validation():
    with pytest.raises(InvalidParameterError):
        Box3(((1.0, 0.0), (0.0, 1.0), (0.0, 1.0)))
    assert Box3(((-4.0, 4.0),) * 3).diameter == pytest.approx(8.0 * np.sqrt(3.0))


def test_causal_classes():
    assert causal_class([1.0, 0.0, 0.0], -1) is CausalClass.SPACELIKE
    assert causal_class([0.0, 0.0, 1.0], -1) is CausalClass.TIMELIKE
    assert causal_class([1.0, 0.0, 1.0], -1) is CausalClass.NULL
    assert causal_class([0.0, 0.0, 1.0], 1) is CausalClass.SPACELIKE


def test_h_metric_requires_unit_direction():
    with pytest.raises(NonUnitFieldError):
        h_metric([0.0, 0.0, 2.0])
    np.testing.assert_allclose(h_metric([0.0, 0.0, 1.0]), np.diag([1.0, 1.0, -1.0]))


vectors = st.lists(st.floats(min_value=-5.0, max_value=5.0, allow_nan=False), min_size=3, max_size=3).map(np.array)


@settings(max_examples=100)
@given(vectors, vectors, vectors)
def test_h_cross_product_is_h_orthogonal(u, v, direction):
    assume(np.linalg.norm(direction) > 1e-3)
    n = direction / np.linalg.norm(direction)
    w = cross_h(u, v, n)
    scale = 1.0 + np.linalg.norm(u) * np.linalg.norm(v) * (np.linalg.norm(u) + np.linalg.norm(v))
    assert abs(inner_h(w, u, n)) <= 1e-12 * scale
    assert abs(inner_h(w, v, n)) <= 1e-12 * scale
    assert inner_h(n, n, n) == pytest.approx(-1.0)


def test_isotropic_pair_is_null_and_splits_back():
    n = np.array([0.0, 0.0, 1.0])
    s = np.array([0.6, 0.8, 0.0])
    e_plus, e_minus = isotropic_pair(s, n)
    assert inner_h(e_plus, e_plus, n) == pytest.approx(0.0, abs=1e-15)
    assert inner_h(e_minus, e_minus, n) == pytest.approx(0.0, abs=1e-15)
    assert inner_h(e_plus, e_minus, n) == pytest.approx(1.0)
    s_back, n_back = split_isotropic(e_plus, e_minus)
    np.testing.assert_allclose(s_back, s, atol=1e-15)
    np.testing.assert_allclose(n_back, n, atol=1e-15)
    with pytest.raises(InvalidParameterError):
        isotropic_pair([1.0, 0.0, 1.0], n)


def test_metric_from_expressions_derivatives_are_exact():
    chart = Chart((0.0, 1.0), (0.0, 1.0), (5, 5))
    metric = metric_from_expressions(chart, "1 + u1^2", "0", "1")
    u1, _ = chart.mesh()
    np.testing.assert_allclose(metric.first_derivatives()[..., 0, 0, 0], 2.0 * u1)
    np.testing.assert_allclose(metric.second_derivatives()[..., 0, 0, 0, 0], 2.0)


def test_inner_e_signatures():
    u, v = np.array([1.0, 2.0, 3.0]), np.array([4.0, -1.0, 2.0])
    assert float(inner_e(u, v, 1)) == pytest.approx(8.0)
    assert float(inner_e(u, v, -1)) == pytest.approx(-4.0)
    np.testing.assert_allclose(inner_e(np.stack([u, v]), np.stack([u, v]), -1), [-4.0, 13.0])
