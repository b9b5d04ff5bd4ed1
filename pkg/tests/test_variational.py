import numpy as np
import pytest

from error_handler import DomainViolationError, InvalidParameterError, NonFiniteError, SurfaceSyntaxError
from fields import Chart
from surface_lang import catalog, parse_surface, sample_surface
from variational import (
    EnergyDensity,
    density_partials,
    el_residual,
    energy_summary,
    surface_area,
    total_energy,
    willmore_operator,
)


def _full_sphere(R, n=129):
    return sample_surface(catalog("sphere", R=R), Chart((0.0, np.pi), (0.0, 2.0 * np.pi), (n, n), (False, True)))


@pytest.mark.parametrize("R", [1.0, 2.0, 5.0])
def test_willmore_energy_of_sphere_is_scale_free(R):
    assert total_energy(_full_sphere(R), EnergyDensity.willmore()) == pytest.approx(4.0 * np.pi, abs=1e-3)


def test_areas(plane):
    assert surface_area(_full_sphere(1.0)) == pytest.approx(4.0 * np.pi, rel=1e-4)
    assert surface_area(plane, ((0.0, 1.0), (0.0, 1.0))) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(DomainViolationError):
        surface_area(plane, ((0.0, 2.0), (0.0, 1.0)))


def test_density_partials_are_exact():
    e, e_H, e_K = density_partials(EnergyDensity.expression("H^2 + 3*K"), 2.0, 1.0)
    np.testing.assert_allclose([e, e_H, e_K], [7.0, 4.0, 3.0], rtol=1e-14)
    with pytest.raises(NonFiniteError):
        density_partials(EnergyDensity.expression("log(H)"), -1.0, 0.0)


def test_density_constructors():
    assert EnergyDensity.linear(a=1.0).text == "1.0*H"
    assert EnergyDensity.linear().text == "0.0"
    assert not EnergyDensity.willmore().depends_on_K
    assert EnergyDensity.linear(b=2.0).depends_on_K
    assert EnergyDensity.from_spec("H^2 - K").depends_on_K
    assert EnergyDensity.from_spec({"kind": "constant", "c": 2.0}).text == "2.0"
    with pytest.raises(SurfaceSyntaxError):
        EnergyDensity.expression("H + u1")


@pytest.mark.parametrize("spec", [42, {"c": 1.0}, {"kind": "cubic"}, {"kind": "expression"}])
def test_density_spec_errors(spec):
    with pytest.raises(InvalidParameterError):
        EnergyDensity.from_spec(spec)


def test_area_density_residual_is_mean_curvature(sphere2):
    residual = el_residual(sphere2, EnergyDensity.constant(1.0))
    np.testing.assert_allclose(residual.values, -1.0, atol=1e-12)


def test_catenoid_is_critical_for_area():
    catenoid = sample_surface(catalog("catenoid", c=1.0), Chart((0.0, 2 * np.pi), (-1.0, 1.0), (33, 17), (True, False)))
    np.testing.assert_allclose(el_residual(catenoid, EnergyDensity.constant(1.0)).values, 0.0, atol=1e-10)


def test_spheres_are_willmore_surfaces(sphere2):
    np.testing.assert_allclose(el_residual(sphere2, EnergyDensity.willmore()).values, 0.0, atol=1e-8)
    np.testing.assert_allclose(willmore_operator(sphere2).values, 0.0, atol=1e-8)


def test_gauss_curvature_density_is_null_lagrangian(sphere2):
    np.testing.assert_allclose(el_residual(sphere2, EnergyDensity.linear(b=1.0)).values, 0.0, atol=1e-8)


def test_mean_curvature_density_on_cylinder(cylinder):
    # residual reduces to −K, which vanishes on a cylinder
    np.testing.assert_allclose(el_residual(cylinder, EnergyDensity.linear(a=1.0)).values, 0.0, atol=1e-10)


def test_energy_summary(sphere2):
    summary = energy_summary(sphere2, EnergyDensity.willmore())
    assert summary["kind"] == "willmore"
    assert summary["el_residual_max"] < 1e-8
    assert summary["energy"] == pytest.approx(0.25 * summary["area"], rel=1e-10)


def _bumpy_sphere(coeffs, n=129):
    """Unit sphere with radius 1 + a·(xy, z², xz), smooth through the poles."""
    x, y, z = "sin(u1)*cos(u2)", "sin(u1)*sin(u2)", "cos(u1)"
    bump = f"(({coeffs[0]!r})*{x}*{y} + ({coeffs[1]!r})*{z}^2 + ({coeffs[2]!r})*{x}*{z})"
    radius = f"(1 + {bump})"
    text = f"{radius}*{x}; -{radius}*{y}; {radius}*{z}"
    return sample_surface(parse_surface(text), Chart((0.0, np.pi), (0.0, 2.0 * np.pi), (n, n), (False, True)))


def test_gauss_curvature_energy_is_a_topological_constant():
    density = EnergyDensity.linear(b=0.7, c=0.5)

    def shape_term(surface):
        return total_energy(surface, density) - 0.5 * surface_area(surface)

    reference = shape_term(_bumpy_sphere((0.0, 0.0, 0.0)))
    rng = np.random.default_rng(11)
    for _ in range(3):
        coeffs = tuple(float(c) for c in rng.uniform(-1e-3, 1e-3, size=3))
        assert abs(shape_term(_bumpy_sphere(coeffs)) - reference) <= 1e-5
    assert reference == pytest.approx(0.7 * 4.0 * np.pi, rel=1e-3)


def test_willmore_residual_matches_willmore_operator_on_torus(torus):
    residual = el_residual(torus, EnergyDensity.willmore()).values
    np.testing.assert_allclose(residual, willmore_operator(torus).values, atol=1e-6)
    # H varies on the torus, so the residual does not vanish
    assert np.max(np.abs(residual)) > 1e-3
