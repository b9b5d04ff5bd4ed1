import numpy as np
import pytest

from error_handler import (
    ArityError,
    DomainViolationError,
    GridFormatError,
    InvalidParameterError,
    NonFiniteError,
    ShapeMismatchError,
    UnknownIdentifierError,
)
from fields import Chart
from surface_lang import (
    CATALOG_NAMES,
    SampledSurface,
    catalog,
    eval_jet,
    jets_at,
    load_grid,
    parse_surface,
    print_surface,
    sample_surface,
    save_grid,
    surface_jets,
    surface_position,
)


def test_parse_surface_needs_three_components():
    with pytest.raises(ArityError):
        parse_surface("u1; u2")


def test_unknown_identifier_position_counts_from_full_text():
    with pytest.raises(UnknownIdentifierError) as info:
        parse_surface("u1; u2; w")
    assert info.value.position == 8


def test_printed_surface_parses_back():
    sphere = catalog("sphere", R=2.0)
    assert parse_surface(print_surface(sphere)) == sphere


def test_sphere_jet_at_equator():
    jet = eval_jet(catalog("sphere", R=2.0), (np.pi / 2, 0.0), order=2)
    np.testing.assert_allclose(jet.position, [2.0, 0.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(jet.r(0), [0.0, 0.0, -2.0], atol=1e-15)
    np.testing.assert_allclose(jet.r(1), [0.0, -2.0, 0.0], atol=1e-15)
    # r_11 = -r on a sphere of radius R in these coordinates
    np.testing.assert_allclose(jet.r(0, 0), -jet.position, atol=1e-15)


def test_eval_jet_order_and_domain():
    sphere = catalog("sphere")
    with pytest.raises(InvalidParameterError):
        eval_jet(sphere, (1.0, 1.0), order=4)
    with pytest.raises(DomainViolationError):
        eval_jet(sphere, (4.0, 0.0))
    assert eval_jet(sphere, (1.0, 1.0), order=3).third.shape == (4, 3)


def test_non_finite_jet_is_refused():
    with pytest.raises(NonFiniteError):
        eval_jet(parse_surface("u1; u2; sqrt(u1)"), (0.0, 0.5))


@pytest.mark.parametrize("name", [n for n in CATALOG_NAMES if n != "graph"])
def test_catalog_surfaces_sample_on_their_domain(name):
    surface = sample_surface(catalog(name))
    assert surface.positions.shape == (65, 65, 3)
    assert surface.chart.periodic == catalog(name).periodic


def test_catalog_parameters():
    with pytest.raises(InvalidParameterError):
        catalog("torus", R=1.0, r=2.0)
    with pytest.raises(InvalidParameterError):
        catalog("sphere", R=-1.0)
    with pytest.raises(InvalidParameterError):
        catalog("graph")
    with pytest.raises(InvalidParameterError):
        catalog("klein_bottle")
    graph = sample_surface(catalog("graph", f="u1^2 - u2^2"), Chart((-1, 1), (-1, 1), (5, 5)))
    assert graph.positions[0, 0, 2] == pytest.approx(0.0)
    assert graph.positions[0, 2, 2] == pytest.approx(1.0)


def test_periodic_end_nodes_coincide(torus):
    np.testing.assert_allclose(torus.positions[0], torus.positions[-1], atol=1e-12)
    np.testing.assert_allclose(torus.positions[:, 0], torus.positions[:, -1], atol=1e-12)


def _fine_sphere():
    return sample_surface(catalog("sphere", R=2.0), Chart((0.2, np.pi - 0.2), (0.0, 2.0 * np.pi), (65, 65), (False, True)))


def test_grid_jets_track_analytic_jets():
    sphere = _fine_sphere()
    sampled = SampledSurface(sphere.chart, sphere.positions)
    exact = surface_jets(sphere)
    approx = surface_jets(sampled)
    inside = (slice(2, -2), slice(None))
    np.testing.assert_allclose(approx.first[inside], exact.first[inside], atol=1e-2)


def test_off_grid_jets_from_spline():
    sphere = _fine_sphere()
    sampled = SampledSurface(sphere.chart, sphere.positions)
    jet = jets_at(sampled, np.array(1.0), np.array(0.5), order=2)
    np.testing.assert_allclose(jet.position, eval_jet(catalog("sphere", R=2.0), (1.0, 0.5)).position, atol=1e-4)
    with pytest.raises(DomainViolationError):
        jets_at(sampled, np.array(0.0), np.array(0.5))


def test_grid_file_reload_is_exact(tmp_path, torus):
    path = save_grid(torus, tmp_path / "torus.grid")
    loaded = load_grid(path)
    assert loaded.chart == torus.chart
    np.testing.assert_array_equal(loaded.positions, torus.positions)
    assert loaded.source is None


def test_grid_file_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_grid(tmp_path / "missing.grid")

    bad_header = tmp_path / "bad.grid"
    bad_header.write_text("not-a-grid v1 n1=3 n2=3\n")
    with pytest.raises(GridFormatError):
        load_grid(bad_header)

    header = "weylsheet-grid v1 n1=3 n2=3 u1=0:1 u2=0:1 periodic=0,0\n"
    short = tmp_path / "short.grid"
    short.write_text(header + "0 0 0 0 0\n")
    with pytest.raises(ShapeMismatchError):
        load_grid(short)

    rows = [f"{i} {j} {i} {j} 0" for i in range(3) for j in range(3)]
    rows[4] = "1 1 1 nan 0"
    non_finite = tmp_path / "nan.grid"
    non_finite.write_text(header + "\n".join(rows) + "\n")
    with pytest.raises(GridFormatError):
        load_grid(non_finite)

    rows = [f"{i} {j} {i} {j} 0" for i in range(3) for j in range(3)]
    rows[1], rows[2] = rows[2], rows[1]
    shuffled = tmp_path / "shuffled.grid"
    shuffled.write_text(header + "\n".join(rows) + "\n")
    with pytest.raises(ShapeMismatchError):
        load_grid(shuffled)


def test_sampled_surface_validation():
    chart = Chart((0, 1), (0, 1), (3, 3))
    with pytest.raises(ShapeMismatchError):
        SampledSurface(chart, np.zeros((3, 4, 3)))
    with pytest.raises(NonFiniteError):
        SampledSurface(chart, np.full((3, 3, 3), np.inf))


def test_surface_position_off_grid():
    exact = _fine_sphere()
    sampled = SampledSurface(exact.chart, exact.positions)
    u1, u2 = np.array([0.7, 1.9]), np.array([0.3, 4.0])
    expected = surface_position(exact)(u1, u2)
    np.testing.assert_allclose(np.linalg.norm(expected, axis=-1), 2.0, rtol=1e-14)
    np.testing.assert_allclose(surface_position(sampled)(u1, u2), expected, atol=1e-4)
