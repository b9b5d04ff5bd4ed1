import numpy as np
import pytest

from error_handler import ConfigError, InvalidParameterError
from run_config import RunConfig
from surface_lang import save_grid


def test_catalog_surface_uses_documented_domain():
    cfg = RunConfig.from_dict({"surface": {"catalog": "sphere", "params": {"R": 2}}, "chart": {"resolution": [9, 9]}})
    surface = cfg.build_surface()
    assert surface.chart.resolution == (9, 9)
    assert surface.chart.u1_range == pytest.approx((0.0, np.pi))
    assert surface.chart.periodic == (False, True)


def test_expression_surface_with_chart():
    cfg = RunConfig.from_dict({
        "surface": {"expr": "u1; u2; u1*u2"},
        "chart": {"u1": [-1, 1], "u2": [0, 2], "resolution": [5, 5]},
    })
    surface = cfg.build_surface()
    assert surface.positions[-1, -1, 2] == pytest.approx(2.0)


def test_expression_surface_needs_ranges():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"surface": {"expr": "u1; u2; 0"}}).build_surface()


def test_bad_chart_is_a_config_error():
    cfg = RunConfig.from_dict({"surface": {"catalog": "plane"}, "chart": {"resolution": [2, 5]}})
    with pytest.raises(ConfigError):
        cfg.build_surface()


@pytest.mark.parametrize("data", [
    [],
    {"chart": {}},
    {"surface": {}, "extra": 1},
    {"surface": {"catalog": "plane", "expr": "u1; u2; 0"}},
    {"surface": {"catalog": "plane"}, "signature": 2},
    {"surface": {"catalog": "plane"}, "tolerances": {"solver": -1}},
    {"surface": {"catalog": "plane"}, "thermal": "hot"},
    {"surface": {"catalog": "plane"}, "congruence": ["helix"]},
])
def test_invalid_documents(data):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(data)


def test_load_errors(tmp_path, write_config):
    with pytest.raises(FileNotFoundError):
        RunConfig.load(str(tmp_path / "missing.json"))
    broken = tmp_path / "broken.json"
    broken.write_text("{ not json")
    with pytest.raises(ConfigError):
        RunConfig.load(str(broken))
    with pytest.raises(FileNotFoundError):
        RunConfig.load(write_config({"surface": {"grid": "nowhere.grid"}}))


def test_grid_paths_resolve_against_config_directory(tmp_path, write_config, torus):
    save_grid(torus, tmp_path / "torus.grid")
    cfg = RunConfig.load(write_config({"surface": {"grid": "torus.grid"}}))
    loaded = cfg.build_surface()
    np.testing.assert_array_equal(loaded.positions, torus.positions)


def test_overrides_and_sections():
    cfg = RunConfig.from_dict({
        "surface": {"catalog": "plane"},
        "congruence": {"field": "helix", "samples": [[0.1, 0.2]]},
        "tolerances": {"solver": 1e-6},
    })
    assert cfg.tolerance("solver", 1e-8) == 1e-6
    assert cfg.tolerance("flat_state", 1e-6) == 1e-6
    override = cfg.with_overrides(output_dir="elsewhere", tolerance=1e-10)
    assert override.output_dir == "elsewhere"
    assert override.tolerance("solver", 1e-8) == 1e-10
    assert cfg.tolerance("solver", 1e-8) == 1e-6
    assert cfg.samples() == [(0.1, 0.2)]
    assert cfg.require("congruence")["field"] == "helix"
    with pytest.raises(ConfigError):
        cfg.require("thermal")


def test_invalid_parameter_is_a_config_error():
    assert issubclass(InvalidParameterError, ConfigError)
