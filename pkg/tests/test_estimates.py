import math

import pytest

from error_handler import InvalidParameterError
from estimates import (
    ESTIMATE_LABEL,
    MaterialConstants,
    boundary_ratio,
    critical_strain,
    effective_thickness,
    estimate_report,
    from_nm,
    to_nm,
)


def test_graphene_thickness_is_below_one_angstrom():
    h = effective_thickness(1.0, 2.12e3)
    assert h == pytest.approx(0.07524, rel=1e-3)
    assert from_nm(h, "angstrom") < 1.0
    assert MaterialConstants().thickness == pytest.approx(h)


def test_boundary_ratio_for_micron_flake():
    ratio = boundary_ratio(to_nm(1.42, "angstrom"), to_nm(0.75, "um"))
    assert ratio == pytest.approx(4.92e-4, rel=1e-3)


def test_critical_strain():
    assert critical_strain(0.1, 10.0, 0.0) == pytest.approx(math.pi ** 2 / 3.0 * 1e-4)
    # thinner sheets buckle sooner
    assert critical_strain(0.05, 10.0, 0.165) < critical_strain(0.1, 10.0, 0.165)


@pytest.mark.parametrize("call", [
    lambda: effective_thickness(0.0, 1.0),
    lambda: effective_thickness(1.0, float("nan")),
    lambda: critical_strain(1.0, 0.5, 0.1),
    lambda: critical_strain(0.1, 1.0, 1.0),
    lambda: boundary_ratio(1.0, 0.5),
    lambda: to_nm(1.0, "mile"),
    lambda: MaterialConstants(nu=0.5),
    lambda: MaterialConstants(k=-1.0),
])
def test_invalid_inputs(call):
    with pytest.raises(InvalidParameterError):
        call()


def test_estimate_report():
    report = estimate_report(MaterialConstants(), length_nm=10.0, radius_nm=750.0)
    assert report["label"] == ESTIMATE_LABEL
    assert report["effective_thickness_below_1A"] is True
    assert report["units"] == {"energy": "eV", "length": "nm"}
    assert report["boundary_ratio"] == pytest.approx(4.92e-4, rel=1e-3)
    assert 0.0 < report["critical_strain"] < 1e-3
