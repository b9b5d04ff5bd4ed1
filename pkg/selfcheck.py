"""
Self-check suite: the geometric identities the library relies on, evaluated on
fixed inputs and printed as a PASS/FAIL table. Output is deterministic.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

from congruence import (
    congruence_catalog,
    frenet_at,
    frenet_residuals,
    normal_congruence_measure,
    surface_coupling_residual,
)
from diff_ops import cross_h, inner_h
from estimates import boundary_ratio, effective_thickness, to_nm
from fields import Chart, CovectorField, ScalarField
from geom_core import curvature_fields, gauss_curvature_field, metric_from_expressions, metric_from_surface
from monitoring import track_stage
from surface_lang import catalog, sample_surface
from thermal import ThermalStateProblem, conformal_curvature, conformal_metric, solve_sigma
from variational import EnergyDensity, el_residual, total_energy
from weyl import WeylData, gauge_transform, metricity_residual, weyl_connection_field

logger = logging.getLogger("weylsheet.selfcheck")


@dataclass
class CheckResult:
    name: str
    value: float
    tolerance: float
    passed: bool
    note: str = ""


# Each check returns (measured defect, tolerance)
Check = Callable[[], Tuple[float, float]]


def _torus():
    return sample_surface(catalog("torus", R=3.0, r=1.0), Chart((0.0, 2 * np.pi), (0.0, 2 * np.pi), (33, 33), (True, True)))


def _sphere(R: float = 1.0, n: int = 33, margin: float = 0.2):
    return sample_surface(catalog("sphere", R=R), Chart((margin, np.pi - margin), (0.0, 2 * np.pi), (n, n), (False, True)))


def _test_metric(chart: Chart):
    return metric_from_expressions(chart, "1 + 0.1*u1^2", "0.05*u1*u2", "1 + 0.1*u2^2 + 0.02*u1")


def check_theorema_egregium():
    surface = _torus()
    fields = curvature_fields(surface)
    intrinsic = gauss_curvature_field(metric_from_surface(surface))
    defect = np.max(np.abs(intrinsic - fields.curvature.K)) / np.max(np.abs(fields.curvature.K))
    return float(defect), 1e-6


def check_metricity():
    chart = Chart((-1.0, 1.0), (-1.0, 1.0), (9, 9))
    w = CovectorField.from_expressions(chart, "0.3*u2", "sin(u1)")
    # node (6, 2) is u = (0.5, -0.5), where w does not vanish
    residual = metricity_residual(WeylData(_test_metric(chart), w), (6, 2))
    return float(np.max(np.abs(residual))), 1e-8


def check_gauge_invariance():
    chart = Chart((-1.0, 1.0), (-1.0, 1.0), (9, 9))
    metric = _test_metric(chart)
    w = CovectorField.from_expressions(chart, "0.3*u2", "sin(u1)")
    sigma = ScalarField.from_expression(chart, "0.2*sin(u1)*u2 + 0.1*u1^2")
    metric2, w2 = gauge_transform(metric, w, sigma)
    before = weyl_connection_field(metric, w)
    after = weyl_connection_field(metric2, w2)
    return float(np.max(np.abs(after - before))), 1e-8


def check_flat_solver():
    chart = Chart((0.0, 1.0), (0.0, 1.0), (33, 33))
    boundary = ScalarField.from_expression(chart, "u1")
    problem = ThermalStateProblem(metric_from_expressions(chart, "1", "0", "1"),
                                  ScalarField.constant(chart, 0.0), 0.0, boundary)
    report = solve_sigma(problem)
    return float(np.max(np.abs(report.sigma.values - chart.mesh()[0]))), 1e-6


def check_sphere_trivial_state():
    surface = _sphere()
    K = ScalarField(surface.chart, curvature_fields(surface).curvature.K)
    report = solve_sigma(ThermalStateProblem(metric_from_surface(surface), K, 2.0))
    return float(np.max(np.abs(report.sigma.values))), 1e-6


def check_conformal_law():
    surface = _torus()
    metric = metric_from_surface(surface)
    K = gauss_curvature_field(metric)
    sigma = ScalarField.from_expression(surface.chart, "0.1*sin(u1)*cos(u2)")
    predicted = conformal_curvature(K, sigma, metric, stencil="hessian").values
    direct = gauss_curvature_field(conformal_metric(metric, sigma))
    return float(np.max(np.abs(predicted - direct))), 1e-8


def check_helix_frame():
    frame = frenet_at(congruence_catalog("helix", b=4.0), (3.0, 0.0, 0.0))
    return max(abs(frame.kappa - 0.12), abs(frame.tau - 0.16)), 1e-6


def check_frenet_relations():
    residuals = frenet_residuals(congruence_catalog("helix", b=4.0), (3.0, 0.0, 0.0))
    return max(residuals.values()), 1e-5


def check_minkowski_frenet():
    residuals = frenet_residuals(congruence_catalog("minkowski_helix", b=1.0), (0.0, 0.5, 2.0))
    return max(residuals.values()), 1e-5


def check_geodesic_normal_congruence():
    return abs(normal_congruence_measure(congruence_catalog("meridian"), (0.6, 0.0, 0.8))), 1e-6


def check_sheared_detector():
    # passes when the measure is far from zero
    measure = abs(normal_congruence_measure(congruence_catalog("sheared", k=1.0), (0.0, 1.0, 0.0)))
    return 1e-2 / max(measure, 1e-300), 1.0


def check_sphere_coupling():
    frame = frenet_at(congruence_catalog("meridian"), (0.6, 0.0, 0.8))
    return abs(surface_coupling_residual(1.0, 1.0, frame.kappa, frame.tau)), 1e-6


def check_willmore_energy():
    sphere = sample_surface(catalog("sphere", R=2.0), Chart((0.0, np.pi), (0.0, 2 * np.pi), (129, 129), (False, True)))
    return abs(total_energy(sphere, EnergyDensity.willmore()) - 4.0 * np.pi), 1e-3


def check_willmore_residual():
    residual = el_residual(_sphere(), EnergyDensity.willmore())
    return float(np.max(np.abs(residual.values))), 1e-4


def check_minkowski_algebra():
    n = np.array([0.0, 0.0, 1.0])
    u, v = np.array([1.0, 2.0, 0.5]), np.array([-0.3, 0.7, 2.0])
    w = cross_h(u, v, n)
    return max(abs(inner_h(n, n, n) + 1.0), abs(inner_h(w, u, n)), abs(inner_h(w, v, n))), 1e-12


def check_effective_thickness():
    h = effective_thickness(1.0, 2.12e3)
    return abs(h - np.sqrt(12.0 / 2120.0)) / h, 1e-12


def check_boundary_ratio():
    ratio = boundary_ratio(to_nm(1.42, "angstrom"), to_nm(0.75, "um"))
    return abs(ratio - 5e-4) / 5e-4, 0.02


CHECKS: List[Tuple[str, Check]] = [
    ("theorema egregium (torus)", check_theorema_egregium),
    ("weyl metricity", check_metricity),
    ("gauge invariance", check_gauge_invariance),
    ("flat thermal solver", check_flat_solver),
    ("sphere trivial thermal state", check_sphere_trivial_state),
    ("conformal curvature law", check_conformal_law),
    ("helix curvature and torsion", check_helix_frame),
    ("frenet relations", check_frenet_relations),
    ("frenet relations (minkowski)", check_minkowski_frenet),
    ("geodesic normal congruence", check_geodesic_normal_congruence),
    ("sheared congruence detector", check_sheared_detector),
    ("sphere surface coupling", check_sphere_coupling),
    ("willmore energy of sphere", check_willmore_energy),
    ("willmore euler-lagrange residual", check_willmore_residual),
    ("minkowski h-algebra", check_minkowski_algebra),
    ("effective thickness", check_effective_thickness),
    ("boundary atom ratio", check_boundary_ratio),
]


@track_stage("selfcheck")
def run_selfcheck() -> List[CheckResult]:
    results = []
    for name, check in CHECKS:
        try:
            value, tolerance = check()
            results.append(CheckResult(name, float(value), tolerance, bool(value <= tolerance)))
        except Exception as e:
            logger.error(f"check {name!r} raised {type(e).__name__}: {e}")
            results.append(CheckResult(name, float("nan"), 0.0, False, type(e).__name__))
    return results


def format_table(results: List[CheckResult]) -> str:
    lines = [f"{'check':<34} {'defect':>12} {'tolerance':>10}  result", "-" * 66]
    for r in results:
        verdict = "PASS" if r.passed else "FAIL"
        note = f" ({r.note})" if r.note else ""
        lines.append(f"{r.name:<34} {r.value:>12.3e} {r.tolerance:>10.1e}  {verdict}{note}")
    passed = sum(r.passed for r in results)
    lines.append("-" * 66)
    lines.append(f"{passed}/{len(results)} checks passed")
    return "\n".join(lines)


def print_table(results: List[CheckResult]):
    print(format_table(results))


if __name__ == "__main__":
    table = run_selfcheck()
    print_table(table)
    print("✅ all checks passed" if all(r.passed for r in table) else "❌ some checks failed")
