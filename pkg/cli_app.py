"""
weylsheet command line: curvature, thermal state, congruences, energies,
material estimates, OBJ export and the self-check suite.

    python cli_app.py curvature --config run.json --out-dir out
    python cli_app.py estimate --k 1 --E2D 2120
"""

import argparse
import json
import logging
import sys
from typing import Dict, List, Optional

import numpy as np

import config
from congruence import (
    CongruenceField,
    FLAT_STATE_TOLERANCE,
    H_CONVENTION_FACTOR,
    congruence_catalog,
    curl_decompose,
    darboux,
    default_samples,
    flat_state_report,
    frenet_at,
    frenet_residuals,
    mean_curv_from_normal,
    normal_congruence_measure,
    normal_extension,
    shape_from_congruence,
    surface_coupling_residual,
    CONGRUENCE_NAMES,
    NORMAL_EXTENSIONS,
)
from diff_ops import Box3
from error_handler import (
    ConfigError,
    DevelopableSurfaceError,
    DomainViolationError,
    EXIT_OK,
    IndeterminateFrameError,
    NonUnitFieldError,
    handle_command_error,
)
from estimates import MaterialConstants, estimate_report, to_nm
from fields import ScalarField, VectorField
from geom_core import curvature_fields, developability, metric_from_surface, surface_mean_gauss, trim_degenerate_boundary
from monitoring import monitor
from report_writer import ReportWriter, summarize
from run_config import RunConfig
from surface_lang import SampledSurface, jets_at, save_grid
from thermal import ThermalStateProblem, conformal_curvature, shape_parameter, sign_constancy, solve_sigma
from variational import EnergyDensity, el_residual, surface_area, total_energy
from weyl import ThermalProfile, field_strength, thermal_epsilon, thermal_length

logger = logging.getLogger("weylsheet.cli")


def _load(args) -> RunConfig:
    if not args.config:
        raise ConfigError(f"'{args.command}' needs --config <path>")
    return RunConfig.load(args.config).with_overrides(args.out_dir, args.tolerance)


def _analysis_surface(cfg: RunConfig) -> SampledSurface:
    return trim_degenerate_boundary(cfg.build_surface())


def _thermal_length(cfg: RunConfig) -> Optional[float]:
    thermal = cfg.thermal or {}
    if "profile" not in thermal:
        return None
    profile = ThermalProfile.from_spec(thermal["profile"])
    return thermal_length(profile, float(thermal.get("theta", profile.theta0)))


# ============================================
# Commands
# ============================================

@handle_command_error("curvature")
def cmd_curvature(args) -> int:
    cfg = _load(args)
    surface = _analysis_surface(cfg)
    fields = curvature_fields(surface, cfg.signature)
    forms, data = fields.forms, fields.curvature
    chart = surface.chart

    writer = ReportWriter(cfg.output_dir)
    writer.scalar_csv("K.csv", chart, data.K, "K")
    writer.scalar_csv("H.csv", chart, data.H, "H")
    writer.vector_csv("principal.csv", chart, np.stack([data.kappa1, data.kappa2], -1), ("kappa1", "kappa2"))
    writer.vector_csv("forms.csv", chart,
                      np.stack([forms.E, forms.F, forms.G, forms.L, forms.M, forms.N], -1),
                      ("E", "F", "G", "L", "M", "N"))

    dev = developability(surface)
    summary = {
        "resolution": list(chart.resolution),
        "signature": cfg.signature,
        "K": summarize(data.K),
        "H": summarize(data.H),
        "h2_ge_k": bool(np.all(data.h2_ge_k)),
        "developable": dev.is_developable,
        "developability_measure": dev.measure,
        "developability_tolerance": dev.tolerance,
    }
    writer.json("developability.json", summary)
    print(f"✅ curvature: K mean {summary['K']['mean']:.6g}, developable={dev.is_developable}")
    return EXIT_OK


@handle_command_error("thermal")
def cmd_thermal(args) -> int:
    cfg = _load(args)
    thermal = cfg.require("thermal")
    surface = _analysis_surface(cfg)
    chart = surface.chart
    metric = metric_from_surface(surface)
    data = curvature_fields(surface).curvature
    K = ScalarField(chart, data.K)
    r = float(thermal.get("r", 0.0))

    boundary = thermal.get("boundary")
    if boundary is not None:
        boundary = (ScalarField.constant(chart, boundary) if isinstance(boundary, (int, float))
                    else ScalarField.from_expression(chart, boundary))
    problem = ThermalStateProblem(metric, K, r, boundary, tolerance=cfg.tolerance("solver", config.SOLVER_TOLERANCE))
    solution = solve_sigma(problem)

    K_theta = conformal_curvature(K, solution.sigma, metric, stencil="compact")
    verdict = sign_constancy(K_theta, r, chart=chart)

    writer = ReportWriter(cfg.output_dir)
    writer.scalar_csv("sigma.csv", chart, solution.sigma.values, "sigma")
    writer.scalar_csv("Ktheta.csv", chart, K_theta.values, "K_theta")

    report: Dict[str, object] = {
        "r": r,
        "iterations": solution.iterations,
        "residual": solution.residual,
        "tolerance": solution.tolerance,
        "converged": solution.converged,
        "compatibility_defect": solution.compatibility_defect,
        "sign_constancy": verdict,
        "sigma": summarize(solution.sigma.values),
        "K_theta": summarize(K_theta.values),
    }

    l_theta = _thermal_length(cfg)
    report["l_theta"] = l_theta
    try:
        nu = shape_parameter(data.H, data.K, l_theta or 1.0)
        writer.scalar_csv("nu.csv", chart, nu.nu, "nu")
        report["nu"] = {"defined_nodes": nu.defined, **summarize(nu.nu, nu.mask)}
    except DevelopableSurfaceError as e:
        report["nu"] = {"defined_nodes": 0, "undefined": str(e)}

    if "theta_field" in thermal and "profile" in thermal:
        theta = ScalarField.from_expression(chart, thermal["theta_field"])
        eps = thermal_epsilon(ThermalProfile.from_spec(thermal["profile"]), theta)
        report["thermal_covector"] = {
            "violations": eps.violation_count,
            "negative_components": eps.negative_components,
            "field_strength_max": float(np.max(np.abs(field_strength(eps.eps)))),
        }

    writer.json("report.json", report)
    mark = "✅" if verdict["sign_constant"] else "⚠️ "
    print(f"{mark} thermal: {solution.iterations} iteration(s), residual {solution.residual:.3e}, "
          f"K_θ {verdict['expected_sign']}={verdict['sign_constant']}")
    return EXIT_OK


def _congruence_field(spec: Dict[str, object]) -> CongruenceField:
    box = Box3(tuple(tuple(float(v) for v in axis) for axis in spec["box"])) if "box" in spec else None
    name = spec.get("field")
    if not name:
        raise ConfigError("congruence section needs a 'field' (catalog name or 'vx; vy; vz')")
    if name in CONGRUENCE_NAMES:
        return congruence_catalog(name, box, **spec.get("params", {}))
    return CongruenceField.from_expressions(name, box, int(spec.get("signature", 1)))


def _sample_row(surface: SampledSurface, field: CongruenceField, normal: Optional[CongruenceField],
               u, l_theta: Optional[float]) -> Dict[str, object]:
    point = jets_at(surface, np.array(u[0]), np.array(u[1]), order=1).position
    H, K = surface_mean_gauss(surface, u)
    row: Dict[str, object] = {"u": list(u), "point": point, "H": H, "K": K}
    try:
        if normal is not None:
            H_n, K_n = mean_curv_from_normal(normal, point, field)
            row["normal_extension"] = {"H": H_n, "K": K_n}
        frame = frenet_at(field, point)
    except (IndeterminateFrameError, NonUnitFieldError, DomainViolationError) as e:
        row["frame"] = None
        row["error"] = str(e)
        return row

    curl = curl_decompose(field, point)
    _, angle = darboux(frame)
    row.update({
        "frame": {"l": frame.l, "m": frame.m, "n": frame.n, "binormal_flipped": frame.flipped,
                  "orthonormality_defect": frame.orthonormality_defect()},
        "kappa": frame.kappa,
        "tau": frame.tau,
        "frenet_residuals": frenet_residuals(field, point),
        "curl": {"omega": curl.omega, "c_m": curl.c_m, "c_n": curl.c_n, "kappa_defect": curl.kappa_defect},
        "normal_congruence_measure": normal_congruence_measure(field, point),
        "coupling_residual": surface_coupling_residual(H, K, frame.kappa, frame.tau),
        "darboux_angle": angle,
    })
    try:
        row["nu"] = shape_from_congruence(frame.kappa, angle, K, l_theta or 1.0)
    except DevelopableSurfaceError:
        row["nu"] = None
    return row


@handle_command_error("congruence")
def cmd_congruence(args) -> int:
    cfg = _load(args)
    spec = cfg.require("congruence")
    surface = _analysis_surface(cfg)
    field = _congruence_field(spec)
    normal = None
    if "normal" in spec:
        normal = (normal_extension(spec["normal"], field.box) if spec["normal"] in NORMAL_EXTENSIONS
                  else CongruenceField.from_expressions(spec["normal"], field.box))

    l_theta = _thermal_length(cfg)
    samples = cfg.samples() or default_samples(surface)
    rows: List[Dict[str, object]] = [_sample_row(surface, field, normal, u, l_theta) for u in samples]
    report: Dict[str, object] = {
        "field": field.name or spec["field"],
        "signature": field.signature,
        "h_convention_factor": H_CONVENTION_FACTOR,
        "l_theta": l_theta,
        "samples": rows,
    }

    if "flat_state" in spec:
        first, second = (part.strip() for part in str(spec["flat_state"]).split(";"))
        v = VectorField.from_expressions(surface.chart, first, second)
        r = float(spec.get("r", (cfg.thermal or {}).get("r", 0.0)))
        flat = flat_state_report(surface, v, r, cfg.samples())
        flat.tolerance = cfg.tolerance("flat_state", FLAT_STATE_TOLERANCE)
        report["flat_state"] = flat.to_dict()

    writer = ReportWriter(cfg.output_dir)
    writer.json("report.json", report)
    failed = sum(1 for row in rows if row.get("frame") is None)
    print(f"✅ congruence: {len(rows)} sample point(s), {failed} without a frame")
    return EXIT_OK


@handle_command_error("energy")
def cmd_energy(args) -> int:
    cfg = _load(args)
    density = EnergyDensity.from_spec(cfg.require("energy"))
    full = cfg.build_surface()
    surface = trim_degenerate_boundary(full)
    residual = el_residual(surface, density)

    writer = ReportWriter(cfg.output_dir)
    writer.scalar_csv("el_residual.csv", surface.chart, residual.values, "residual")
    interior = residual.values[surface.chart.interior()]
    summary = {
        "density": density.text,
        "kind": density.kind,
        "depends_on_K": density.depends_on_K,
        "energy": total_energy(full, density),
        "area": surface_area(full),
        "el_residual": summarize(interior),
        "el_residual_max_abs": float(np.max(np.abs(interior))),
    }
    writer.json("energy.json", summary)
    print(f"✅ energy: ∫ {density.text} dS = {summary['energy']:.10g}")
    return EXIT_OK


@handle_command_error("estimate")
def cmd_estimate(args) -> int:
    constants = MaterialConstants(k=args.k, E2D=args.E2D, b=to_nm(args.b_angstrom, "angstrom"), nu=args.nu)
    result = estimate_report(constants, args.l_nm, to_nm(args.r_um, "um"))
    print(json.dumps(result, indent=2, sort_keys=True))
    return EXIT_OK


@handle_command_error("export-obj")
def cmd_export_obj(args) -> int:
    cfg = _load(args)
    surface = cfg.build_surface()
    writer = ReportWriter(cfg.output_dir)
    path = writer.obj("surface.obj", surface)
    if args.grid:
        save_grid(surface, writer.path("surface.grid"))
    print(f"✅ export-obj: {path}")
    return EXIT_OK


@handle_command_error("selfcheck")
def cmd_selfcheck(args) -> int:
    from selfcheck import print_table, run_selfcheck

    results = run_selfcheck()
    print_table(results)
    return EXIT_OK if all(r.passed for r in results) else 3


COMMANDS = {
    "curvature": cmd_curvature,
    "thermal": cmd_thermal,
    "congruence": cmd_congruence,
    "energy": cmd_energy,
    "estimate": cmd_estimate,
    "export-obj": cmd_export_obj,
    "selfcheck": cmd_selfcheck,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="weylsheet",
        description="Curvature, Weyl thermal states and congruences of corrugated sheets",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, help="Run configuration (JSON)")
    common.add_argument("--out-dir", type=str, help="Output directory (overrides the config)")
    common.add_argument("--threads", type=int, default=None, help="Worker threads for grid evaluation")
    common.add_argument("--tolerance", type=float, default=None, help="Solver tolerance scale")

    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("curvature", "thermal", "congruence", "energy", "selfcheck"):
        sub.add_parser(name, parents=[common])
    export = sub.add_parser("export-obj", parents=[common])
    export.add_argument("--grid", action="store_true", help="Also write the surface in the grid format")

    estimate = sub.add_parser("estimate", parents=[common], help="Closed-form material estimates")
    estimate.add_argument("--k", type=float, default=1.0, help="Bending rigidity in eV (default: 1.0)")
    estimate.add_argument("--E2D", type=float, default=2.12e3, help="Tensile rigidity in eV/nm² (default: 2120)")
    estimate.add_argument("--b-angstrom", type=float, default=1.42, help="Bond length in Å (default: 1.42)")
    estimate.add_argument("--nu", type=float, default=0.165, help="Poisson ratio (default: 0.165)")
    estimate.add_argument("--l-nm", type=float, default=10.0, help="Sheet length in nm (default: 10)")
    estimate.add_argument("--r-um", type=float, default=0.75, help="Flake radius in μm (default: 0.75)")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config.configure_logging()
    if args.tolerance is not None and not args.tolerance > 0:
        parser.error("--tolerance must be positive")
    if args.threads is not None:
        if args.threads < 1:
            parser.error("--threads must be at least 1")
        config.THREADS = args.threads

    code = COMMANDS[args.command](args)
    monitor.log_summary()
    return code


if __name__ == "__main__":
    sys.exit(main())
