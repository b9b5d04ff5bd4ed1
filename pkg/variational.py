"""
Curvature energies ∫ e(H, K) dS and the pointwise Euler-Lagrange residual

    ½ Δ_a(∂e/∂H) + Λ_{a,b}(∂e/∂K) + (2H² − K) ∂e/∂H + 2KH ∂e/∂K − 2He

for densities given by name or as an expression in H and K.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from diff_ops import lambda_ab, laplace_beltrami
from error_handler import DomainViolationError, InvalidParameterError, NonFiniteError
from expressions import DENSITY_VARIABLES, BinOp, Const, Node, Var, parse_expr, print_expr, taylor_partials, variables
from fields import ScalarField
from geom_core import curvature_fields, curvatures, jets_with_forms, metric_from_surface
from monitoring import track_stage
from surface_lang import SampledSurface

logger = logging.getLogger("weylsheet.variational")

DENSITY_KINDS = ("constant", "linear", "willmore", "expression")

Region = Tuple[Tuple[float, float], Tuple[float, float]]


@dataclass(frozen=True)
class EnergyDensity:
    kind: str
    node: Node
    text: str

    @classmethod
    def constant(cls, c: float) -> "EnergyDensity":
        return cls("constant", Const(float(c)), repr(float(c)))

    @classmethod
    def linear(cls, a: float = 0.0, b: float = 0.0, c: float = 0.0) -> "EnergyDensity":
        """e = aH + bK + c; zero terms are left out of the tree."""
        terms = []
        if a:
            terms.append((f"{float(a)!r}*H", BinOp("*", Const(float(a)), Var("H"))))
        if b:
            terms.append((f"{float(b)!r}*K", BinOp("*", Const(float(b)), Var("K"))))
        if c or not terms:
            terms.append((repr(float(c)), Const(float(c))))
        node = terms[0][1]
        for _, term in terms[1:]:
            node = BinOp("+", node, term)
        return cls("linear", node, " + ".join(text for text, _ in terms))

    @classmethod
    def willmore(cls) -> "EnergyDensity":
        return cls("willmore", BinOp("*", Var("H"), Var("H")), "H^2")

    @classmethod
    def expression(cls, text: str) -> "EnergyDensity":
        return cls("expression", parse_expr(text, DENSITY_VARIABLES), text)

    @classmethod
    def from_spec(cls, spec) -> "EnergyDensity":
        """Build from a config entry: a bare expression string or ``{"kind": ..., ...}``."""
        if isinstance(spec, str):
            return cls.expression(spec)
        if not isinstance(spec, dict) or "kind" not in spec:
            raise InvalidParameterError(f"energy density spec needs a 'kind', got {spec!r}")
        kind = spec["kind"]
        if kind == "constant":
            return cls.constant(spec.get("c", 1.0))
        if kind == "linear":
            return cls.linear(spec.get("a", 0.0), spec.get("b", 0.0), spec.get("c", 0.0))
        if kind == "willmore":
            return cls.willmore()
        if kind == "expression":
            if "expr" not in spec:
                raise InvalidParameterError("expression density needs an 'expr' entry")
            return cls.expression(spec["expr"])
        raise InvalidParameterError(f"unknown energy density kind {kind!r}; expected one of {DENSITY_KINDS}")

    @property
    def depends_on_K(self) -> bool:
        return "K" in variables(self.node)

    def canonical(self) -> str:
        return print_expr(self.node)


def density_partials(density: EnergyDensity, H, K) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(e, ∂e/∂H, ∂e/∂K), exact via dual numbers."""
    H = np.asarray(H, dtype=float)
    K = np.asarray(K, dtype=float)
    with np.errstate(all="ignore"):
        jets = taylor_partials([density.node], ("H", "K"), (H, K), 1)
    e, e_H, e_K = (jets[key][..., 0] for key in ((), (0,), (1,)))
    for name, value in (("e", e), ("∂e/∂H", e_H), ("∂e/∂K", e_K)):
        if not np.all(np.isfinite(value)):
            raise NonFiniteError(f"energy density {density.text!r}: {name} is not finite on the (H, K) range")
    return e, e_H, e_K


def _cell_midpoints(region: Region, cells: Tuple[int, int]):
    axes = []
    for (lo, hi), n in zip(region, cells):
        edges = np.linspace(lo, hi, n + 1)
        axes.append(0.5 * (edges[:-1] + edges[1:]))
    return np.meshgrid(axes[0], axes[1], indexing="ij")


@track_stage("total_energy")
def total_energy(surface: SampledSurface, density: EnergyDensity, region: Optional[Region] = None) -> float:
    """Midpoint-rule quadrature of e(H, K) √a du1 du2 over the region (default: whole chart)."""
    chart = surface.chart
    region = region or chart.ranges
    for k, ((lo, hi), (c_lo, c_hi)) in enumerate(zip(region, chart.ranges)):
        if not (c_lo <= lo < hi <= c_hi):
            raise DomainViolationError(f"region axis {k} [{lo}, {hi}] lies outside the chart range [{c_lo}, {c_hi}]")

    cells = tuple(n - 1 for n in chart.resolution)
    u1, u2 = _cell_midpoints(region, cells)
    _, forms = jets_with_forms(surface, u1, u2)
    data = curvatures(forms)
    e, _, _ = density_partials(density, data.H, data.K)
    h1 = (region[0][1] - region[0][0]) / cells[0]
    h2 = (region[1][1] - region[1][0]) / cells[1]
    energy = float(np.sum(e * np.sqrt(forms.det_first)) * h1 * h2)
    logger.debug(f"energy of {density.text!r}: {energy:.12g}")
    return energy


@track_stage("el_residual")
def el_residual(surface: SampledSurface, density: EnergyDensity) -> ScalarField:
    chart = surface.chart
    fields = curvature_fields(surface)
    H, K = fields.curvature.H, fields.curvature.K
    metric = metric_from_surface(surface)
    e, e_H, e_K = density_partials(density, H, K)

    values = 0.5 * laplace_beltrami(metric, ScalarField(chart, e_H)).values
    if density.depends_on_K:
        values = values + lambda_ab(metric, fields.forms, K, ScalarField(chart, e_K)).values
    else:
        logger.debug(f"{density.text!r} has no K dependence; Λ_(a,b) term skipped")
    values = values + (2.0 * H * H - K) * e_H + 2.0 * K * H * e_K - 2.0 * H * e
    return ScalarField(chart, values)


def willmore_operator(surface: SampledSurface) -> ScalarField:
    """ΔH + 2H(H² − K)."""
    fields = curvature_fields(surface)
    H, K = fields.curvature.H, fields.curvature.K
    metric = metric_from_surface(surface)
    lap = laplace_beltrami(metric, ScalarField(surface.chart, H)).values
    return ScalarField(surface.chart, lap + 2.0 * H * (H * H - K))


def surface_area(surface: SampledSurface, region: Optional[Region] = None) -> float:
    return total_energy(surface, EnergyDensity.constant(1.0), region)


def energy_summary(surface: SampledSurface, density: EnergyDensity) -> Dict[str, object]:
    residual = el_residual(surface, density)
    interior = residual.values[surface.chart.interior()]
    return {
        "density": density.text,
        "kind": density.kind,
        "energy": total_energy(surface, density),
        "area": surface_area(surface),
        "el_residual_max": float(np.max(np.abs(interior))),
        "depends_on_K": density.depends_on_K,
    }


if __name__ == "__main__":
    from fields import Chart
    from surface_lang import catalog, sample_surface

    print("=" * 70)
    print("Willmore energy of spheres")
    print("=" * 70)
    for radius in (1.0, 2.0, 5.0):
        sphere = sample_surface(catalog("sphere", R=radius),
                                Chart((0.0, np.pi), (0.0, 2.0 * np.pi), (129, 129), (False, True)))
        value = total_energy(sphere, EnergyDensity.willmore())
        mark = "✅" if abs(value - 4.0 * np.pi) < 1e-3 else "❌"
        print(f"{mark} R = {radius}: ∫H² dS = {value:.8f} (4π = {4.0 * np.pi:.8f})")
