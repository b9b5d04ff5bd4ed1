"""
Geometry Core: fundamental forms, curvatures, Christoffel symbols and the
intrinsic/extrinsic curvature cross-checks.

Index conventions for metric arrays on a chart of shape (n1, n2):
    values[..., a, b]        = a_ab
    d1[..., s, a, b]         = ∂_s a_ab
    d2[..., s, t, a, b]      = ∂_s ∂_t a_ab
    gamma[..., k, a, b]      = Γ^k_ab
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

import config
from error_handler import (
    DegenerateChartError,
    InvalidParameterError,
    NonSpacelikeError,
    ShapeMismatchError,
    SingularMetricError,
)
from expressions import SURFACE_VARIABLES, parse_expr, taylor_partials
from fields import Chart, gradient, hessian, partial
from surface_lang import SampledSurface, SurfaceJet, jets_at, surface_jets

logger = logging.getLogger("weylsheet.geometry")

MINKOWSKI_REFLECTION = np.diag([1.0, 1.0, -1.0])


def inner(u: np.ndarray, v: np.ndarray, signature: int = 1) -> np.ndarray:
    """(u, v)_ε = u1 v1 + u2 v2 + ε u3 v3 over the last axis."""
    return u[..., 0] * v[..., 0] + u[..., 1] * v[..., 1] + signature * u[..., 2] * v[..., 2]


@dataclass
class FundamentalForms:
    E: np.ndarray
    F: np.ndarray
    G: np.ndarray
    L: np.ndarray
    M: np.ndarray
    N: np.ndarray
    normal: np.ndarray
    signature: int = 1

    def first_matrix(self) -> np.ndarray:
        return np.stack([np.stack([self.E, self.F], -1), np.stack([self.F, self.G], -1)], -2)

    def second_matrix(self) -> np.ndarray:
        return np.stack([np.stack([self.L, self.M], -1), np.stack([self.M, self.N], -1)], -2)

    @property
    def det_first(self) -> np.ndarray:
        return self.E * self.G - self.F * self.F

    @property
    def det_second(self) -> np.ndarray:
        return self.L * self.N - self.M * self.M


@dataclass
class CurvatureData:
    K: np.ndarray
    H: np.ndarray
    kappa1: np.ndarray
    kappa2: np.ndarray
    # H² ≥ K holds (up to roundoff) at each node
    h2_ge_k: np.ndarray


@dataclass
class ShapeOperator:
    matrix: np.ndarray
    principal_curvatures: np.ndarray
    directions: np.ndarray


def degenerate_mask(jet: SurfaceJet) -> np.ndarray:
    r1, r2 = jet.first[..., 0, :], jet.first[..., 1, :]
    cross = np.linalg.norm(np.cross(r1, r2), axis=-1)
    scale = np.linalg.norm(r1, axis=-1) * np.linalg.norm(r2, axis=-1)
    return ~(cross >= config.DEGENERACY_RATIO * scale) | (scale == 0)


def fundamental_forms(jet: SurfaceJet, signature: int = 1) -> FundamentalForms:
    """First and second fundamental forms from an order-2 jet."""
    if signature not in (1, -1):
        raise InvalidParameterError(f"signature must be +1 or -1, got {signature}")
    if jet.second is None:
        raise InvalidParameterError("fundamental forms need a second-order jet")

    bad = degenerate_mask(jet)
    if np.any(bad):
        raise DegenerateChartError(f"degenerate chart point: r_1 parallel to r_2 at {int(np.sum(bad))} node(s)",
                                   count=int(np.sum(bad)))

    r1, r2 = jet.first[..., 0, :], jet.first[..., 1, :]
    E = inner(r1, r1, signature)
    F = inner(r1, r2, signature)
    G = inner(r2, r2, signature)

    cross = np.cross(r1, r2)
    if signature == 1:
        normal = cross / np.linalg.norm(cross, axis=-1)[..., None]
    else:
        if np.any(E <= 0) or np.any(E * G - F * F <= 0):
            raise NonSpacelikeError("tangent plane is not space-like under the Minkowski metric")
        m = cross @ MINKOWSKI_REFLECTION
        normal = m / np.sqrt(np.abs(inner(m, m, -1)))[..., None]

    L = inner(normal, jet.r(0, 0), signature)
    M = inner(normal, jet.r(0, 1), signature)
    N = inner(normal, jet.r(1, 1), signature)
    return FundamentalForms(E, F, G, L, M, N, normal, signature)


def curvatures(forms: FundamentalForms) -> CurvatureData:
    det_a = forms.det_first
    if np.any(det_a <= 0):
        raise DegenerateChartError("first fundamental form is not positive definite")
    K = forms.det_second / det_a
    H = (forms.E * forms.N - 2.0 * forms.F * forms.M + forms.G * forms.L) / (2.0 * det_a)
    disc = H * H - K
    root = np.sqrt(np.clip(disc, 0.0, None))
    tiny = 1e-12 * np.maximum(H * H, np.abs(K))
    return CurvatureData(K, H, H + root, H - root, disc >= -tiny)


def shape_operator(forms: FundamentalForms) -> ShapeOperator:
    """a^{-1} b with its eigenvalues (descending) and eigenvectors."""
    S = np.linalg.solve(forms.first_matrix(), forms.second_matrix())
    values, vectors = np.linalg.eig(S)
    values, vectors = values.real, vectors.real
    order = np.argsort(-values, axis=-1)
    values = np.take_along_axis(values, order, axis=-1)
    vectors = np.take_along_axis(vectors, order[..., None, :], axis=-1)
    return ShapeOperator(S, values, vectors)


def normal_curvature(forms: FundamentalForms, direction) -> np.ndarray:
    d = np.asarray(direction, dtype=float)
    if np.all(d == 0):
        raise InvalidParameterError("normal curvature needs a nonzero direction")
    du, dv = d[..., 0], d[..., 1]
    second = forms.L * du * du + 2.0 * forms.M * du * dv + forms.N * dv * dv
    first = forms.E * du * du + 2.0 * forms.F * du * dv + forms.G * dv * dv
    return second / first


def rescale_second_form(forms: FundamentalForms, l_theta: float) -> FundamentalForms:
    """b_θ = l(θ) b; the principal curvatures scale by l(θ)."""
    if not l_theta > 0:
        raise InvalidParameterError(f"thermal length must be positive, got {l_theta}")
    return replace(forms, L=l_theta * forms.L, M=l_theta * forms.M, N=l_theta * forms.N)


# ============================================
# Metric fields
# ============================================

@dataclass
class MetricField:
    chart: Chart
    values: np.ndarray
    d1: Optional[np.ndarray] = None
    d2: Optional[np.ndarray] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = tuple(self.chart.resolution) + (2, 2)
        if self.values.shape != expected:
            raise ShapeMismatchError(f"metric has shape {self.values.shape}, chart expects {expected}")
        a = self.values
        scale = np.abs(a).max(initial=1.0)
        if np.any(np.abs(a[..., 0, 1] - a[..., 1, 0]) > 1e-12 * scale):
            raise SingularMetricError("metric samples are not symmetric")
        det = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
        if not np.all(np.isfinite(det)) or np.any(det <= 0) or np.any(a[..., 0, 0] <= 0):
            raise SingularMetricError(f"metric is not positive definite at {int(np.sum(~(det > 0)))} node(s)")

    @classmethod
    def flat(cls, chart: Chart) -> "MetricField":
        shape = tuple(chart.shape)
        values = np.broadcast_to(np.eye(2), shape + (2, 2)).copy()
        return cls(chart, values, np.zeros(shape + (2, 2, 2)), np.zeros(shape + (2, 2, 2, 2)))

    @property
    def det(self) -> np.ndarray:
        a = self.values
        return a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]

    @property
    def sqrt_det(self) -> np.ndarray:
        return np.sqrt(self.det)

    def inverse(self) -> np.ndarray:
        a, det = self.values, self.det
        inv = np.empty_like(a)
        inv[..., 0, 0] = a[..., 1, 1] / det
        inv[..., 1, 1] = a[..., 0, 0] / det
        inv[..., 0, 1] = -a[..., 0, 1] / det
        inv[..., 1, 0] = -a[..., 1, 0] / det
        return inv

    def first_derivatives(self) -> np.ndarray:
        return self.d1 if self.d1 is not None else gradient(self.values, self.chart)

    def second_derivatives(self) -> np.ndarray:
        return self.d2 if self.d2 is not None else hessian(self.values, self.chart)


def metric_from_jet(jet: SurfaceJet, signature: int = 1) -> Tuple[np.ndarray, Optional[np.ndarray], Optional[np.ndarray]]:
    """Induced metric and, when the jet is deep enough, its exact derivatives."""
    r = jet.r
    values = np.empty(jet.position.shape[:-1] + (2, 2))
    for a in range(2):
        for b in range(2):
            values[..., a, b] = inner(r(a), r(b), signature)

    d1 = None
    if jet.second is not None:
        d1 = np.empty(values.shape[:-2] + (2, 2, 2))
        for s in range(2):
            for a in range(2):
                for b in range(2):
                    d1[..., s, a, b] = inner(r(s, a), r(b), signature) + inner(r(a), r(s, b), signature)

    d2 = None
    if jet.third is not None:
        d2 = np.empty(values.shape[:-2] + (2, 2, 2, 2))
        for s in range(2):
            for t in range(2):
                for a in range(2):
                    for b in range(2):
                        d2[..., s, t, a, b] = (
                            inner(r(s, t, a), r(b), signature)
                            + inner(r(s, a), r(t, b), signature)
                            + inner(r(t, a), r(s, b), signature)
                            + inner(r(a), r(s, t, b), signature)
                        )
    return values, d1, d2


def metric_from_surface(surface: SampledSurface, signature: int = 1) -> MetricField:
    """Induced metric with first and second derivatives from the third-order jet.

    Exact for analytic sources; sampled grids use the same fourth-order
    difference jets as the extrinsic curvature, so the intrinsic and
    extrinsic Gauss curvatures agree to truncation error.
    """
    values, d1, d2 = metric_from_jet(surface_jets(surface, order=3), signature)
    return MetricField(surface.chart, values, d1, d2)


def metric_from_expressions(chart: Chart, a11: str, a12: str, a22: str) -> MetricField:
    """Metric given by three expressions in (u1, u2), derivatives exact."""
    nodes = [parse_expr(text, SURFACE_VARIABLES) for text in (a11, a12, a22)]
    u1, u2 = chart.mesh()
    with np.errstate(all="ignore"):
        jets = taylor_partials(nodes, ("u1", "u2"), (u1, u2), 2)

    def as_matrix(comp: np.ndarray) -> np.ndarray:
        return np.stack([np.stack([comp[..., 0], comp[..., 1]], -1),
                         np.stack([comp[..., 1], comp[..., 2]], -1)], -2)

    values = as_matrix(jets[()])
    d1 = np.stack([as_matrix(jets[(0,)]), as_matrix(jets[(1,)])], axis=2)
    d2 = np.stack([np.stack([as_matrix(jets[(0, 0)]), as_matrix(jets[(0, 1)])], axis=2),
                   np.stack([as_matrix(jets[(0, 1)]), as_matrix(jets[(1, 1)])], axis=2)], axis=2)
    return MetricField(chart, values, d1, d2)


# ============================================
# Christoffel symbols and intrinsic curvature
# ============================================

def christoffel_from(values: np.ndarray, d1: np.ndarray) -> np.ndarray:
    """Γ^k_ab = ½ a^{kc} (∂_a a_cb + ∂_b a_ca − ∂_c a_ab)."""
    lowered = 0.5 * (np.swapaxes(d1, -3, -2) + np.moveaxis(d1, -3, -1) - d1)
    return np.einsum("...kc,...cab->...kab", np.linalg.inv(values), lowered)


def christoffel_field(metric: MetricField) -> np.ndarray:
    return christoffel_from(metric.values, metric.first_derivatives())


def christoffel(metric: MetricField, node: Tuple[int, int]) -> np.ndarray:
    """Levi-Civita symbols at one node, shape (2, 2, 2) indexed [k, a, b]."""
    i, j = node
    return christoffel_field(metric)[i, j]


def _brioschi(values: np.ndarray, d1: np.ndarray, d2: np.ndarray) -> np.ndarray:
    E, F, G = values[..., 0, 0], values[..., 0, 1], values[..., 1, 1]
    Eu, Ev = d1[..., 0, 0, 0], d1[..., 1, 0, 0]
    Fu, Fv = d1[..., 0, 0, 1], d1[..., 1, 0, 1]
    Gu, Gv = d1[..., 0, 1, 1], d1[..., 1, 1, 1]
    Evv = d2[..., 1, 1, 0, 0]
    Fuv = d2[..., 0, 1, 0, 1]
    Guu = d2[..., 0, 0, 1, 1]

    m1 = np.stack([
        np.stack([-0.5 * Evv + Fuv - 0.5 * Guu, 0.5 * Eu, Fu - 0.5 * Ev], -1),
        np.stack([Fv - 0.5 * Gu, E, F], -1),
        np.stack([0.5 * Gv, F, G], -1),
    ], -2)
    zero = np.zeros_like(E)
    m2 = np.stack([
        np.stack([zero, 0.5 * Ev, 0.5 * Gu], -1),
        np.stack([0.5 * Ev, E, F], -1),
        np.stack([0.5 * Gu, F, G], -1),
    ], -2)
    det = E * G - F * F
    return (np.linalg.det(m1) - np.linalg.det(m2)) / (det * det)


def gauss_curvature_field(metric: MetricField) -> np.ndarray:
    """Intrinsic Gaussian curvature at every node (Brioschi formula)."""
    return _brioschi(metric.values, metric.first_derivatives(), metric.second_derivatives())


def intrinsic_gauss_curvature(metric: MetricField, node: Tuple[int, int]) -> float:
    i, j = node
    return float(gauss_curvature_field(metric)[i, j])


# ============================================
# Whole-chart curvature
# ============================================

@dataclass
class CurvatureFields:
    forms: FundamentalForms
    curvature: CurvatureData


def curvature_fields(surface: SampledSurface, signature: int = 1) -> CurvatureFields:
    forms = fundamental_forms(surface_jets(surface), signature)
    return CurvatureFields(forms, curvatures(forms))


def trim_degenerate_boundary(surface: SampledSurface) -> SampledSurface:
    """Drop open-boundary node lines that are chart singularities (e.g. sphere poles).

    A line is singular when any node on it is degenerate or the whole line
    collapses to one point of the embedding.
    """
    bad = degenerate_mask(surface_jets(surface, order=1))
    spread = config.DEGENERACY_RATIO * surface.diameter

    def singular(index) -> bool:
        line = surface.positions[index]
        return bool(np.any(bad[index])) or float(np.max(np.ptp(line, axis=0))) <= spread

    n1, n2 = surface.chart.resolution
    lo1, hi1, lo2, hi2 = 0, n1, 0, n2
    if not surface.chart.periodic[0]:
        while lo1 < hi1 - 3 and singular((lo1, slice(None))):
            lo1 += 1
        while hi1 - 1 > lo1 + 3 and singular((hi1 - 1, slice(None))):
            hi1 -= 1
    if not surface.chart.periodic[1]:
        while lo2 < hi2 - 3 and singular((slice(None), lo2)):
            lo2 += 1
        while hi2 - 1 > lo2 + 3 and singular((slice(None), hi2 - 1)):
            hi2 -= 1
    if (lo1, hi1, lo2, hi2) == (0, n1, 0, n2):
        return surface
    logger.warning(f"Trimmed degenerate boundary lines: rows [{lo1}, {hi1}), columns [{lo2}, {hi2})")
    return surface.restrict(slice(lo1, hi1), slice(lo2, hi2))


def _jet_at_node(surface: SampledSurface, node: Tuple[int, int]) -> SurfaceJet:
    return surface_jets(surface).at(node)


def gauss_weingarten_residual(surface: SampledSurface, node: Tuple[int, int]) -> Tuple[np.ndarray, np.ndarray]:
    """Residuals of the Gauss and Weingarten equations at one node.

    Returns ``(vector, matrix)``: ``vector[k]`` is b_ab n − (r_ab − Γ^c_ab r_c)
    for (a, b) in (11, 12, 22); ``matrix[a]`` is ∂_a n + a^{bc} b_ac r_b.
    """
    jet = _jet_at_node(surface, node)
    forms = fundamental_forms(jet)
    values, d1, _ = metric_from_jet(jet)
    gamma = christoffel_from(values, d1)
    a_inv = np.linalg.inv(values)
    b = forms.second_matrix()
    n = forms.normal
    r1, r2 = jet.r(0), jet.r(1)
    tangents = np.stack([r1, r2])

    vector = np.empty((3, 3))
    for k, (a, c) in enumerate(((0, 0), (0, 1), (1, 1))):
        vector[k] = b[a, c] * n - (jet.r(a, c) - gamma[:, a, c] @ tangents)

    if surface.source is not None:
        cross = np.cross(r1, r2)
        norm = np.linalg.norm(cross)
        dn = []
        for a in range(2):
            dc = np.cross(jet.r(a, 0), r2) + np.cross(r1, jet.r(a, 1))
            dn.append((dc - n * (n @ dc)) / norm)
        dn = np.stack(dn)
    else:
        normals = fundamental_forms(surface_jets(surface)).normal
        i, j = node
        dn = np.stack([partial(normals, a, surface.chart)[i, j] for a in range(2)])

    matrix = np.empty((2, 3))
    for a in range(2):
        matrix[a] = dn[a] + (a_inv @ b[a]) @ tangents
    return vector, matrix


@dataclass
class DevelopabilityReport:
    det_b: np.ndarray
    measure: float
    is_developable: bool
    tolerance: float


def developability(surface: SampledSurface, tolerance: Optional[float] = None) -> DevelopabilityReport:
    """det b at every node; developable iff max |det b| · diameter⁴ < tolerance."""
    tolerance = config.DEVELOPABLE_TOLERANCE if tolerance is None else tolerance
    forms = curvature_fields(surface).forms
    det_b = forms.det_second
    measure = float(np.max(np.abs(det_b)) * surface.diameter ** 4)
    return DevelopabilityReport(det_b, measure, measure < tolerance, tolerance)


def jets_with_forms(surface: SampledSurface, u1, u2, signature: int = 1) -> Tuple[SurfaceJet, FundamentalForms]:
    """Jets and forms at arbitrary chart points."""
    jet = jets_at(surface, u1, u2, order=2)
    return jet, fundamental_forms(jet, signature)


def surface_mean_gauss(surface: SampledSurface, point: Tuple[float, float]) -> Tuple[float, float]:
    _, forms = jets_with_forms(surface, np.array(point[0]), np.array(point[1]))
    data = curvatures(forms)
    return float(data.H), float(data.K)
