"""
Congruences of lines in Euclidean or Minkowski 3-space.

A CongruenceField is a vector field given by three expressions in (x, y, z),
normalized to l = v / ‖v‖_g. Frenet data, curls and directional derivatives
are taken with fourth-order central differences (the ambient metric is
constant, so ∇_l is the plain directional derivative).
"""

import logging
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import solve_ivp

import config
from diff_ops import Box3, Metric3, curl_at, div_a, inner_e, jacobian_at
from error_handler import (
    DevelopableSurfaceError,
    DomainViolationError,
    IndeterminateFrameError,
    InvalidParameterError,
    NonUnitFieldError,
)
from expressions import Node, SPACE_VARIABLES, evaluate, parse_expr, split_components
from fields import VectorField
from geom_core import developability, gauss_curvature_field, metric_from_surface, surface_mean_gauss
from surface_lang import SampledSurface, jets_at

logger = logging.getLogger("weylsheet.congruence")

# Flat-state checks pass below this residual
FLAT_STATE_TOLERANCE = 1e-6

# Curve-tracing step as a fraction of the surface diameter
TRACE_STEP_RATIO = 5e-3

# H = (κ1 + κ2)/2 with the normal on the concave side; scales H in the Frenet relations
H_CONVENTION_FACTOR = 1

DEFAULT_BOX = Box3(((-4.0, 4.0), (-4.0, 4.0), (-4.0, 4.0)))


@dataclass(frozen=True)
class CongruenceField:
    nodes: Tuple[Node, Node, Node]
    box: Box3 = DEFAULT_BOX
    signature: int = 1
    name: Optional[str] = None

    def __post_init__(self):
        if self.signature not in (1, -1):
            raise InvalidParameterError(f"signature must be +1 or -1, got {self.signature}")

    @classmethod
    def from_expressions(cls, text: Union[str, Sequence[str]], box: Optional[Box3] = None,
                         signature: int = 1, name: Optional[str] = None) -> "CongruenceField":
        if isinstance(text, str):
            pieces = split_components(text, 3)
        else:
            if len(text) != 3:
                raise InvalidParameterError(f"a congruence needs 3 component expressions, got {len(text)}")
            pieces = [(t, 0) for t in text]
        nodes = tuple(parse_expr(part, SPACE_VARIABLES, offset) for part, offset in pieces)
        return cls(nodes, box or DEFAULT_BOX, signature, name)

    @property
    def step(self) -> float:
        return config.FD_STEP_RATIO * self.box.diameter

    @property
    def metric(self) -> Metric3:
        return Metric3.minkowski(self.signature)

    def raw(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        env = {"x": p[..., 0], "y": p[..., 1], "z": p[..., 2]}
        with np.errstate(all="ignore"):
            comps = [np.broadcast_to(evaluate(node, env), p.shape[:-1]) for node in self.nodes]
        return np.stack(comps, axis=-1).astype(float)

    def unit(self, points) -> np.ndarray:
        """l = v / ‖v‖_g; v must be nonvanishing and space-like."""
        v = self.raw(points)
        q = inner_e(v, v, self.signature)
        if not np.all(np.isfinite(q)) or np.any(q <= 1e-300):
            raise NonUnitFieldError("congruence field vanishes or is not space-like at an evaluation point")
        return v / np.sqrt(q)[..., None]

    def contains(self, point) -> bool:
        p = np.asarray(point, dtype=float)
        return all(lo <= c <= hi for c, (lo, hi) in zip(p, self.box.bounds))


# ============================================
# Catalog
# ============================================

def _congruence_entry(name: str, params: Dict[str, object]) -> Tuple[str, int]:
    if name == "circle":
        return "-y; x; 0", 1
    if name == "helix":
        return f"-y; x; {float(params.get('b', 4.0))!r}", 1
    if name == "meridian":
        return "x*z; y*z; -(x^2 + y^2)", 1
    if name == "axial":
        return "0; 0; 1", 1
    if name == "gradient":
        return "2*x; 0; 1", 1
    if name == "sheared":
        return f"-y; x - {float(params.get('k', 1.0))!r}*z; 0", 1
    if name == "minkowski_helix":
        return f"{float(params.get('b', 1.0))!r}; z; y", -1
    raise InvalidParameterError(f"unknown congruence {name!r}; expected one of {CONGRUENCE_NAMES}")


CONGRUENCE_NAMES = ("circle", "helix", "meridian", "axial", "gradient", "sheared", "minkowski_helix")


def congruence_catalog(name: str, box: Optional[Box3] = None, **params) -> CongruenceField:
    """Named test congruences.

    circle: horizontal circles about the z axis; helix(b): helices of pitch b
    about the z axis; meridian: great circles through the poles of spheres
    centered at the origin; axial: straight vertical lines; gradient: lines of
    grad(x² + z); sheared(k): horizontal circles centered on the line x = kz;
    minkowski_helix(b): space-like hyperbolic helices, signature −1.
    """
    text, signature = _congruence_entry(name, params)
    return CongruenceField.from_expressions(text, box, signature, name)


NORMAL_EXTENSIONS = ("sphere_inward", "cylinder_inward", "plane")


def normal_extension(name: str, box: Optional[Box3] = None) -> CongruenceField:
    """Unit normal fields extended off the surface along the normal lines."""
    texts = {"sphere_inward": "-x; -y; -z", "cylinder_inward": "-x; -y; 0", "plane": "0; 0; 1"}
    if name not in texts:
        raise InvalidParameterError(f"unknown normal extension {name!r}; expected one of {NORMAL_EXTENSIONS}")
    return CongruenceField.from_expressions(texts[name], box, 1, name)


# ============================================
# Frenet frames
# ============================================

def _along(func, points: np.ndarray, directions: np.ndarray, step: float) -> np.ndarray:
    """Fourth-order derivative of ``func`` along ``directions``."""
    f = lambda s: func(points + (s * step) * directions)
    return (-f(2.0) + 8.0 * f(1.0) - 8.0 * f(-1.0) + f(-2.0)) / (12.0 * step)


def _normalize(v: np.ndarray, signature: int) -> np.ndarray:
    return v / np.sqrt(np.abs(inner_e(v, v, signature)))[..., None]


def _curvature_vector(field: CongruenceField, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    l = field.unit(points)
    return l, _along(field.unit, points, l, field.step)


def _principal_normal(field: CongruenceField, points: np.ndarray) -> np.ndarray:
    _, a = _curvature_vector(field, points)
    return _normalize(a, field.signature)


def _binormal(l: np.ndarray, n: np.ndarray, signature: int) -> np.ndarray:
    """ε-cross product G_ε(l × n), normalized."""
    m = np.cross(l, n)
    m[..., 2] *= signature
    return _normalize(m, signature)


@dataclass
class FrenetFrame:
    point: np.ndarray
    l: np.ndarray
    m: np.ndarray
    n: np.ndarray
    kappa: float
    tau: float
    signature: int = 1
    # m was reversed from G_ε(l × n) to keep τ ≥ 0
    flipped: bool = False

    def orthonormality_defect(self) -> float:
        e = self.signature
        checks = [
            inner_e(self.l, self.l, e) - 1.0,
            inner_e(self.m, self.m, e) - 1.0,
            inner_e(self.n, self.n, e) - e,
            inner_e(self.l, self.m, e),
            inner_e(self.l, self.n, e),
            inner_e(self.m, self.n, e),
        ]
        return float(np.max(np.abs(checks)))


def _with_signature(field: CongruenceField, signature: Optional[int]) -> CongruenceField:
    return field if signature is None or signature == field.signature else replace(field, signature=signature)


def frenet_at(field: CongruenceField, point, signature: Optional[int] = None) -> FrenetFrame:
    field = _with_signature(field, signature)
    p = np.asarray(point, dtype=float)
    if not field.contains(p):
        raise DomainViolationError(f"point {p.tolist()} lies outside the congruence box {field.box.bounds}")
    e, h = field.signature, field.step

    l = field.unit(p)
    jac = jacobian_at(field.unit, p, h)
    a = _along(field.unit, p, l, h)
    q = float(inner_e(a, a, e))
    kappa = float(np.sqrt(abs(q)))
    scale = max(float(np.linalg.norm(jac)), 1.0 / field.box.diameter)
    if kappa < config.FRENET_KAPPA_RATIO * scale:
        raise IndeterminateFrameError(f"curvature vanishes at {p.tolist()}: principal normal is indeterminate",
                                      kappa=kappa)
    if e == -1 and q > 0:
        raise IndeterminateFrameError(f"curvature vector is not timelike at {p.tolist()}")

    n = a / kappa
    m = _binormal(l, n, e)
    dn = _along(lambda q_: _principal_normal(field, q_), p, l, h)
    tau = float(inner_e(dn, m, e))
    flipped = tau < -config.FRENET_KAPPA_RATIO * scale
    if flipped:
        m, tau = -m, -tau
    return FrenetFrame(p, l, m, n, kappa, max(tau, 0.0), e, flipped)


def frenet_residuals(field: CongruenceField, point, signature: Optional[int] = None) -> Dict[str, float]:
    """Norms of ∇_l l − κn, ∇_l n + εκl − τm and ∇_l m + ετn."""
    field = _with_signature(field, signature)
    frame = frenet_at(field, point)
    e, h, p = field.signature, field.step, frame.point
    orientation = -1.0 if frame.flipped else 1.0

    def normal(q):
        return _principal_normal(field, q)

    def binormal(q):
        return orientation * _binormal(field.unit(q), normal(q), e)

    dl = jacobian_at(field.unit, p, h) @ frame.l
    dn = _along(normal, p, frame.l, h)
    dm = _along(binormal, p, frame.l, h)
    return {
        "curvature": float(np.linalg.norm(dl - frame.kappa * frame.n)),
        "normal": float(np.linalg.norm(dn + e * frame.kappa * frame.l - frame.tau * frame.m)),
        "binormal": float(np.linalg.norm(dm + e * frame.tau * frame.n)),
    }


@dataclass
class CurlDecomposition:
    omega: float
    c_m: float
    c_n: float
    kappa: float

    @property
    def kappa_defect(self) -> float:
        """|c_m| − κ; the sign of c_m follows the binormal orientation."""
        return abs(self.c_m) - self.kappa


def curl_decompose(field: CongruenceField, point) -> CurlDecomposition:
    """Components of curl l on (l, m, n): ω l + c_m m + c_n n."""
    frame = frenet_at(field, point)
    e = field.signature
    c = curl_at(field.metric, field.unit, frame.point, field.step)
    return CurlDecomposition(
        omega=float(inner_e(c, frame.l, e)),
        c_m=float(inner_e(c, frame.m, e)),
        c_n=float(e * inner_e(c, frame.n, e)),
        kappa=frame.kappa,
    )


def normal_congruence_measure(field: CongruenceField, point) -> float:
    """(n, curl n)_g for the principal normal field; zero on geodesic families."""
    frame = frenet_at(field, point)
    c = curl_at(field.metric, lambda q: _principal_normal(field, q), frame.point, field.step)
    return float(inner_e(frame.n, c, field.signature))


# ============================================
# Surface coupling
# ============================================

def _require_kappa(kappa: float):
    if not kappa > 0:
        raise IndeterminateFrameError(f"curvature must be positive, got {kappa}")


def surface_coupling_residual(H: float, K: float, kappa: float, tau: float) -> float:
    """2H/κ − K/κ² − 1 − (τ/κ)²."""
    _require_kappa(kappa)
    H = H_CONVENTION_FACTOR * H
    return 2.0 * H / kappa - K / kappa ** 2 - 1.0 - (tau / kappa) ** 2


def darboux(frame: FrenetFrame) -> Tuple[np.ndarray, float]:
    """d = τl + κm and ϑ with ctg ϑ = τ/κ, ϑ ∈ (0, π/2]."""
    _require_kappa(frame.kappa)
    d = frame.tau * frame.l + frame.kappa * frame.m
    return d, float(np.arctan2(frame.kappa, frame.tau))


def shape_from_congruence(kappa: float, theta: float, K: float, l_theta: float) -> float:
    """ν(θ) = (1 / 2l(θ)) [1/κ + (κ/K)(1 + ctg²ϑ)]."""
    _require_kappa(kappa)
    if not l_theta > 0:
        raise InvalidParameterError(f"thermal length must be positive, got {l_theta}")
    if not 0.0 < theta <= np.pi / 2 + 1e-15:
        raise InvalidParameterError(f"Darboux angle must lie in (0, π/2], got {theta}")
    if abs(K) <= config.DEVELOPABLE_TOLERANCE * max(1.0, kappa * kappa):
        raise DevelopableSurfaceError("ν is undefined on a developable surface (K = 0)")
    cot = np.cos(theta) / np.sin(theta)
    return float((1.0 / kappa + (kappa / K) * (1.0 + cot * cot)) / (2.0 * l_theta))


def mean_curv_from_normal(normal: CongruenceField, point,
                          congruence: Optional[CongruenceField] = None) -> Tuple[float, Optional[float]]:
    """H from 2H = −div n and K = −κ(κ + div n) − τ² from the surface curves.

    Without a congruence only H is returned. Straight surface curves
    (indeterminate frame) enter with κ = τ = 0.
    """
    p = np.asarray(point, dtype=float)
    div_n = float(np.trace(jacobian_at(normal.unit, p, normal.step)))
    H = -0.5 * div_n / H_CONVENTION_FACTOR
    if congruence is None:
        return H, None
    try:
        frame = frenet_at(congruence, p)
        kappa, tau = frame.kappa, frame.tau
    except IndeterminateFrameError:
        logger.debug(f"straight surface curve at {p.tolist()}; using κ = τ = 0")
        kappa, tau = 0.0, 0.0
    return H, -kappa * (kappa + div_n) - tau * tau


# ============================================
# Flat thermal state
# ============================================

def _wrap(surface: SampledSurface, u: np.ndarray) -> np.ndarray:
    u = np.array(u, dtype=float)
    for k, periodic in enumerate(surface.chart.periodic):
        if periodic:
            lo, hi = surface.chart.ranges[k]
            u[k] = lo + np.mod(u[k] - lo, hi - lo)
    return u


def _metric_at(surface: SampledSurface, u: np.ndarray) -> np.ndarray:
    jet = jets_at(surface, u[0], u[1], order=1)
    r1, r2 = jet.first[0], jet.first[1]
    return np.array([[r1 @ r1, r1 @ r2], [r1 @ r2, r2 @ r2]])


def _trace_points(surface: SampledSurface, v: VectorField, start: np.ndarray, h: float) -> np.ndarray:
    """Positions at arclength −2h, −h, 0, h, 2h along the integral curve of v."""
    def rhs(_, u):
        u = _wrap(surface, u)
        vec = np.asarray(v.at(u[0], u[1]), dtype=float)
        norm = float(np.sqrt(vec @ _metric_at(surface, u) @ vec))
        if norm <= 1e-300:
            raise NonUnitFieldError(f"thermal state vector vanishes at u = {u.tolist()}")
        return vec / norm

    chart_points = {0.0: np.asarray(start, dtype=float)}
    for sign in (1.0, -1.0):
        sol = solve_ivp(rhs, (0.0, 2.0 * sign * h), start, method="DOP853",
                        t_eval=[sign * h, 2.0 * sign * h], rtol=1e-12, atol=1e-12)
        if not sol.success:
            raise DomainViolationError(f"curve tracing failed from u = {list(start)}: {sol.message}")
        for s, u in zip(sol.t, sol.y.T):
            chart_points[float(np.round(s / h))] = _wrap(surface, u)
    us = np.array([chart_points[k] for k in (-2.0, -1.0, 0.0, 1.0, 2.0)])
    return jets_at(surface, us[:, 0], us[:, 1], order=1).position


def curve_frenet_data(points: np.ndarray, h: float) -> Tuple[float, float]:
    """κ and τ of a curve from five equally spaced arclength samples."""
    P = points
    d1 = (-P[4] + 8.0 * P[3] - 8.0 * P[1] + P[0]) / (12.0 * h)
    d2 = (-P[4] + 16.0 * P[3] - 30.0 * P[2] + 16.0 * P[1] - P[0]) / (12.0 * h * h)
    d3 = (P[4] - 2.0 * P[3] + 2.0 * P[1] - P[0]) / (2.0 * h ** 3)
    cross = np.cross(d1, d2)
    speed = np.linalg.norm(d1)
    kappa = float(np.linalg.norm(cross) / speed ** 3)
    c2 = float(cross @ cross)
    tau = float(cross @ d3 / c2) if c2 > 1e-20 else 0.0
    return kappa, abs(tau)


@dataclass
class FlatStateReport:
    developable: bool
    developability_measure: float
    divergence_residual: float
    coupling_residual: float
    intrinsic_curvature: float
    samples: List[Dict[str, object]]
    r: float
    tolerance: float = FLAT_STATE_TOLERANCE
    h_convention_factor: int = H_CONVENTION_FACTOR

    @property
    def is_flat_state(self) -> bool:
        return (self.developable
                and self.divergence_residual <= self.tolerance
                and self.coupling_residual <= self.tolerance
                and self.intrinsic_curvature <= self.tolerance)

    def to_dict(self) -> Dict[str, object]:
        return {
            "developable": self.developable,
            "developability_measure": self.developability_measure,
            "divergence_residual": self.divergence_residual,
            "coupling_residual": self.coupling_residual,
            "intrinsic_curvature": self.intrinsic_curvature,
            "is_flat_state": self.is_flat_state,
            "samples": self.samples,
            "r": self.r,
            "tolerance": self.tolerance,
            "h_convention_factor": self.h_convention_factor,
        }


def default_samples(surface: SampledSurface) -> List[Tuple[float, float]]:
    """3×3 chart points at a quarter, half and three quarters of each range."""
    (a1, b1), (a2, b2) = surface.chart.ranges
    fractions = (0.25, 0.5, 0.75)
    return [(a1 + s * (b1 - a1), a2 + t * (b2 - a2)) for s in fractions for t in fractions]


def flat_state_report(surface: SampledSurface, v: VectorField, r: float,
                      samples: Optional[Sequence[Tuple[float, float]]] = None) -> FlatStateReport:
    """Checks of a flat thermal state vector v on a surface.

    Developability (K = 0), div_a v = r, 2Hκ − κ² − τ² = 0 along the v-lines
    (the form of 2H/κ = 1 + (τ/κ)² that stays finite as κ → 0) and flatness of
    the induced metric.
    """
    metric = metric_from_surface(surface)
    speed = np.sqrt(np.einsum("...a,...ab,...b->...", v.values, metric.values, v.values))
    if np.any(speed <= 1e-300):
        raise NonUnitFieldError(f"thermal state vector vanishes at {int(np.sum(speed <= 1e-300))} node(s)")

    dev = developability(surface)
    divergence = float(np.max(np.abs(div_a(metric, v).values - r)))
    flatness = float(np.max(np.abs(gauss_curvature_field(metric))) * surface.diameter ** 2)

    h = TRACE_STEP_RATIO * surface.diameter
    rows = []
    worst = 0.0
    for point in samples or default_samples(surface):
        u = np.asarray(point, dtype=float)
        kappa, tau = curve_frenet_data(_trace_points(surface, v, u, h), h)
        H, K = surface_mean_gauss(surface, (u[0], u[1]))
        scaled = 2.0 * H_CONVENTION_FACTOR * H * kappa - kappa * kappa - tau * tau
        row = {"u": [float(u[0]), float(u[1])], "kappa": kappa, "tau": tau, "H": H, "K": K,
               "scaled_residual": scaled}
        if kappa > config.FRENET_KAPPA_RATIO / surface.diameter:
            row["residual"] = 2.0 * H_CONVENTION_FACTOR * H / kappa - 1.0 - (tau / kappa) ** 2
        rows.append(row)
        worst = max(worst, abs(scaled))

    report = FlatStateReport(dev.is_developable, dev.measure, divergence, worst, flatness, rows, float(r))
    logger.info(f"flat state: developable={report.developable}, flat={report.is_flat_state}")
    return report


if __name__ == "__main__":
    helix = congruence_catalog("helix", b=4.0)
    frame = frenet_at(helix, (3.0, 0.0, 0.0))
    print(f"✅ helix a=3 b=4: κ = {frame.kappa:.12f}, τ = {frame.tau:.12f}")
    sheared = congruence_catalog("sheared", k=1.0)
    print(f"   sheared (n, curl n) = {normal_congruence_measure(sheared, (0.0, 1.0, 0.0)):.6f}")
