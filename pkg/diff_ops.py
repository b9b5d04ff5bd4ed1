"""
Metric-aware differential operators on charts, 3D curl, and the Minkowski
vector algebra (inner product, causal classes, h-cross product).
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Tuple, Union

import numpy as np

from error_handler import (
    DegenerateSecondFormError,
    InvalidParameterError,
    NonUnitFieldError,
    SingularMetricError,
)
from fields import ScalarField, VectorField, partial
from geom_core import FundamentalForms, MetricField, christoffel_field

logger = logging.getLogger("weylsheet.diff_ops")

# Second-form determinant below this fraction of |b|² counts as singular
SECOND_FORM_RELATIVE_TOLERANCE = 1e-12

LEVI_CIVITA = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    LEVI_CIVITA[_i, _j, _k] = 1.0
    LEVI_CIVITA[_i, _k, _j] = -1.0


# ============================================
# Chart operators
# ============================================

def grad_a(metric: MetricField, f: ScalarField) -> VectorField:
    """(grad f)^α = a^{αβ} ∂_β f."""
    df = f.partials()
    return VectorField(metric.chart, np.einsum("...ab,...b->...a", metric.inverse(), df), potential=(f, 1.0))


def _log_sqrt_det_gradient(metric: MetricField) -> np.ndarray:
    """∂_α ln √a = ½ a^{βγ} ∂_α a_βγ, from the stored metric derivatives."""
    return 0.5 * np.einsum("...bc,...abc->...a", metric.inverse(), metric.first_derivatives())


def div_a(metric: MetricField, v: VectorField) -> ScalarField:
    """div_a v = |a|^{-1/2} ∂_α(|a|^{1/2} v^α).

    With exact metric derivatives the product rule is used,
    ∂_α v^α + v^α ∂_α ln √a; otherwise the conservative difference of √a v.
    """
    chart = metric.chart
    if metric.d1 is not None:
        dv = v.partials()
        values = dv[..., 0, 0] + dv[..., 1, 1] + np.einsum("...a,...a->...", v.values, _log_sqrt_det_gradient(metric))
        return ScalarField(chart, values)
    root = metric.sqrt_det
    flux = root[..., None] * v.values
    values = (partial(flux[..., 0], 0, chart) + partial(flux[..., 1], 1, chart)) / root
    return ScalarField(chart, values)


def div_a_christoffel(metric: MetricField, v: VectorField) -> ScalarField:
    """Covariant form ∂_α v^α + Γ^α_{αβ} v^β."""
    dv = v.partials()
    contracted = np.einsum("...aab->...b", christoffel_field(metric))
    return ScalarField(metric.chart, dv[..., 0, 0] + dv[..., 1, 1] + np.einsum("...b,...b->...", contracted, v.values))


def laplace_beltrami(metric: MetricField, f: ScalarField) -> ScalarField:
    return div_a(metric, grad_a(metric, f))


def hessian_laplacian(metric: MetricField, f: ScalarField) -> ScalarField:
    """Covariant form a^{αβ}(∂_α∂_β f − Γ^κ_{αβ} ∂_κ f); exact when f and the metric are."""
    gamma = christoffel_field(metric)
    covariant = f.second_partials() - np.einsum("...kab,...k->...ab", gamma, f.partials())
    return ScalarField(metric.chart, np.einsum("...ab,...ab->...", metric.inverse(), covariant))


def _second_form_matrix(b: Union[FundamentalForms, np.ndarray]) -> np.ndarray:
    return b.second_matrix() if isinstance(b, FundamentalForms) else np.asarray(b, dtype=float)


def lambda_ab(metric: MetricField, b: Union[FundamentalForms, np.ndarray],
              K: Union[ScalarField, np.ndarray], f: ScalarField) -> ScalarField:
    """Λ_{a,b} f = a^{-1/2} ∂_α(√a K b^{αβ} ∂_β f); refuses where det b vanishes."""
    chart = metric.chart
    bm = _second_form_matrix(b)
    det_b = bm[..., 0, 0] * bm[..., 1, 1] - bm[..., 0, 1] * bm[..., 1, 0]
    scale = np.max(np.abs(bm), axis=(-2, -1)) ** 2
    singular = np.abs(det_b) <= SECOND_FORM_RELATIVE_TOLERANCE * np.maximum(scale, 1e-300)
    if np.any(singular):
        raise DegenerateSecondFormError(
            f"second fundamental form is singular at {int(np.sum(singular))} node(s); "
            f"Λ_(a,b) is undefined on developable regions",
            nodes=int(np.sum(singular)),
        )

    K_values = K.values if isinstance(K, ScalarField) else np.asarray(K, dtype=float)
    b_inv = np.linalg.inv(bm)
    root = metric.sqrt_det
    flux = (root * K_values)[..., None] * np.einsum("...ab,...b->...a", b_inv, f.partials())
    values = (partial(flux[..., 0], 0, chart) + partial(flux[..., 1], 1, chart)) / root
    return ScalarField(chart, values)


# ============================================
# Three-dimensional calculus
# ============================================

@dataclass(frozen=True)
class Box3:
    bounds: Tuple[Tuple[float, float], Tuple[float, float], Tuple[float, float]]
    shape: Tuple[int, int, int] = (17, 17, 17)

    def __post_init__(self):
        for lo, hi in self.bounds:
            if not lo < hi:
                raise InvalidParameterError(f"box bounds must satisfy min < max, got [{lo}, {hi}]")
        if any(n < 3 for n in self.shape):
            raise InvalidParameterError(f"box resolution must be >= 3 per axis, got {self.shape}")

    @property
    def spacing(self) -> Tuple[float, float, float]:
        return tuple((hi - lo) / (n - 1) for (lo, hi), n in zip(self.bounds, self.shape))

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm([hi - lo for lo, hi in self.bounds]))

    def axis(self, k: int) -> np.ndarray:
        lo, hi = self.bounds[k]
        return np.linspace(lo, hi, self.shape[k])

    def mesh(self) -> np.ndarray:
        """(nx, ny, nz, 3) array of node coordinates."""
        return np.stack(np.meshgrid(self.axis(0), self.axis(1), self.axis(2), indexing="ij"), axis=-1)


@dataclass(frozen=True)
class Metric3:
    matrix: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.matrix, dtype=float)
        if g.shape != (3, 3) or not np.allclose(g, g.T, rtol=0, atol=1e-14):
            raise InvalidParameterError("3-metric must be a symmetric 3x3 matrix")
        if abs(np.linalg.det(g)) <= 1e-300:
            raise SingularMetricError("3-metric is degenerate")
        object.__setattr__(self, "matrix", g)

    @classmethod
    def minkowski(cls, signature: int = 1) -> "Metric3":
        if signature not in (1, -1):
            raise InvalidParameterError(f"signature must be +1 or -1, got {signature}")
        return cls(np.diag([1.0, 1.0, float(signature)]))

    @property
    def volume_factor(self) -> float:
        return float(np.sqrt(abs(np.linalg.det(self.matrix))))


def _as_metric3(g) -> Metric3:
    if isinstance(g, Metric3):
        return g
    samples = np.asarray(g, dtype=float)
    if samples.shape == (3, 3):
        return Metric3(samples)
    flat = samples.reshape(-1, 3, 3)
    if not np.all(flat == flat[0]):
        raise InvalidParameterError("curl on a non-constant 3-metric is not supported")
    return Metric3(flat[0])


def _curl_from_jacobian(g: Metric3, jac: np.ndarray) -> np.ndarray:
    """u^k = e^{klm} ∂_l v_m with e^{klm} = ε^{klm}/√|g|; jac[..., i, l] = ∂_l v^i."""
    lowered = np.einsum("mn,...nl->...ml", g.matrix, jac)
    return np.einsum("klm,...ml->...k", LEVI_CIVITA, lowered) / g.volume_factor


def curl3(g, values: np.ndarray, box: Box3) -> np.ndarray:
    """Curl of a sampled contravariant field on a box (constant metric only)."""
    metric = _as_metric3(g)
    values = np.asarray(values, dtype=float)
    if values.shape != tuple(box.shape) + (3,):
        raise InvalidParameterError(f"field shape {values.shape} does not match box {box.shape}")
    jac = np.stack([np.gradient(values, box.spacing[l], axis=l, edge_order=2) for l in range(3)], axis=-1)
    return _curl_from_jacobian(metric, jac)


def jacobian_at(field: Callable[[np.ndarray], np.ndarray], point, step: float) -> np.ndarray:
    """Fourth-order central Jacobian J[i, l] = ∂_l v^i of a vectorized field."""
    p = np.asarray(point, dtype=float)
    offsets = np.array([2.0, 1.0, -1.0, -2.0]) * step
    samples = p + offsets[:, None, None] * np.eye(3)[None, :, :]
    v = np.asarray(field(samples.reshape(-1, 3))).reshape(4, 3, -1)
    jac = (-v[0] + 8.0 * v[1] - 8.0 * v[2] + v[3]) / (12.0 * step)
    return jac.T


def curl_at(g, field: Callable[[np.ndarray], np.ndarray], point, step: float) -> np.ndarray:
    return _curl_from_jacobian(_as_metric3(g), jacobian_at(field, point, step))


# ============================================
# Minkowski vector algebra
# ============================================

class CausalClass(Enum):
    SPACELIKE = "spacelike"
    TIMELIKE = "timelike"
    NULL = "null"


def inner_e(u, v, signature: int = 1) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return u[..., 0] * v[..., 0] + u[..., 1] * v[..., 1] + signature * u[..., 2] * v[..., 2]


def causal_class(v, signature: int = 1, tol: float = 1e-12) -> CausalClass:
    v = np.asarray(v, dtype=float)
    q = float(inner_e(v, v, signature))
    if abs(q) <= tol * float(v @ v):
        return CausalClass.NULL
    return CausalClass.SPACELIKE if q > 0 else CausalClass.TIMELIKE


def _check_unit(n: np.ndarray):
    if abs(float(n @ n) - 1.0) > 1e-12:
        raise NonUnitFieldError(f"distinguished direction must be a Euclidean unit vector, |n|² = {float(n @ n)!r}")


def h_metric(n) -> np.ndarray:
    """h = g − 2 n⊗n for a Euclidean unit vector n."""
    n = np.asarray(n, dtype=float)
    _check_unit(n)
    return np.eye(3) - 2.0 * np.outer(n, n)


def cross_h(u, v, n) -> np.ndarray:
    """u ×_h v = R_n(u × v) with R_n = 1 − 2 n⊗n."""
    n = np.asarray(n, dtype=float)
    _check_unit(n)
    w = np.cross(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    return w - 2.0 * (w @ n)[..., None] * n if w.ndim > 1 else w - 2.0 * (w @ n) * n


def isotropic_pair(s, n) -> Tuple[np.ndarray, np.ndarray]:
    """Null vectors e± = (s ± n)/√2 for unit s in the plane normal to n."""
    s = np.asarray(s, dtype=float)
    n = np.asarray(n, dtype=float)
    _check_unit(n)
    if abs(float(s @ s) - 1.0) > 1e-12 or abs(float(s @ n)) > 1e-12:
        raise InvalidParameterError("s must be a unit vector orthogonal to n")
    root = np.sqrt(2.0)
    return (s + n) / root, (s - n) / root


def split_isotropic(e_plus, e_minus) -> Tuple[np.ndarray, np.ndarray]:
    """Recover (s, n) from an isotropic pair."""
    root = np.sqrt(2.0)
    e_plus = np.asarray(e_plus, dtype=float)
    e_minus = np.asarray(e_minus, dtype=float)
    return (e_plus + e_minus) / root, (e_plus - e_minus) / root


def inner_h(u, v, n) -> float:
    """(u, v)_h with h = g − 2 n⊗n."""
    return float(np.asarray(u, dtype=float) @ h_metric(n) @ np.asarray(v, dtype=float))
