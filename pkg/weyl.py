"""
Weyl geometry on a chart: connection, metricity law, length transport,
gauge transformations, field strength and thermal profiles.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate

import config
from error_handler import (
    InvalidParameterError,
    NegativeTemperatureError,
    PathOutsideChartError,
    ThermalProfileError,
)
from fields import CovectorField, ScalarField, VectorField, gradient
from geom_core import MetricField, christoffel_from, gauss_curvature_field
from diff_ops import div_a

logger = logging.getLogger("weylsheet.weyl")

# Trapezoid samples per polyline segment in transport_length
TRANSPORT_SAMPLES = 8192


@dataclass
class WeylData:
    metric: MetricField
    w: CovectorField

    def w_sharp(self) -> np.ndarray:
        return np.einsum("...ab,...b->...a", self.metric.inverse(), self.w.values)

    def connection(self) -> np.ndarray:
        return weyl_connection_field(self.metric, self.w)


def weyl_connection_field(metric: MetricField, w: CovectorField) -> np.ndarray:
    """Γ^σ_αβ(a) − ½(w_α δ^σ_β + w_β δ^σ_α − w^σ a_αβ) at every node."""
    eye = np.eye(2)
    wv = w.values
    w_up = np.einsum("...ab,...b->...a", metric.inverse(), wv)
    correction = (
        np.einsum("...a,sb->...sab", wv, eye)
        + np.einsum("...b,sa->...sab", wv, eye)
        - np.einsum("...s,...ab->...sab", w_up, metric.values)
    )
    return christoffel_from(metric.values, metric.first_derivatives()) - 0.5 * correction


def weyl_connection(metric: MetricField, w: CovectorField, node: Tuple[int, int]) -> np.ndarray:
    i, j = node
    return weyl_connection_field(metric, w)[i, j]


def metricity_residual(weyl: WeylData, node: Tuple[int, int], connection: Optional[np.ndarray] = None) -> np.ndarray:
    """∇_σ a_αβ − w_σ a_αβ at one node; ``connection`` overrides the computed Γ."""
    i, j = node
    gamma = weyl_connection(weyl.metric, weyl.w, node) if connection is None else np.asarray(connection)
    a = weyl.metric.values[i, j]
    da = weyl.metric.first_derivatives()[i, j]
    w = weyl.w.values[i, j]
    covariant = (
        da
        - np.einsum("ksa,kb->sab", gamma, a)
        - np.einsum("ksb,ak->sab", gamma, a)
    )
    return covariant - np.einsum("s,ab->sab", w, a)


def transport_length(path: Sequence[Sequence[float]], eps: CovectorField, l0: float,
                     samples: int = TRANSPORT_SAMPLES) -> float:
    """l_0 · exp(∫_γ ε) along a polyline in the chart (trapezoid rule)."""
    if not l0 > 0:
        raise InvalidParameterError(f"reference length must be positive, got {l0}")
    vertices = np.asarray(path, dtype=float)
    if vertices.ndim != 2 or vertices.shape[1] != 2 or len(vertices) < 2:
        raise InvalidParameterError("path must be a polyline of at least two (u1, u2) vertices")
    # The chart is convex, so checking vertices keeps every segment inside
    if not eps.chart.contains(vertices[:, 0], vertices[:, 1]):
        raise PathOutsideChartError(f"path leaves the chart domain {eps.chart.ranges}")

    t = np.linspace(0.0, 1.0, samples + 1)
    total = 0.0
    for start, end in zip(vertices[:-1], vertices[1:]):
        points = start + t[:, None] * (end - start)
        values = eps.at(points[:, 0], points[:, 1])
        total += integrate.trapezoid(values @ (end - start), t)
    return float(l0 * np.exp(total))


def rescale_metric(metric: MetricField, sigma: ScalarField) -> MetricField:
    """e^{-2σ} a with derivatives by the product rule on the same dσ."""
    s = np.exp(-2.0 * sigma.values)
    a = metric.values
    ds = sigma.partials()
    d1 = metric.first_derivatives()
    new_d1 = s[..., None, None, None] * (d1 - 2.0 * np.einsum("...s,...ab->...sab", ds, a))

    d2 = metric.second_derivatives()
    dds = sigma.second_partials()
    new_d2 = s[..., None, None, None, None] * (
        d2
        - 2.0 * np.einsum("...t,...sab->...stab", ds, d1)
        - 2.0 * np.einsum("...s,...tab->...stab", ds, d1)
        + np.einsum("...st,...ab->...stab", 4.0 * np.einsum("...s,...t->...st", ds, ds) - 2.0 * dds, a)
    )
    return MetricField(metric.chart, s[..., None, None] * a, new_d1, new_d2)


def gauge_transform(metric: MetricField, w: CovectorField, sigma: ScalarField) -> Tuple[MetricField, CovectorField]:
    """(a, w) → (e^{-2σ} a, w − 2dσ); leaves the Weyl connection unchanged."""
    shifted = CovectorField(w.chart, w.values - 2.0 * sigma.partials())
    return rescale_metric(metric, sigma), shifted


def field_strength(eps: CovectorField) -> np.ndarray:
    """F[..., α, β] = ∂_α ε_β − ∂_β ε_α with grid stencils."""
    d = gradient(eps.values, eps.chart)
    return d - np.swapaxes(d, -2, -1)


def weyl_scalar_field(metric: MetricField, w: CovectorField) -> ScalarField:
    """2K + div_a(w^♯) on every node."""
    w_up = VectorField(metric.chart, np.einsum("...ab,...b->...a", metric.inverse(), w.values))
    return ScalarField(metric.chart, 2.0 * gauss_curvature_field(metric) + div_a(metric, w_up).values)


def weyl_scalar(metric: MetricField, w: CovectorField, node: Tuple[int, int]) -> float:
    i, j = node
    return float(weyl_scalar_field(metric, w).values[i, j])


# ============================================
# Thermal profiles
# ============================================

PROFILE_KINDS = ("constant", "inverse", "linear", "tabulated")


@dataclass
class ThermalProfile:
    """Expansion coefficient β(θ) with reference temperature θ_0 and length l_0."""

    kind: str
    params: Dict[str, object]
    theta0: float
    l0: float = 1.0
    theta_range: Optional[Tuple[float, float]] = None
    _table: Optional[Tuple[np.ndarray, np.ndarray]] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise InvalidParameterError(f"unknown thermal profile {self.kind!r}; expected one of {PROFILE_KINDS}")
        if self.theta0 < 0:
            raise NegativeTemperatureError(f"reference temperature must be nonnegative, got {self.theta0}")
        if not self.l0 > 0:
            raise InvalidParameterError(f"reference length must be positive, got {self.l0}")
        if self.kind == "tabulated":
            thetas = np.asarray(self.params["thetas"], dtype=float)
            betas = np.asarray(self.params["betas"], dtype=float)
            if thetas.shape != betas.shape or thetas.size < 2 or np.any(np.diff(thetas) <= 0):
                raise ThermalProfileError("tabulated profile needs matching, strictly increasing θ values")
            self._table = (thetas, betas)
            if self.theta_range is None:
                self.theta_range = (float(thetas[0]), float(thetas[-1]))
        if self.theta_range is not None:
            lo, hi = self.theta_range
            if not lo <= self.theta0 <= hi:
                raise ThermalProfileError(f"θ_0 = {self.theta0} lies outside the temperature range {self.theta_range}")
        self.validate()

    # Named forms
    @classmethod
    def constant(cls, beta: float, theta0: float, **kwargs) -> "ThermalProfile":
        return cls("constant", {"beta": float(beta)}, theta0, **kwargs)

    @classmethod
    def inverse(cls, k: float, theta0: float, **kwargs) -> "ThermalProfile":
        return cls("inverse", {"k": float(k)}, theta0, **kwargs)

    @classmethod
    def linear(cls, a: float, b: float, theta0: float, **kwargs) -> "ThermalProfile":
        return cls("linear", {"a": float(a), "b": float(b)}, theta0, **kwargs)

    @classmethod
    def tabulated(cls, thetas: Sequence[float], betas: Sequence[float], theta0: float, **kwargs) -> "ThermalProfile":
        return cls("tabulated", {"thetas": list(thetas), "betas": list(betas)}, theta0, **kwargs)

    @classmethod
    def from_spec(cls, spec: Dict[str, object]) -> "ThermalProfile":
        spec = dict(spec)
        kind = spec.pop("kind", None)
        theta0 = float(spec.pop("theta0", 1.0))
        l0 = float(spec.pop("l0", 1.0))
        rng = spec.pop("range", None)
        theta_range = tuple(float(v) for v in rng) if rng is not None else None
        try:
            if kind == "constant":
                return cls.constant(spec["beta"], theta0, l0=l0, theta_range=theta_range)
            if kind == "inverse":
                return cls.inverse(spec.get("k", 1.0), theta0, l0=l0, theta_range=theta_range)
            if kind == "linear":
                return cls.linear(spec["a"], spec["b"], theta0, l0=l0, theta_range=theta_range)
            if kind == "tabulated":
                return cls.tabulated(spec["thetas"], spec["betas"], theta0, l0=l0, theta_range=theta_range)
        except KeyError as e:
            raise InvalidParameterError(f"thermal profile {kind!r} is missing parameter {e}")
        raise InvalidParameterError(f"unknown thermal profile {kind!r}; expected one of {PROFILE_KINDS}")

    def beta(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.kind == "constant":
            return np.full_like(theta, self.params["beta"])
        if self.kind == "inverse":
            with np.errstate(divide="ignore"):
                return self.params["k"] / theta
        if self.kind == "linear":
            return self.params["a"] + self.params["b"] * theta
        thetas, betas = self._table
        return np.interp(theta, thetas, betas)

    def validate(self, theta_range: Optional[Tuple[float, float]] = None):
        """β(θ) ∈ [0, 1] on the given range, the declared one, or θ_0 alone."""
        lo, hi = theta_range or self.theta_range or (self.theta0, self.theta0)
        grid = np.linspace(lo, hi, 1001)
        if self._table is not None:
            table = self._table[0]
            grid = np.union1d(grid, table[(table >= lo) & (table <= hi)])
        values = self.beta(grid)
        bad = ~np.isfinite(values) | (values < 0) | (values > 1)
        if np.any(bad):
            first = float(grid[np.argmax(bad)])
            raise ThermalProfileError(f"β(θ) leaves [0, 1] on the temperature range, e.g. at θ = {first}")

    def check_range(self, theta):
        """Refuse θ < 0 and θ outside the declared range.

        Without a declared range, β is checked on the span of θ_0 and the
        given temperatures, the interval σ(θ) integrates over.
        """
        theta = np.asarray(theta, dtype=float)
        if np.any(theta < 0):
            raise NegativeTemperatureError(f"temperature must be nonnegative, minimum is {float(theta.min())}")
        if self.theta_range is None:
            self.validate((min(self.theta0, float(theta.min())), max(self.theta0, float(theta.max()))))
            return
        lo, hi = self.theta_range
        slack = 1e-12 * max(1.0, abs(hi))
        if np.any(theta < lo - slack) or np.any(theta > hi + slack):
            raise ThermalProfileError(f"temperature outside the profile range [{lo}, {hi}]")


def sigma_of_theta(profile: ThermalProfile, theta):
    """σ(θ) = ∫_{θ_0}^{θ} β(τ) dτ by adaptive quadrature."""
    profile.check_range(theta)
    theta = np.asarray(theta, dtype=float)
    unique, inverse = np.unique(theta, return_inverse=True)
    kinks = profile._table[0] if profile._table is not None else np.array([])

    def integral(upper: float) -> float:
        if upper == profile.theta0:
            return 0.0
        lo, hi = sorted((profile.theta0, upper))
        inside = [float(k) for k in kinks if lo < k < hi]
        value, _ = integrate.quad(lambda t: float(profile.beta(t)), profile.theta0, upper,
                                  epsabs=config.QUAD_ABS_TOL, epsrel=1e-12, limit=200,
                                  points=inside or None)
        return value

    sigma = np.array([integral(float(u)) for u in unique])
    result = sigma[inverse].reshape(theta.shape)
    return float(result) if result.ndim == 0 else result


def thermal_length(profile: ThermalProfile, theta: float) -> float:
    """l(θ) = l_0 exp(σ(θ))."""
    return float(profile.l0 * np.exp(sigma_of_theta(profile, float(theta))))


@dataclass
class ThermalEpsilon:
    eps: CovectorField
    sigma: ScalarField
    # (n1, n2, 2): component violates 0 ≤ ε_α ≤ 1 where ∂_α θ ≥ 0
    violations: np.ndarray
    negative_components: int

    @property
    def violation_count(self) -> int:
        return int(np.sum(np.any(self.violations, axis=-1)))

    def weyl_covector(self) -> CovectorField:
        """w = 2ε."""
        return CovectorField(self.eps.chart, 2.0 * self.eps.values)


def thermal_epsilon(profile: ThermalProfile, theta: ScalarField) -> ThermalEpsilon:
    """ε = β(θ) dθ together with σ(θ) and the per-node admissibility flags."""
    profile.check_range(theta.values)
    dtheta = theta.partials()
    eps_values = profile.beta(theta.values)[..., None] * dtheta

    heating = dtheta >= 0
    violations = heating & ((eps_values < 0) | (eps_values > 1))
    if np.any(violations):
        logger.warning(f"ε leaves [0, 1] at {int(np.sum(np.any(violations, axis=-1)))} node(s) where dθ ≥ 0")
    negative = int(np.sum(eps_values < 0))
    if negative:
        logger.warning(f"ε has {negative} negative component(s); the global sign condition does not hold")

    sigma = ScalarField(theta.chart, sigma_of_theta(profile, theta.values))
    return ThermalEpsilon(CovectorField(theta.chart, eps_values), sigma, violations, negative)
