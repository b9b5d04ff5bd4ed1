"""
Thermal State: the isothermal equation Δ_a σ + K = r/2, conformal rescaling
of the metric and the thermal shape parameter.

The solver works on a compact symmetric divergence-form operator assembled
from the metric (coefficients √a a^{αβ} averaged to edge midpoints and cell
centers), so plain conjugate gradients apply.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Union

import numpy as np
from scipy import sparse

import config
from diff_ops import div_a, hessian_laplacian, laplace_beltrami
from error_handler import (
    ConvergenceError,
    DevelopableSurfaceError,
    IncompatibleProblemError,
    InvalidParameterError,
    NonFiniteError,
    ShapeMismatchError,
)
from fields import Chart, ScalarField, VectorField
from geom_core import MetricField
from monitoring import track_stage
from weyl import rescale_metric

logger = logging.getLogger("weylsheet.thermal")

# Restarts of the CG loop when the recomputed residual misses the target
MAX_RESTARTS = 3

ArrayLike = Union[ScalarField, np.ndarray, float]


def _values(chart: Chart, data: ArrayLike, name: str) -> np.ndarray:
    if isinstance(data, ScalarField):
        return data.values
    values = np.broadcast_to(np.asarray(data, dtype=float), chart.shape)
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f"{name} contains non-finite values")
    return values


# ============================================
# Compact operator
# ============================================

@dataclass
class GridOperator:
    """Symmetric stiffness matrix over the unique nodes of a chart.

    ``matrix @ σ`` approximates −√a Δ_a σ · h1 h2; ``weights`` holds
    √a h1 h2 per unique node and ``boundary`` marks Dirichlet nodes.
    """

    chart: Chart
    matrix: sparse.csr_matrix
    weights: np.ndarray
    index: np.ndarray
    boundary: np.ndarray

    @property
    def size(self) -> int:
        return int(self.weights.size)

    @property
    def reduced_shape(self):
        return tuple(n - 1 if p else n for n, p in zip(self.chart.resolution, self.chart.periodic))

    def reduce(self, values: np.ndarray) -> np.ndarray:
        m1, m2 = self.reduced_shape
        return np.asarray(values, dtype=float)[:m1, :m2].ravel()

    def expand(self, vector: np.ndarray) -> np.ndarray:
        return np.asarray(vector)[self.index]

    def laplacian(self, values: np.ndarray) -> np.ndarray:
        """Discrete Δ_a on the full grid; rows of Dirichlet nodes are incomplete."""
        return self.expand(-(self.matrix @ self.reduce(values)) / self.weights)


def assemble_operator(metric: MetricField) -> GridOperator:
    chart = metric.chart
    n1, n2 = chart.resolution
    h1, h2 = chart.spacing
    m1 = n1 - 1 if chart.periodic[0] else n1
    m2 = n2 - 1 if chart.periodic[1] else n2

    I, J = np.meshgrid(np.arange(n1), np.arange(n2), indexing="ij")
    index = (I % m1) * m2 + (J % m2)
    size = m1 * m2

    coeff = metric.sqrt_det[..., None, None] * metric.inverse()
    c11, c12, c22 = coeff[..., 0, 0], coeff[..., 0, 1], coeff[..., 1, 1]

    rows, cols, data = [], [], []

    def couple(p, q, w):
        rows.extend([p, q, p, q])
        cols.extend([p, q, q, p])
        data.extend([w, w, -w, -w])

    # Edges along u1
    w1 = 0.5 * (c11[:-1, :m2] + c11[1:, :m2]) * h2 / h1
    couple(index[:-1, :m2].ravel(), index[1:, :m2].ravel(), w1.ravel())
    # Edges along u2
    w2 = 0.5 * (c22[:m1, :-1] + c22[:m1, 1:]) * h1 / h2
    couple(index[:m1, :-1].ravel(), index[:m1, 1:].ravel(), w2.ravel())

    # Mixed term on cells, corners ordered (i,j), (i,j+1), (i+1,j), (i+1,j+1)
    w12 = (0.25 * (c12[:-1, :-1] + c12[:-1, 1:] + c12[1:, :-1] + c12[1:, 1:]) * h1 * h2).ravel()
    corners = [index[:-1, :-1].ravel(), index[:-1, 1:].ravel(), index[1:, :-1].ravel(), index[1:, 1:].ravel()]
    g1 = np.array([-1.0, -1.0, 1.0, 1.0]) / (2.0 * h1)
    g2 = np.array([-1.0, 1.0, -1.0, 1.0]) / (2.0 * h2)
    for a in range(4):
        for b in range(4):
            factor = g1[a] * g2[b] + g2[a] * g1[b]
            if factor != 0.0:
                rows.append(corners[a])
                cols.append(corners[b])
                data.append(w12 * factor)

    rows = np.concatenate([np.atleast_1d(r) for r in rows])
    cols = np.concatenate([np.atleast_1d(c) for c in cols])
    data = np.concatenate([np.atleast_1d(d) for d in data])
    matrix = sparse.coo_matrix((data, (rows, cols)), shape=(size, size)).tocsr()

    weights = (metric.sqrt_det[:m1, :m2] * h1 * h2).ravel()
    boundary = np.zeros((m1, m2), dtype=bool)
    if not chart.periodic[0]:
        boundary[0, :] = boundary[-1, :] = True
    if not chart.periodic[1]:
        boundary[:, 0] = boundary[:, -1] = True
    return GridOperator(chart, matrix, weights, index, boundary.ravel())


# ============================================
# Solver
# ============================================

@dataclass
class ThermalStateProblem:
    """Δ_a σ + K = r/2 with Dirichlet data on open boundaries."""

    metric: MetricField
    K: ScalarField
    r: float
    boundary: Optional[ScalarField] = None
    tolerance: float = config.SOLVER_TOLERANCE
    max_iterations: Optional[int] = None

    def __post_init__(self):
        if not np.isfinite(self.r):
            raise InvalidParameterError(f"r must be finite, got {self.r}")
        if not self.tolerance > 0:
            raise InvalidParameterError(f"solver tolerance must be positive, got {self.tolerance}")
        if self.K.chart.resolution != self.metric.chart.resolution:
            raise ShapeMismatchError("K and the metric live on different grids")
        if self.boundary is not None and self.boundary.chart.resolution != self.metric.chart.resolution:
            raise ShapeMismatchError("boundary data and the metric live on different grids")

    @property
    def fully_periodic(self) -> bool:
        return all(self.metric.chart.periodic)

    def source(self) -> np.ndarray:
        """f = r/2 − K, the right-hand side of Δ_a σ = f."""
        return 0.5 * self.r - self.K.values


@dataclass
class SolveReport:
    sigma: ScalarField
    residual: float
    iterations: int
    compatibility_defect: Optional[float] = None
    residual_field: np.ndarray = field(default=None, repr=False)
    tolerance: float = 0.0

    @property
    def converged(self) -> bool:
        return self.residual <= self.tolerance


def _conjugate_gradient(A, b, x, diag, weights, target, max_iter):
    """Jacobi-preconditioned CG; stops on max |r / W| ≤ target."""
    r = b - A @ x
    z = r / diag
    d = z.copy()
    rz = np.sum(r * z)
    k = 0
    while np.max(np.abs(r / weights), initial=0.0) > target and k < max_iter:
        Ad = A @ d
        alpha = rz / np.sum(d * Ad)
        x = x + alpha * d
        r = r - alpha * Ad
        z = r / diag
        rz_new = np.sum(r * z)
        d = z + (rz_new / rz) * d
        rz = rz_new
        k += 1
    return x, k


@track_stage("solve_sigma")
def solve_sigma(problem: ThermalStateProblem) -> SolveReport:
    op = assemble_operator(problem.metric)
    chart = problem.metric.chart
    A, W = op.matrix, op.weights
    f = op.reduce(problem.source())
    g = op.reduce(problem.boundary.values) if problem.boundary is not None else np.zeros(op.size)

    defect = None
    if problem.fully_periodic:
        defect = float(np.sum(W * f))
        allowed = problem.tolerance * max(1.0, float(np.sum(W * np.abs(f))))
        if abs(defect) > allowed:
            raise IncompatibleProblemError(defect)
        f = f - defect / np.sum(W)

    scale = max(1.0, float(np.max(np.abs(f))), float(np.max(np.abs(g))))
    target = problem.tolerance * scale

    free = ~op.boundary if op.boundary.any() else np.ones(op.size, dtype=bool)
    sigma = np.where(op.boundary, g, 0.0)
    A_ff = A[free][:, free]
    rhs = -W[free] * f[free]
    if op.boundary.any():
        rhs = rhs - A[free][:, op.boundary] @ sigma[op.boundary]

    diag = A_ff.diagonal()
    max_iter = problem.max_iterations or config.SOLVER_MAX_ITER_FACTOR * int(free.sum())
    x = np.zeros(int(free.sum()))
    iterations = 0
    for attempt in range(MAX_RESTARTS + 1):
        x, k = _conjugate_gradient(A_ff, rhs, x, diag, W[free], target, max_iter - iterations)
        iterations += k
        true_residual = float(np.max(np.abs((rhs - A_ff @ x) / W[free]), initial=0.0))
        if true_residual <= target:
            break
        if iterations >= max_iter:
            raise ConvergenceError(iterations, true_residual)
        logger.debug(f"CG restart {attempt + 1}: recomputed residual {true_residual:.3e}")
    else:
        raise ConvergenceError(iterations, true_residual)

    sigma[free] = x
    if problem.fully_periodic:
        sigma = sigma - np.sum(W * sigma) / np.sum(W)

    node_residual = np.where(free, -(A @ sigma) / W - f, 0.0)
    residual = float(np.max(np.abs(node_residual)))
    logger.info(f"solve_sigma: {iterations} iteration(s), residual {residual:.3e} (target {target:.3e})")
    return SolveReport(
        sigma=ScalarField(chart, op.expand(sigma)),
        residual=residual,
        iterations=iterations,
        compatibility_defect=defect,
        residual_field=op.expand(node_residual),
        tolerance=target,
    )


# ============================================
# Residuals and rescaling
# ============================================

def state_residual(metric: MetricField, v: VectorField, K: ArrayLike, r: float) -> ScalarField:
    """div_a v + 2K − r per node.

    When ``v`` is c · grad_a σ on this chart, the divergence on interior
    nodes is c times the compact Δ_a the solver uses, so the result is
    exactly 2 × the solve residual for v = 2 grad_a σ. Dirichlet nodes keep
    the stencil divergence.
    """
    K_values = _values(metric.chart, K, "K")
    divergence = div_a(metric, v).values
    if v.potential is not None and v.potential[0].chart == metric.chart:
        potential, factor = v.potential
        op = assemble_operator(metric)
        solved = ~op.expand(op.boundary)
        divergence = np.where(solved, factor * op.laplacian(potential.values), divergence)
    return ScalarField(metric.chart, divergence + 2.0 * K_values - r)


def conformal_metric(metric: MetricField, sigma: ScalarField) -> MetricField:
    """a_θ = e^{-2σ} a."""
    return rescale_metric(metric, sigma)


LAPLACIAN_STENCILS = ("hessian", "wide", "compact")


def conformal_curvature(K: ArrayLike, sigma: ScalarField, metric: MetricField,
                        stencil: str = "hessian") -> ScalarField:
    """K_θ = e^{2σ}(Δ_a σ + K).

    ``hessian`` uses the covariant second-derivative form, ``wide`` the
    composed div∘grad stencils and ``compact`` the solver's operator (its
    open-boundary rows fall back to the covariant form).
    """
    if stencil not in LAPLACIAN_STENCILS:
        raise InvalidParameterError(f"unknown stencil {stencil!r}; expected one of {LAPLACIAN_STENCILS}")
    K_values = _values(metric.chart, K, "K")
    if stencil == "wide":
        lap = laplace_beltrami(metric, sigma).values
    else:
        lap = hessian_laplacian(metric, sigma).values
        if stencil == "compact":
            op = assemble_operator(metric)
            inside = ~op.expand(op.boundary)
            lap = np.where(inside, op.laplacian(sigma.values), lap)
    return ScalarField(metric.chart, np.exp(2.0 * sigma.values) * (lap + K_values))


def sign_constancy(K_theta: ArrayLike, r: float, tolerance: Optional[float] = None,
                   chart: Optional[Chart] = None) -> Dict[str, object]:
    """Single-sign verdict for K_θ; with r = 0, K_θ must vanish to tolerance.

    With a chart the verdict is taken on the interior nodes only.
    """
    values = K_theta.values if isinstance(K_theta, ScalarField) else np.asarray(K_theta, dtype=float)
    chart = chart or (K_theta.chart if isinstance(K_theta, ScalarField) else None)
    if chart is not None:
        values = values[chart.interior()]
    tolerance = config.SOLVER_TOLERANCE * max(1.0, abs(r)) if tolerance is None else tolerance

    lo, hi = float(np.min(values)), float(np.max(values))
    if r > 0:
        holds, sign = lo > 0, "positive"
    elif r < 0:
        holds, sign = hi < 0, "negative"
    else:
        holds, sign = max(abs(lo), abs(hi)) <= tolerance, "zero"
    return {"r": float(r), "expected_sign": sign, "min": lo, "max": hi,
            "tolerance": float(tolerance), "sign_constant": bool(holds)}


def harmonic_theta_residual(metric: MetricField, theta: ScalarField) -> ScalarField:
    """Δ_a θ; vanishes for the linear thermoelastic flat case."""
    return laplace_beltrami(metric, theta)


def flat_reduction_check(metric: MetricField, K: ArrayLike, r: float, sigma: ScalarField) -> ScalarField:
    """With K = r = 0 the state equation reduces to Δ_a σ = 0; returns Δ_a σ."""
    K_values = _values(metric.chart, K, "K")
    if r != 0 or np.max(np.abs(K_values)) > config.DEVELOPABLE_TOLERANCE:
        raise InvalidParameterError("the flat reduction needs K = 0 and r = 0")
    return laplace_beltrami(metric, sigma)


@dataclass
class ShapeParameter:
    nu: np.ndarray
    # True where K vanishes and ν is undefined
    mask: np.ndarray
    l_theta: float

    @property
    def defined(self) -> int:
        return int(np.sum(~self.mask))


def shape_parameter(H: ArrayLike, K: ArrayLike, l_theta: float) -> ShapeParameter:
    """ν(θ) = H / (l(θ) K); nodes with K = 0 are masked out."""
    if not l_theta > 0:
        raise InvalidParameterError(f"thermal length must be positive, got {l_theta}")
    H = H.values if isinstance(H, ScalarField) else np.asarray(H, dtype=float)
    K = K.values if isinstance(K, ScalarField) else np.asarray(K, dtype=float)
    scale = max(1.0, float(np.max(H * H, initial=0.0)))
    mask = np.abs(K) <= config.DEVELOPABLE_TOLERANCE * scale
    if np.all(mask):
        raise DevelopableSurfaceError("ν is undefined: K vanishes at every node (developable surface)",
                                      nodes=int(mask.size))
    if np.any(mask):
        logger.warning(f"ν masked at {int(np.sum(mask))} node(s) where K = 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        nu = np.where(mask, np.nan, H / (l_theta * K))
    return ShapeParameter(nu, mask, float(l_theta))


if __name__ == "__main__":
    chart = Chart((0.0, 1.0), (0.0, 1.0), (33, 33))
    problem = ThermalStateProblem(MetricField.flat(chart), ScalarField.constant(chart, 0.0), r=4.0)
    report = solve_sigma(problem)
    print(f"✅ flat r=4: {report.iterations} iterations, residual {report.residual:.2e}")
    K_theta = conformal_curvature(problem.K, report.sigma, problem.metric, stencil="compact")
    print(f"   sign constancy: {sign_constancy(K_theta, problem.r)}")
