"""
Charts, grid calculus and sampled fields.

Every field lives on a Chart: a rectangular parameter domain sampled on a
uniform (n1, n2) grid. Periodic axes carry a duplicated end node (node n-1
equals node 0) and their stencils wrap over the n-1 unique nodes; open axes
use second-order one-sided stencils at the boundary. ``derivative`` gives
the higher-order stencils that sampled-surface jets are built from.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy.interpolate import RectBivariateSpline

import config
from error_handler import InvalidParameterError, NonFiniteError, ShapeMismatchError
from expressions import Node, SURFACE_VARIABLES, evaluate, parse_expr, taylor_partials

logger = logging.getLogger("weylsheet.fields")


@dataclass(frozen=True)
class Chart:
    u1_range: Tuple[float, float]
    u2_range: Tuple[float, float]
    resolution: Tuple[int, int]
    periodic: Tuple[bool, bool] = (False, False)

    def __post_init__(self):
        for name, (lo, hi) in (("u1", self.u1_range), ("u2", self.u2_range)):
            if not (np.isfinite(lo) and np.isfinite(hi)) or not lo < hi:
                raise InvalidParameterError(f"chart range for {name} must satisfy min < max, got [{lo}, {hi}]")
        n1, n2 = self.resolution
        if int(n1) != n1 or int(n2) != n2 or n1 < 3 or n2 < 3:
            raise InvalidParameterError(f"chart resolution must be integers >= 3, got {self.resolution}")
        object.__setattr__(self, "u1_range", (float(self.u1_range[0]), float(self.u1_range[1])))
        object.__setattr__(self, "u2_range", (float(self.u2_range[0]), float(self.u2_range[1])))
        object.__setattr__(self, "resolution", (int(n1), int(n2)))
        object.__setattr__(self, "periodic", (bool(self.periodic[0]), bool(self.periodic[1])))

    @property
    def ranges(self) -> Tuple[Tuple[float, float], Tuple[float, float]]:
        return (self.u1_range, self.u2_range)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.resolution

    @property
    def spacing(self) -> Tuple[float, float]:
        return tuple((hi - lo) / (n - 1) for (lo, hi), n in zip(self.ranges, self.resolution))

    @property
    def diameter(self) -> float:
        return float(np.hypot(self.u1_range[1] - self.u1_range[0], self.u2_range[1] - self.u2_range[0]))

    def axis(self, k: int) -> np.ndarray:
        lo, hi = self.ranges[k]
        return np.linspace(lo, hi, self.resolution[k])

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.axis(0), self.axis(1), indexing="ij")

    def contains(self, u1, u2) -> bool:
        ok = True
        for u, (lo, hi) in zip((u1, u2), self.ranges):
            slack = 1e-12 * (hi - lo)
            ok = ok and bool(np.all((np.asarray(u) >= lo - slack) & (np.asarray(u) <= hi + slack)))
        return ok

    def interior(self) -> Tuple[slice, slice]:
        """Index of the nodes away from open boundaries."""
        return tuple(slice(None) if p else slice(1, -1) for p in self.periodic)

    def sub_chart(self, rows: slice, cols: slice) -> "Chart":
        """Chart of the node block ``[rows, cols]`` (non-periodic axes only)."""
        a1, a2 = self.axis(0)[rows], self.axis(1)[cols]
        return Chart((a1[0], a1[-1]), (a2[0], a2[-1]), (len(a1), len(a2)),
                     (self.periodic[0] and len(a1) == self.resolution[0],
                      self.periodic[1] and len(a2) == self.resolution[1]))


# ============================================
# Stencils
# ============================================

def _wrap_periodic(values: np.ndarray, axis: int, stencil: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    n = values.shape[axis]
    core = np.take(values, np.arange(n - 1), axis=axis)
    result = stencil(core)
    return np.concatenate([result, np.take(result, [0], axis=axis)], axis=axis)


def partial(values: np.ndarray, axis: int, chart: Chart) -> np.ndarray:
    """First derivative along chart axis 0 (u1) or 1 (u2)."""
    h = chart.spacing[axis]
    if chart.periodic[axis]:
        return _wrap_periodic(values, axis,
                              lambda c: (np.roll(c, -1, axis) - np.roll(c, 1, axis)) / (2.0 * h))
    return np.gradient(values, h, axis=axis, edge_order=2)


def second_partial(values: np.ndarray, axis: int, chart: Chart) -> np.ndarray:
    """Pure second derivative with the compact three-point stencil."""
    h = chart.spacing[axis]
    if chart.periodic[axis]:
        return _wrap_periodic(values, axis,
                              lambda c: (np.roll(c, -1, axis) - 2.0 * c + np.roll(c, 1, axis)) / (h * h))

    v = np.moveaxis(values, axis, 0)
    out = np.empty_like(v, dtype=float)
    out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / (h * h)
    if v.shape[0] >= 4:
        out[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / (h * h)
        out[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / (h * h)
    else:
        out[0] = out[1]
        out[-1] = out[-2]
    return np.moveaxis(out, 0, axis)


def mixed_partial(values: np.ndarray, chart: Chart) -> np.ndarray:
    return partial(partial(values, 1, chart), 0, chart)


def fd_weights(offsets: np.ndarray, order: int) -> np.ndarray:
    """Weights w with Σ w_j f(x + o_j h) ≈ h^order f^(order)(x)."""
    offsets = np.asarray(offsets, dtype=float)
    powers = np.arange(offsets.size)
    vander = offsets[None, :] ** powers[:, None]
    target = np.zeros(offsets.size)
    target[order] = math.factorial(order)
    return np.linalg.solve(vander, target)


def _low_order(values: np.ndarray, axis: int, chart: Chart, order: int) -> np.ndarray:
    if order == 1:
        return partial(values, axis, chart)
    if order == 2:
        return second_partial(values, axis, chart)
    return partial(second_partial(values, axis, chart), axis, chart)


def derivative(values: np.ndarray, axis: int, chart: Chart, order: int = 1,
               accuracy: int = config.FD_ACCURACY) -> np.ndarray:
    """Derivative of order 1-3 along one axis with O(h^accuracy) stencils.

    Interior nodes use central stencils and periodic axes wrap over the
    unique nodes; open edges use one-sided windows of order + accuracy
    points. Axes too short for the stencil get the low-order formulas.
    """
    if order not in (1, 2, 3):
        raise InvalidParameterError(f"derivative order must be 1, 2 or 3, got {order}")
    h = chart.spacing[axis]
    half = (order + 1) // 2 + accuracy // 2 - 1
    width = order + accuracy
    n = values.shape[axis]

    if chart.periodic[axis]:
        if n - 1 < 2 * half + 1:
            return _low_order(values, axis, chart, order)
        offsets = np.arange(-half, half + 1)
        weights = fd_weights(offsets, order) / h ** order
        return _wrap_periodic(values, axis, lambda c: sum(
            w * np.roll(c, -o, axis) for o, w in zip(offsets, weights)))

    if n < max(2 * half + 1, width):
        return _low_order(values, axis, chart, order)

    v = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
    out = np.empty_like(v)
    central = fd_weights(np.arange(-half, half + 1), order)
    out[half:n - half] = sum(w * v[half + o:n - half + o] for o, w in zip(range(-half, half + 1), central))
    for i in range(half):
        left = fd_weights(np.arange(width) - i, order)
        out[i] = np.tensordot(left, v[:width], axes=(0, 0))
        right = fd_weights(np.arange(n - width, n) - (n - 1 - i), order)
        out[n - 1 - i] = np.tensordot(right, v[n - width:], axes=(0, 0))
    return np.moveaxis(out / h ** order, 0, axis)


def gradient(values: np.ndarray, chart: Chart) -> np.ndarray:
    """Stack of (∂_1, ∂_2) on a new axis right after the two grid axes."""
    return np.stack([partial(values, 0, chart), partial(values, 1, chart)], axis=2)


def hessian(values: np.ndarray, chart: Chart) -> np.ndarray:
    d11 = second_partial(values, 0, chart)
    d22 = second_partial(values, 1, chart)
    d12 = mixed_partial(values, chart)
    return np.stack([np.stack([d11, d12], axis=2), np.stack([d12, d22], axis=2)], axis=2)


def map_rows(func: Callable[[slice], np.ndarray], n_rows: int, threads: Optional[int] = None) -> np.ndarray:
    """Evaluate ``func`` on row blocks and stitch the blocks back together.

    Each block is independent, so the result does not depend on ``threads``.
    """
    threads = max(1, int(threads or config.THREADS))
    if threads == 1 or n_rows < 2 * threads:
        return func(slice(0, n_rows))
    bounds = np.linspace(0, n_rows, threads + 1).astype(int)
    blocks = [slice(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(func, blocks))
    return np.concatenate(parts, axis=0)


def spline(chart: Chart, values: np.ndarray) -> RectBivariateSpline:
    kx = min(3, chart.resolution[0] - 1)
    ky = min(3, chart.resolution[1] - 1)
    return RectBivariateSpline(chart.axis(0), chart.axis(1), values, kx=kx, ky=ky)


def _check_values(chart: Chart, values: np.ndarray, trailing: Tuple[int, ...], kind: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    expected = tuple(chart.resolution) + trailing
    if values.shape != expected:
        raise ShapeMismatchError(f"{kind} values have shape {values.shape}, chart expects {expected}")
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f"{kind} contains non-finite values")
    return values


def _as_node(expr: Union[str, Node]) -> Node:
    return parse_expr(expr, SURFACE_VARIABLES) if isinstance(expr, str) else expr


# ============================================
# Field types
# ============================================

@dataclass
class ScalarField:
    chart: Chart
    values: np.ndarray
    source: Optional[Node] = None

    def __post_init__(self):
        self.values = _check_values(self.chart, self.values, (), "scalar field")

    @classmethod
    def from_expression(cls, chart: Chart, expr: Union[str, Node]) -> "ScalarField":
        node = _as_node(expr)
        u1, u2 = chart.mesh()
        with np.errstate(all="ignore"):
            values = np.broadcast_to(evaluate(node, {"u1": u1, "u2": u2}), chart.shape)
        return cls(chart, np.array(values, dtype=float), node)

    @classmethod
    def constant(cls, chart: Chart, value: float) -> "ScalarField":
        return cls(chart, np.full(chart.shape, float(value)))

    def _jets(self, order: int):
        u1, u2 = self.chart.mesh()
        with np.errstate(all="ignore"):
            jets = taylor_partials([self.source], ("u1", "u2"), (u1, u2), order)
        return {key: value[..., 0] for key, value in jets.items()}

    def partials(self) -> np.ndarray:
        """(n1, n2, 2) array of ∂_α f; exact when the field has a source."""
        if self.source is None:
            return gradient(self.values, self.chart)
        jets = self._jets(1)
        return np.stack([jets[(0,)], jets[(1,)]], axis=-1)

    def second_partials(self) -> np.ndarray:
        if self.source is None:
            return hessian(self.values, self.chart)
        jets = self._jets(2)
        return np.stack([np.stack([jets[(0, 0)], jets[(0, 1)]], axis=-1),
                         np.stack([jets[(0, 1)], jets[(1, 1)]], axis=-1)], axis=-2)

    def at(self, u1, u2) -> np.ndarray:
        if self.source is not None:
            value = evaluate(self.source, {"u1": np.asarray(u1, float), "u2": np.asarray(u2, float)})
            return np.broadcast_to(value, np.broadcast(u1, u2).shape).astype(float)
        return spline(self.chart, self.values).ev(u1, u2)


@dataclass
class _ComponentField:
    """Two-component field; ``values[..., k]`` is component k."""

    chart: Chart
    values: np.ndarray
    source: Optional[Tuple[Node, Node]] = None
    # (f, c) when the field is c · grad f; lets divergence reuse the operator that solved f
    potential: Optional[Tuple["ScalarField", float]] = field(default=None, repr=False, compare=False)

    kind = "vector field"
    __array_ufunc__ = None

    def __post_init__(self):
        self.values = _check_values(self.chart, self.values, (2,), self.kind)

    @classmethod
    def from_expressions(cls, chart: Chart, first: Union[str, Node], second: Union[str, Node]):
        nodes = (_as_node(first), _as_node(second))
        u1, u2 = chart.mesh()
        with np.errstate(all="ignore"):
            comps = [np.broadcast_to(evaluate(n, {"u1": u1, "u2": u2}), chart.shape) for n in nodes]
        return cls(chart, np.stack(comps, axis=-1).astype(float), nodes)

    @classmethod
    def zeros(cls, chart: Chart):
        return cls(chart, np.zeros(tuple(chart.shape) + (2,)))

    def __rmul__(self, factor: float):
        potential = None if self.potential is None else (self.potential[0], float(factor) * self.potential[1])
        return type(self)(self.chart, float(factor) * self.values, potential=potential)

    def partials(self) -> np.ndarray:
        """(n1, n2, 2, 2) array d[..., s, k] = ∂_s (component k)."""
        if self.source is None:
            return gradient(self.values, self.chart)
        u1, u2 = self.chart.mesh()
        with np.errstate(all="ignore"):
            jets = taylor_partials(list(self.source), ("u1", "u2"), (u1, u2), 1)
        return np.stack([jets[(0,)], jets[(1,)]], axis=-2)

    def at(self, u1, u2) -> np.ndarray:
        if self.source is not None:
            shape = np.broadcast(u1, u2).shape
            env = {"u1": np.asarray(u1, float), "u2": np.asarray(u2, float)}
            return np.stack([np.broadcast_to(evaluate(n, env), shape) for n in self.source], axis=-1).astype(float)
        return np.stack([spline(self.chart, self.values[..., k]).ev(u1, u2) for k in range(2)], axis=-1)


class VectorField(_ComponentField):
    """Contravariant components v^α."""

    kind = "vector field"


class CovectorField(_ComponentField):
    """Covariant components w_α."""

    kind = "covector field"
