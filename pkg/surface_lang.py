"""
Surface Language: analytic surface definitions, embedding jets and grid files

Analytic surfaces are three expressions in (u1, u2) separated by ';'. Jets
(position and partial derivatives of the embedding) come from nested dual
numbers, so they are exact to machine precision; sampled surfaces get their
jets from finite differences or a bicubic spline.
"""

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np

import config
from error_handler import (
    DomainViolationError,
    GridFormatError,
    InvalidParameterError,
    NonFiniteError,
    ShapeMismatchError,
)
from expressions import (
    Node,
    SURFACE_VARIABLES,
    evaluate,
    parse_expr,
    print_expr,
    split_components,
    taylor_partials,
)
from fields import Chart, derivative, map_rows, spline

logger = logging.getLogger("weylsheet.surface")

# Order of the stored second and third partials
SECOND_KEYS = ((0, 0), (0, 1), (1, 1))
THIRD_KEYS = ((0, 0, 0), (0, 0, 1), (0, 1, 1), (1, 1, 1))


@dataclass(frozen=True)
class SurfaceExpr:
    x: Node
    y: Node
    z: Node
    # Documented domain and periodicity; set by the catalog, None for parsed text
    domain: Optional[Tuple[Tuple[float, float], Tuple[float, float]]] = field(default=None, compare=False)
    periodic: Tuple[bool, bool] = field(default=(False, False), compare=False)
    name: Optional[str] = field(default=None, compare=False)

    @property
    def components(self) -> Tuple[Node, Node, Node]:
        return (self.x, self.y, self.z)

    def default_chart(self, resolution: Tuple[int, int] = (65, 65)) -> Chart:
        if self.domain is None:
            raise InvalidParameterError("surface expression has no documented domain; give a chart")
        return Chart(self.domain[0], self.domain[1], resolution, self.periodic)


@dataclass
class SurfaceJet:
    """Embedding jet on any array of points.

    ``first[..., a, :]`` is r_a, ``second[..., k, :]`` follows SECOND_KEYS
    (r_11, r_12, r_22) and ``third`` follows THIRD_KEYS.
    """

    position: np.ndarray
    first: np.ndarray
    second: Optional[np.ndarray] = None
    third: Optional[np.ndarray] = None

    def r(self, *axes: int) -> np.ndarray:
        """Partial of the embedding by the given axes, e.g. ``r(0, 1)`` = r_12."""
        key = tuple(sorted(axes))
        if len(key) == 0:
            return self.position
        if len(key) == 1:
            return self.first[..., key[0], :]
        if len(key) == 2:
            return self.second[..., SECOND_KEYS.index(key), :]
        return self.third[..., THIRD_KEYS.index(key), :]

    def at(self, index) -> "SurfaceJet":
        pick = lambda a: None if a is None else a[index]
        return SurfaceJet(pick(self.position), pick(self.first), pick(self.second), pick(self.third))


@dataclass
class SampledSurface:
    chart: Chart
    positions: np.ndarray
    source: Optional[SurfaceExpr] = None

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        expected = tuple(self.chart.resolution) + (3,)
        if self.positions.shape != expected:
            raise ShapeMismatchError(f"positions have shape {self.positions.shape}, chart expects {expected}")
        if not np.all(np.isfinite(self.positions)):
            raise NonFiniteError("surface positions contain non-finite values")

    @property
    def diameter(self) -> float:
        """Euclidean bounding-box diagonal of the embedded sheet."""
        flat = self.positions.reshape(-1, 3)
        return float(np.linalg.norm(flat.max(axis=0) - flat.min(axis=0)))

    def restrict(self, rows: slice, cols: slice) -> "SampledSurface":
        return SampledSurface(self.chart.sub_chart(rows, cols), self.positions[rows, cols], self.source)


# ============================================
# Parsing and printing
# ============================================

def parse_surface(text: str) -> SurfaceExpr:
    """Parse ``"x(u1,u2); y(u1,u2); z(u1,u2)"`` into a SurfaceExpr."""
    pieces = split_components(text, 3)
    nodes = [parse_expr(part, SURFACE_VARIABLES, offset) for part, offset in pieces]
    return SurfaceExpr(*nodes)


def print_surface(expr: SurfaceExpr) -> str:
    return "; ".join(print_expr(node) for node in expr.components)


# ============================================
# Jets
# ============================================

def _jet_from_partials(partials: Dict[tuple, np.ndarray], order: int) -> SurfaceJet:
    first = np.stack([partials[(0,)], partials[(1,)]], axis=-2)
    second = np.stack([partials[k] for k in SECOND_KEYS], axis=-2) if order >= 2 else None
    third = np.stack([partials[k] for k in THIRD_KEYS], axis=-2) if order >= 3 else None
    return SurfaceJet(partials[()], first, second, third)


def _expression_jets(expr: SurfaceExpr, u1, u2, order: int) -> SurfaceJet:
    with np.errstate(all="ignore"):
        partials = taylor_partials(expr.components, ("u1", "u2"), (u1, u2), order)
    for key, value in partials.items():
        if not np.all(np.isfinite(value)):
            raise NonFiniteError(f"non-finite value in derivative {key} of the surface expression")
    return _jet_from_partials(partials, order)


def eval_jet(expr: SurfaceExpr, point: Tuple[float, float], order: int = 2,
             chart: Optional[Chart] = None) -> SurfaceJet:
    """Exact embedding jet at one point (order 1, 2 or 3)."""
    if order not in (1, 2, 3):
        raise InvalidParameterError(f"jet order must be 1, 2 or 3, got {order}")
    u1, u2 = float(point[0]), float(point[1])
    if chart is None and expr.domain is not None:
        chart = expr.default_chart()
    if chart is not None and not chart.contains(u1, u2):
        raise DomainViolationError(f"point ({u1}, {u2}) lies outside the chart domain {chart.ranges}")
    return _expression_jets(expr, np.array(u1), np.array(u2), order)


def analytic_jets(expr: SurfaceExpr, chart: Chart, order: int = 2, threads: Optional[int] = None) -> SurfaceJet:
    """Exact jets on every grid node, evaluated in row blocks."""
    u1, u2 = chart.mesh()

    def block(rows: slice) -> np.ndarray:
        jet = _expression_jets(expr, u1[rows], u2[rows], order)
        parts = [jet.position[..., None, :], jet.first]
        if order >= 2:
            parts.append(jet.second)
        if order >= 3:
            parts.append(jet.third)
        return np.concatenate(parts, axis=-2)

    packed = map_rows(block, chart.resolution[0], threads)
    return SurfaceJet(
        packed[..., 0, :],
        packed[..., 1:3, :],
        packed[..., 3:6, :] if order >= 2 else None,
        packed[..., 6:10, :] if order >= 3 else None,
    )


def grid_jets(surface: SampledSurface, order: int = 2) -> SurfaceJet:
    """Finite-difference jets of the sampled positions, up to third order."""
    chart, p = surface.chart, surface.positions

    def d(values, axis, k=1):
        return derivative(values, axis, chart, k)

    first = np.stack([d(p, 0), d(p, 1)], axis=2)
    if order < 2:
        return SurfaceJet(p, first)
    r11, r22 = d(p, 0, 2), d(p, 1, 2)
    second = np.stack([r11, d(first[..., 1, :], 0), r22], axis=2)
    if order < 3:
        return SurfaceJet(p, first, second)
    third = np.stack([d(p, 0, 3), d(r11, 1), d(r22, 0), d(p, 1, 3)], axis=2)
    return SurfaceJet(p, first, second, third)


def surface_jets(surface: SampledSurface, order: int = 2) -> SurfaceJet:
    """Node jets: exact for analytic sources, finite differences otherwise."""
    if surface.source is not None:
        return analytic_jets(surface.source, surface.chart, order)
    if order > 3:
        raise InvalidParameterError(f"grid jets go up to third order, got {order}")
    return grid_jets(surface, order)


def jets_at(surface: SampledSurface, u1, u2, order: int = 2) -> SurfaceJet:
    """Jets at arbitrary chart points: exact or from a bicubic spline."""
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    if not surface.chart.contains(u1, u2):
        raise DomainViolationError("evaluation points lie outside the chart domain")
    if surface.source is not None:
        return _expression_jets(surface.source, u1, u2, order)
    splines = [spline(surface.chart, surface.positions[..., k]) for k in range(3)]
    partials = {}
    keys = [()] + [(0,), (1,)] + (list(SECOND_KEYS) if order >= 2 else [])
    for key in keys:
        dx, dy = key.count(0), key.count(1)
        partials[key] = np.stack([s.ev(u1, u2, dx=dx, dy=dy) for s in splines], axis=-1)
    return _jet_from_partials(partials, min(order, 2))


def surface_position(surface: SampledSurface) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Callable (u1, u2) -> r(u1, u2) for off-grid evaluation."""
    def position(u1, u2):
        return jets_at(surface, u1, u2, order=1).position
    return position


def sample_surface(expr: SurfaceExpr, chart: Optional[Chart] = None) -> SampledSurface:
    chart = chart or expr.default_chart()
    u1, u2 = chart.mesh()
    with np.errstate(all="ignore"):
        comps = [np.broadcast_to(evaluate(node, {"u1": u1, "u2": u2}), chart.shape) for node in expr.components]
    return SampledSurface(chart, np.stack(comps, axis=-1).astype(float), expr)


# ============================================
# Grid files
# ============================================

_HEADER_RE = re.compile(
    r"^(?P<magic>\S+)\s+(?P<version>\S+)\s+n1=(?P<n1>\d+)\s+n2=(?P<n2>\d+)"
    r"\s+u1=(?P<u1>\S+):(?P<u1max>\S+)\s+u2=(?P<u2>\S+):(?P<u2max>\S+)"
    r"\s+periodic=(?P<p1>\w+),(?P<p2>\w+)\s*$"
)

_FLAGS = {"0": False, "1": True, "false": False, "true": True}


def _parse_float(text: str, where: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise GridFormatError(f"{where}: {text!r} is not a number")


def load_grid(path: Union[str, Path]) -> SampledSurface:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"grid file not found: {path}")

    lines = [line for line in path.read_text().splitlines() if line.strip()]
    if not lines:
        raise GridFormatError(f"{path}: empty grid file")

    match = _HEADER_RE.match(lines[0].strip())
    if not match or match["magic"] != config.GRID_MAGIC or match["version"] != config.GRID_VERSION:
        raise GridFormatError(f"{path}: malformed header {lines[0]!r}")
    flags = (match["p1"].lower(), match["p2"].lower())
    if any(f not in _FLAGS for f in flags):
        raise GridFormatError(f"{path}: periodic flags must be 0/1 or true/false, got {flags}")

    try:
        chart = Chart(
            (_parse_float(match["u1"], "u1 min"), _parse_float(match["u1max"], "u1 max")),
            (_parse_float(match["u2"], "u2 min"), _parse_float(match["u2max"], "u2 max")),
            (int(match["n1"]), int(match["n2"])),
            (_FLAGS[flags[0]], _FLAGS[flags[1]]),
        )
    except InvalidParameterError as e:
        raise GridFormatError(f"{path}: {e}")

    n1, n2 = chart.resolution
    rows = lines[1:]
    if len(rows) != n1 * n2:
        raise ShapeMismatchError(f"{path}: header declares {n1}x{n2} = {n1 * n2} nodes, found {len(rows)} rows")

    positions = np.empty((n1, n2, 3))
    for count, row in enumerate(rows):
        parts = row.split()
        if len(parts) != 5:
            raise GridFormatError(f"{path}: row {count + 2} needs 5 fields 'i j x y z'")
        i, j = int(parts[0]), int(parts[1])
        if (i, j) != divmod(count, n2):
            raise ShapeMismatchError(f"{path}: row {count + 2} has index ({i}, {j}), expected {divmod(count, n2)}")
        values = [_parse_float(v, f"row {count + 2}") for v in parts[2:]]
        if not all(np.isfinite(values)):
            raise GridFormatError(f"{path}: non-finite entry in row {count + 2}")
        positions[i, j] = values

    logger.info(f"Loaded {n1}x{n2} grid from {path}")
    return SampledSurface(chart, positions)


def save_grid(surface: SampledSurface, path: Union[str, Path]) -> Path:
    """Write the grid format; floats use repr so a reload is bit-exact."""
    path = Path(path)
    chart = surface.chart
    n1, n2 = chart.resolution
    header = (
        f"{config.GRID_MAGIC} {config.GRID_VERSION} n1={n1} n2={n2} "
        f"u1={chart.u1_range[0]!r}:{chart.u1_range[1]!r} "
        f"u2={chart.u2_range[0]!r}:{chart.u2_range[1]!r} "
        f"periodic={int(chart.periodic[0])},{int(chart.periodic[1])}"
    )
    lines = [header]
    for i in range(n1):
        for j in range(n2):
            x, y, z = (float(v) for v in surface.positions[i, j])
            lines.append(f"{i} {j} {x!r} {y!r} {z!r}")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return path


# ============================================
# Catalog
# ============================================

TWO_PI = 2.0 * np.pi


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise InvalidParameterError(f"catalog parameter {name} must be positive, got {value}")
    return value


def _catalog_entry(name: str, params: Dict[str, object]):
    """Return (text, domain, periodic) for a catalog surface.

    Orientation: r_1 x r_2 points to the concave side wherever the surface
    curves, so spheres, cylinders and tori report H > 0.
    """
    if name == "plane":
        return "u1; u2; 0", ((-1.0, 1.0), (-1.0, 1.0)), (False, False)
    if name == "cylinder":
        rho = _positive("radius", params.get("radius", params.get("rho", 1.0)))
        h = _positive("height", params.get("height", 2.0))
        return (f"{rho!r}*sin(u1); {rho!r}*cos(u1); u2",
                ((0.0, TWO_PI), (-h / 2, h / 2)), (True, False))
    if name == "sphere":
        R = _positive("R", params.get("R", 1.0))
        return (f"{R!r}*sin(u1)*cos(u2); -{R!r}*sin(u1)*sin(u2); {R!r}*cos(u1)",
                ((0.0, np.pi), (0.0, TWO_PI)), (False, True))
    if name == "torus":
        R = _positive("R", params.get("R", 3.0))
        r = _positive("r", params.get("r", 1.0))
        if r >= R:
            raise InvalidParameterError(f"torus needs minor radius r < major radius R, got r={r}, R={R}")
        return (f"({R!r} + {r!r}*cos(u1))*cos(u2); ({R!r} + {r!r}*cos(u1))*sin(u2); {r!r}*sin(u1)",
                ((0.0, TWO_PI), (0.0, TWO_PI)), (True, True))
    if name == "helicoid":
        c = _positive("c", params.get("c", 1.0))
        return f"u2*cos(u1); u2*sin(u1); {c!r}*u1", ((0.0, TWO_PI), (-1.0, 1.0)), (False, False)
    if name == "catenoid":
        c = _positive("c", params.get("c", 1.0))
        return (f"{c!r}*cosh(u2)*cos(u1); {c!r}*cosh(u2)*sin(u1); {c!r}*u2",
                ((0.0, TWO_PI), (-1.0, 1.0)), (True, False))
    if name == "saddle":
        a = float(params.get("a", 1.0))
        return f"u1; u2; {a!r}*u1*u2", ((-1.0, 1.0), (-1.0, 1.0)), (False, False)
    if name == "graph":
        f = params.get("f")
        if not isinstance(f, str) or not f.strip():
            raise InvalidParameterError("graph surface needs an expression parameter f in u1, u2")
        return f"u1; u2; {f}", ((-1.0, 1.0), (-1.0, 1.0)), (False, False)
    raise InvalidParameterError(f"unknown catalog surface {name!r}")


CATALOG_NAMES = ("plane", "cylinder", "sphere", "torus", "helicoid", "catenoid", "saddle", "graph")


def catalog(name: str, **params) -> SurfaceExpr:
    """Catalog surface with its documented domain and periodicity."""
    text, domain, periodic = _catalog_entry(name, params)
    expr = parse_surface(text)
    return SurfaceExpr(expr.x, expr.y, expr.z, domain=domain, periodic=periodic, name=name)


if __name__ == "__main__":
    sphere = catalog("sphere", R=2.0)
    print(f"✅ sphere: {print_surface(sphere)}")
    jet = eval_jet(sphere, (np.pi / 2, 0.0), order=2)
    print(f"   r = {jet.position}, r_1 = {jet.first[0]}, r_2 = {jet.first[1]}")
