"""
Run configuration: one JSON document per command invocation.

    {
      "surface": {"catalog": "sphere", "params": {"R": 2}}
               | {"expr": "u1; u2; u1*u2", "domain": [[-1, 1], [-1, 1]]}
               | {"grid": "sheet.grid"},
      "chart": {"u1": [lo, hi], "u2": [lo, hi], "resolution": [n1, n2], "periodic": [false, true]},
      "signature": 1,
      "thermal": {"profile": {...}, "r": 0.0, "boundary": "expr in u1, u2", "theta": 1.0},
      "congruence": {"field": "helix" | "x; y; z", "params": {...}, "samples": [[u1, u2], ...],
                     "flat_state": "v1; v2", "normal": "sphere_inward"},
      "energy": {"kind": "willmore"} | "H^2 + K",
      "output_dir": "out",
      "tolerances": {"solver": 1e-8, "flat_state": 1e-6}
    }
"""

import json
import logging
import os
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import config
from error_handler import ConfigError, InvalidParameterError
from fields import Chart
from surface_lang import SampledSurface, SurfaceExpr, catalog, load_grid, parse_surface, sample_surface

logger = logging.getLogger("weylsheet.config")

SURFACE_SOURCES = ("catalog", "expr", "grid")
KNOWN_SECTIONS = ("surface", "chart", "signature", "thermal", "congruence", "energy", "output_dir", "tolerances")
DEFAULT_RESOLUTION = (65, 65)


def _pair(value, name: str) -> Tuple[float, float]:
    try:
        lo, hi = (float(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a [min, max] pair, got {value!r}")
    return lo, hi


@dataclass
class RunConfig:
    surface: Dict[str, Any]
    chart: Optional[Dict[str, Any]] = None
    signature: int = 1
    thermal: Optional[Dict[str, Any]] = None
    congruence: Optional[Dict[str, Any]] = None
    energy: Any = None
    output_dir: str = config.OUTPUT_DIR
    tolerances: Dict[str, float] = field(default_factory=dict)
    # Directory of the config file; relative grid paths resolve against it
    base_dir: str = "."

    def __post_init__(self):
        self.validate()

    @classmethod
    def from_dict(cls, data: Dict[str, Any], base_dir: str = ".") -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = sorted(set(data) - set(KNOWN_SECTIONS))
        if unknown:
            raise ConfigError(f"unknown config section(s): {', '.join(unknown)}")
        if "surface" not in data:
            raise ConfigError("config needs a 'surface' section")
        return cls(
            surface=data["surface"],
            chart=data.get("chart"),
            signature=data.get("signature", 1),
            thermal=data.get("thermal"),
            congruence=data.get("congruence"),
            energy=data.get("energy"),
            output_dir=data.get("output_dir", config.OUTPUT_DIR),
            tolerances=dict(data.get("tolerances", {})),
            base_dir=base_dir,
        )

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        if not os.path.exists(path):
            raise FileNotFoundError(f"config file not found: {path}")
        try:
            with open(path, "r") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e})")
        return cls.from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))

    def validate(self):
        if not isinstance(self.surface, dict):
            raise ConfigError("'surface' must be an object")
        sources = [key for key in SURFACE_SOURCES if key in self.surface]
        if len(sources) != 1:
            raise ConfigError(f"surface needs exactly one of {SURFACE_SOURCES}, got {sources or 'none'}")
        if "grid" in self.surface and not os.path.exists(self.grid_path):
            raise FileNotFoundError(f"grid file not found: {self.grid_path}")
        if self.signature not in (1, -1):
            raise ConfigError(f"signature must be 1 or -1, got {self.signature!r}")
        for name, value in self.tolerances.items():
            if not isinstance(value, (int, float)) or not value > 0:
                raise ConfigError(f"tolerance {name!r} must be a positive number, got {value!r}")
        if self.thermal is not None and not isinstance(self.thermal, dict):
            raise ConfigError("'thermal' must be an object")
        if self.congruence is not None and not isinstance(self.congruence, dict):
            raise ConfigError("'congruence' must be an object")

    @property
    def grid_path(self) -> str:
        return os.path.join(self.base_dir, self.surface["grid"])

    def tolerance(self, name: str, default: float) -> float:
        return float(self.tolerances.get(name, default))

    def with_overrides(self, output_dir: Optional[str] = None, tolerance: Optional[float] = None) -> "RunConfig":
        """Command-line flags win over the file."""
        tolerances = dict(self.tolerances)
        if tolerance is not None:
            tolerances["solver"] = tolerance
        return replace(self, output_dir=output_dir or self.output_dir, tolerances=tolerances)

    # Surface construction
    def surface_expr(self) -> Optional[SurfaceExpr]:
        spec = self.surface
        if "catalog" in spec:
            return catalog(spec["catalog"], **spec.get("params", {}))
        if "expr" in spec:
            expr = parse_surface(spec["expr"])
            domain = spec.get("domain")
            if domain is not None:
                domain = (_pair(domain[0], "surface domain u1"), _pair(domain[1], "surface domain u2"))
            periodic = tuple(bool(p) for p in spec.get("periodic", (False, False)))
            return SurfaceExpr(expr.x, expr.y, expr.z, domain=domain, periodic=periodic)
        return None

    def build_chart(self, expr: Optional[SurfaceExpr]) -> Chart:
        spec = self.chart or {}
        resolution = tuple(spec.get("resolution", DEFAULT_RESOLUTION))
        if "u1" in spec and "u2" in spec:
            periodic = tuple(spec.get("periodic", expr.periodic if expr else (False, False)))
            return Chart(_pair(spec["u1"], "chart u1"), _pair(spec["u2"], "chart u2"), resolution, periodic)
        if expr is None or expr.domain is None:
            raise ConfigError("chart ranges are required for an expression surface without a domain")
        return expr.default_chart(resolution)

    def build_surface(self) -> SampledSurface:
        if "grid" in self.surface:
            return load_grid(self.grid_path)
        expr = self.surface_expr()
        try:
            chart = self.build_chart(expr)
        except InvalidParameterError as e:
            raise ConfigError(f"invalid chart: {e}")
        surface = sample_surface(expr, chart)
        logger.info(f"surface {expr.name or self.surface.get('expr')} on a {chart.resolution} chart")
        return surface

    def samples(self) -> Optional[List[Tuple[float, float]]]:
        if not self.congruence or "samples" not in self.congruence:
            return None
        return [_pair(p, "congruence sample point") for p in self.congruence["samples"]]

    def require(self, section: str) -> Any:
        value = getattr(self, section)
        if value is None:
            raise ConfigError(f"this command needs a '{section}' section in the config")
        return value
