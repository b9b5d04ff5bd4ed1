"""
Report Writer - Deterministic CSV, JSON and OBJ output for weylsheet runs
Identical inputs give byte-identical files: fixed float formatting, sorted keys,
no timestamps
"""

import json
import logging
import math
import os
from typing import Any, Dict, Optional

import numpy as np

import config
from fields import Chart
from surface_lang import SampledSurface

logger = logging.getLogger("weylsheet.reports")


def _format(value: float) -> str:
    return config.CSV_FLOAT_FORMAT % float(value)


def _plain(data: Any) -> Any:
    """Convert numpy values to JSON-ready Python values; NaN and inf become None."""
    if isinstance(data, dict):
        return {str(k): _plain(v) for k, v in data.items()}
    if isinstance(data, (list, tuple)):
        return [_plain(v) for v in data]
    if isinstance(data, np.ndarray):
        return _plain(data.tolist())
    if isinstance(data, (bool, np.bool_)):
        return bool(data)
    if isinstance(data, (int, np.integer)):
        return int(data)
    if isinstance(data, (float, np.floating)):
        value = float(data)
        return value if math.isfinite(value) else None
    return data


def write_scalar_csv(path: str, chart: Chart, values: np.ndarray, header: str = "value") -> str:
    """
    Write a scalar field as ``u1,u2,<header>`` rows, row-major.

    Args:
        path: Output file path.
        chart: Chart the values live on.
        values: Array of chart shape.
        header: Name of the value column.

    Returns:
        The path written.
    """
    values = np.asarray(values, dtype=float)
    return write_vector_csv(path, chart, values[..., None], (header,))


def write_vector_csv(path: str, chart: Chart, values: np.ndarray, headers=("v1", "v2")) -> str:
    """Write ``u1,u2,<headers...>`` rows; the last axis of ``values`` holds the components."""
    values = np.asarray(values, dtype=float)
    u1, u2 = chart.mesh()
    with open(path, "w", newline="\n") as f:
        f.write(",".join(("u1", "u2") + tuple(headers)) + "\n")
        for i in range(chart.resolution[0]):
            for j in range(chart.resolution[1]):
                row = [u1[i, j], u2[i, j]] + list(values[i, j])
                f.write(",".join(_format(x) for x in row) + "\n")
    return path


def write_json(path: str, data: Dict[str, Any]) -> str:
    """Save JSON with sorted keys and indent 2; non-finite floats are written as null."""
    with open(path, "w", newline="\n") as f:
        json.dump(_plain(data), f, indent=2, sort_keys=True, allow_nan=False)
        f.write("\n")
    return path


def write_obj(path: str, surface: SampledSurface) -> str:
    """One ``v`` per grid node (row-major), two triangles per grid quad, 1-based faces."""
    n1, n2 = surface.chart.resolution
    with open(path, "w", newline="\n") as f:
        for p in surface.positions.reshape(-1, 3):
            f.write("v " + " ".join(_format(x) for x in p) + "\n")
        for i in range(n1 - 1):
            for j in range(n2 - 1):
                a = i * n2 + j + 1
                b, c, d = a + 1, a + n2, a + n2 + 1
                f.write(f"f {a} {b} {d}\n")
                f.write(f"f {a} {d} {c}\n")
    return path


def summarize(values, mask: Optional[np.ndarray] = None) -> Dict[str, Optional[float]]:
    """min / max / mean over finite entries not masked out."""
    data = np.asarray(values, dtype=float)
    keep = np.isfinite(data)
    if mask is not None:
        keep &= ~np.asarray(mask, dtype=bool)
    picked = data[keep]
    if picked.size == 0:
        return {"min": None, "max": None, "mean": None, "count": 0}
    return {"min": float(picked.min()), "max": float(picked.max()), "mean": float(picked.mean()),
            "count": int(picked.size)}


class ReportWriter:
    """
    Writes the result files of one command into an output directory.
    """

    def __init__(self, output_directory: str = config.OUTPUT_DIR):
        """
        Initialize the writer.

        Args:
            output_directory: Directory for result files (created if needed).
        """
        self.output_directory = output_directory
        os.makedirs(output_directory, exist_ok=True)
        self.written = []

    def path(self, name: str) -> str:
        return os.path.join(self.output_directory, name)

    def scalar_csv(self, name: str, chart: Chart, values: np.ndarray, header: str = "value") -> str:
        return self._track(write_scalar_csv(self.path(name), chart, values, header))

    def vector_csv(self, name: str, chart: Chart, values: np.ndarray, headers) -> str:
        return self._track(write_vector_csv(self.path(name), chart, values, headers))

    def json(self, name: str, data: Dict[str, Any]) -> str:
        return self._track(write_json(self.path(name), data))

    def obj(self, name: str, surface: SampledSurface) -> str:
        return self._track(write_obj(self.path(name), surface))

    def _track(self, path: str) -> str:
        self.written.append(path)
        logger.info(f"wrote {path}")
        return path


if __name__ == "__main__":
    import tempfile

    from surface_lang import catalog, sample_surface

    print("=" * 70)
    print("REPORT WRITER TEST")
    print("=" * 70)
    with tempfile.TemporaryDirectory() as tmp:
        writer = ReportWriter(tmp)
        plane = sample_surface(catalog("plane"), Chart((-1.0, 1.0), (-1.0, 1.0), (3, 3)))
        path = writer.obj("plane.obj", plane)
        with open(path) as f:
            lines = f.read().splitlines()
        print(f"✅ {sum(l.startswith('v ') for l in lines)} vertices, {sum(l.startswith('f ') for l in lines)} faces")
