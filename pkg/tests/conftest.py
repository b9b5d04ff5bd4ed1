import json
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from fields import Chart  # noqa: E402
from surface_lang import catalog, sample_surface  # noqa: E402

TWO_PI = 2.0 * np.pi


def sphere_surface(R=1.0, n=33, margin=0.2):
    """Sphere on a chart that stays clear of the poles."""
    return sample_surface(catalog("sphere", R=R), Chart((margin, np.pi - margin), (0.0, TWO_PI), (n, n), (False, True)))


@pytest.fixture
def sphere2():
    return sphere_surface(R=2.0)


@pytest.fixture
def unit_sphere():
    return sphere_surface(R=1.0)


@pytest.fixture
def torus():
    return sample_surface(catalog("torus", R=3.0, r=1.0), Chart((0.0, TWO_PI), (0.0, TWO_PI), (33, 33), (True, True)))


@pytest.fixture
def cylinder():
    return sample_surface(catalog("cylinder", radius=1.0), Chart((0.0, TWO_PI), (-1.0, 1.0), (33, 17), (True, False)))


@pytest.fixture
def plane():
    return sample_surface(catalog("plane"), Chart((-1.0, 1.0), (-1.0, 1.0), (9, 9)))


@pytest.fixture
def write_config(tmp_path):
    """Write a run config into tmp_path and return its path."""
    def write(data, name="run.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return str(path)
    return write
