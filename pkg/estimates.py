"""
Closed-form material estimates for corrugated graphene-like sheets.

Units: energies in eV, lengths in nm unless a helper converts them. The
numbers are qualitative and every output dictionary says so.
"""

import math
from dataclasses import dataclass
from typing import Dict

from error_handler import InvalidParameterError

ESTIMATE_LABEL = "qualitative estimate"

ANGSTROM_PER_NM = 10.0
NM_PER_UM = 1000.0

_NM_PER_UNIT = {"nm": 1.0, "angstrom": 1.0 / ANGSTROM_PER_NM, "A": 1.0 / ANGSTROM_PER_NM, "um": NM_PER_UM}


def to_nm(value: float, unit: str) -> float:
    if unit not in _NM_PER_UNIT:
        raise InvalidParameterError(f"unknown length unit {unit!r}; expected one of {sorted(_NM_PER_UNIT)}")
    return float(value) * _NM_PER_UNIT[unit]


def from_nm(value: float, unit: str) -> float:
    if unit not in _NM_PER_UNIT:
        raise InvalidParameterError(f"unknown length unit {unit!r}; expected one of {sorted(_NM_PER_UNIT)}")
    return float(value) / _NM_PER_UNIT[unit]


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise InvalidParameterError(f"{name} must be positive, got {value}")
    return value


@dataclass(frozen=True)
class MaterialConstants:
    """Graphene defaults: k ≈ 1 eV, E2D ≈ 2.12e3 eV/nm², bond length 1.42 Å."""

    k: float = 1.0
    E2D: float = 2.12e3
    b: float = 0.142
    nu: float = 0.165

    def __post_init__(self):
        _positive("bending rigidity k", self.k)
        _positive("tensile rigidity E2D", self.E2D)
        _positive("bond length b", self.b)
        if not 0.0 <= self.nu < 0.5:
            raise InvalidParameterError(f"Poisson ratio must lie in [0, 0.5), got {self.nu}")

    @property
    def thickness(self) -> float:
        return effective_thickness(self.k, self.E2D)


def effective_thickness(k: float, E2D: float) -> float:
    """h_eff = √(12k / E2D); nm for k in eV and E2D in eV/nm²."""
    return math.sqrt(12.0 * _positive("k", k) / _positive("E2D", E2D))


def critical_strain(h_eff: float, l: float, nu: float) -> float:
    """Buckling strain π² / (3(1 − ν²)) · (h_eff / l)²."""
    h_eff = _positive("h_eff", h_eff)
    l = _positive("l", l)
    if not h_eff < l:
        raise InvalidParameterError(f"need h_eff < l, got h_eff={h_eff}, l={l}")
    if not 0.0 <= nu < 1.0:
        raise InvalidParameterError(f"Poisson ratio must lie in [0, 1), got {nu}")
    return math.pi ** 2 / (3.0 * (1.0 - nu * nu)) * (h_eff / l) ** 2


def boundary_ratio(b: float, r: float) -> float:
    """N_b / N_i ≈ 1.5√3 · b / r for a disk of radius r with bond length b (same units)."""
    b = _positive("b", b)
    r = _positive("r", r)
    if not r > b:
        raise InvalidParameterError(f"need r > b, got r={r}, b={b}")
    return 1.5 * math.sqrt(3.0) * b / r


def estimate_report(constants: MaterialConstants, length_nm: float, radius_nm: float) -> Dict[str, object]:
    """All three estimates for one material and geometry."""
    h = constants.thickness
    return {
        "label": ESTIMATE_LABEL,
        "units": {"energy": "eV", "length": "nm"},
        "inputs": {"k": constants.k, "E2D": constants.E2D, "b": constants.b, "nu": constants.nu,
                   "l": length_nm, "r": radius_nm},
        "effective_thickness": h,
        "effective_thickness_below_1A": h < to_nm(1.0, "angstrom"),
        "critical_strain": critical_strain(h, length_nm, constants.nu),
        "boundary_ratio": boundary_ratio(constants.b, radius_nm),
    }


if __name__ == "__main__":
    h = effective_thickness(1.0, 2.12e3)
    print(f"✅ h_eff = {h:.4f} nm ({ESTIMATE_LABEL})")
    ratio = boundary_ratio(to_nm(1.42, "angstrom"), to_nm(0.75, "um"))
    print(f"✅ N_b/N_i = {ratio:.3e}")
