"""Physical constants (CODATA 2018) and the small fixed set of unit conversions.

Everything inside the package is SI: rates in s^-1, angular frequencies in
rad/s. Masses and mass moments of two-level systems are kept in amu so the
collapse-rate formulas divide by the 1 amu reference mass directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from types import MappingProxyType

from .errors import ConfigurationError, UnitError


@dataclass(frozen=True)
class PhysConstants:
    hbar: float = 1.054571817e-34  # J s
    c: float = 299792458.0  # m/s
    eps0: float = 8.8541878128e-12  # F/m
    k_B: float = 1.380649e-23  # J/K
    G: float = 6.67430e-11  # m^3 kg^-1 s^-2
    amu: float = 1.66053906660e-27  # kg
    m_e_amu: float = 5.48579909065e-4
    a0: float = 5.29177210903e-11  # m
    e_charge: float = 1.602176634e-19  # C
    debye: float = 1e-21 / 299792458.0  # C m

    @property
    def m_e(self) -> float:
        """Electron mass in kg."""
        return self.m_e_amu * self.amu


CODATA2018 = PhysConstants()

_UNITS = MappingProxyType(
    {
        "hbar": "J*s",
        "c": "m/s",
        "eps0": "F/m",
        "k_B": "J/K",
        "G": "m^3/(kg*s^2)",
        "amu": "kg",
        "m_e_amu": "1",
        "a0": "m",
        "e_charge": "C",
        "debye": "C*m",
    }
)


def constant(name: str) -> tuple[float, str]:
    """Return ``(value, unit)`` for a named constant."""
    if name not in _UNITS:
        raise ConfigurationError(f"unknown constant {name!r}; known: {sorted(_UNITS)}")
    return getattr(CODATA2018, name), _UNITS[name]


# unit -> (dimension, factor to the dimension's base unit)
_CONVERSIONS = MappingProxyType(
    {
        "kg": ("mass", 1.0),
        "amu": ("mass", CODATA2018.amu),
        "C*m": ("dipole", 1.0),
        "Debye": ("dipole", CODATA2018.debye),
        "m": ("length", 1.0),
        "angstrom": ("length", 1e-10),
        "rad/s": ("frequency", 1.0),
        "Hz": ("frequency", 2.0 * math.pi),
    }
)
_ALIASES = {"Å": "angstrom", "A": "angstrom", "D": "Debye", "C·m": "C*m", "Cm": "C*m"}


def _lookup(unit: str) -> tuple[str, float]:
    unit = _ALIASES.get(unit, unit)
    try:
        return _CONVERSIONS[unit]
    except KeyError:
        raise UnitError(f"unsupported unit {unit!r}") from None


def convert(value: float, from_unit: str, to_unit: str) -> float:
    """Multiplicative conversion between two compatible units.

    ``Hz`` is a cycle frequency: ``convert(1, "Hz", "rad/s") == 2*pi``. The
    2*pi is applied only through this explicit call; nothing else in the
    package converts between the two.
    """
    dim_a, fa = _lookup(from_unit)
    dim_b, fb = _lookup(to_unit)
    if dim_a != dim_b:
        raise UnitError(f"cannot convert {from_unit!r} ({dim_a}) to {to_unit!r} ({dim_b})")
    if fa == fb:
        return value
    return value * fa / fb
