"""Environmental line broadening used to tell decoherence apart from collapse.

Collapse broadening grows as M^2 and ignores the bath. Hard-sphere collisional
broadening grows as M^(2/3) at constant density (d ~ r ~ M^(1/3)) and falls
as m^(-1/2) with the bath-particle mass.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from typing import Literal, Sequence

import numpy as np

from .constants import CODATA2018 as K
from .errors import ConfigurationError, RegimeError
from .rates import CollapseModel, rates_generic, scale_system_mass
from .systems import TwoLevelSystem

RECOIL_FREE_RATIO = 100.0


@dataclass(frozen=True)
class BathParams:
    pressure: float  # Pa
    temperature: float  # K
    bath_mass: float  # amu
    distance_d: float  # m

    def __post_init__(self):
        if not self.pressure >= 0:
            raise ConfigurationError("pressure must be >= 0")
        if not self.temperature > 0:
            raise ConfigurationError("temperature must be > 0")
        if not self.bath_mass > 0:
            raise ConfigurationError("bath_mass must be > 0")
        if not self.distance_d > 0:
            raise ConfigurationError("distance_d must be > 0")


def reduced_mass(m: float, M: float) -> float:
    return m * M / (M + m)


def collisional_broadening(bath: BathParams, system_mass: float, recoil_free: bool = False) -> float:
    """Hard-sphere rate 4 d^2 p sqrt(pi / (mu_d k_B T)) in s^-1.

    ``mu_d`` is the reduced mass of system and bath particle, or just the bath
    mass when ``recoil_free`` is set (the M >> m limit).
    """
    if not system_mass > 0:
        raise ConfigurationError("system_mass must be > 0")
    mu = bath.bath_mass if recoil_free else reduced_mass(bath.bath_mass, system_mass)
    mu_kg = mu * K.amu
    return 4.0 * bath.distance_d**2 * bath.pressure * math.sqrt(math.pi / (mu_kg * K.k_B * bath.temperature))


def doppler_broadening(omega0: float, system_mass: float, temperature: float) -> float:
    """omega0 sqrt(2 k_B T ln2 / (M c^2)); same unit as ``omega0``."""
    if omega0 < 0 or not system_mass > 0 or temperature < 0:
        raise ConfigurationError("doppler_broadening needs omega0 >= 0, M > 0, T >= 0")
    M = system_mass * K.amu
    return omega0 * math.sqrt(2.0 * K.k_B * temperature * math.log(2.0) / (M * K.c**2))


@dataclass(frozen=True)
class ScanRow:
    mass: float  # amu, the mass being varied
    beta_N: float
    beta_C: float
    slope_beta_N: float  # log-log slope against the previous row; nan on the first
    slope_beta_C: float


def _loglog_slope(x0, y0, x1, y1) -> float:
    if y0 == 0 or y1 == 0:
        return math.nan
    return math.log(y1 / y0) / math.log(x1 / x0)


def discrimination_scan(
    kind: Literal["system-mass", "bath-mass"],
    base_system: TwoLevelSystem,
    base_bath: BathParams,
    model: CollapseModel,
    factors: Sequence[float],
    exact_reduced_mass: bool = False,
) -> list[ScanRow]:
    """Collapse and collisional broadening while one mass is scaled.

    ``system-mass`` scales the system at constant density: collapse geometry
    as in :func:`~collapse_spectra.rates.mass_scaling_scan` and the
    collision distance as factor**(1/3). ``bath-mass`` scales only the bath
    particle mass. Every row must satisfy M >= 100 m.

    By default the collisional rate uses the recoil-free form (mu_d = m) so
    the slopes are exactly 2, 2/3, 0 and -1/2. ``exact_reduced_mass`` keeps
    mu_d = m M/(M + m); the slopes then deviate by about m/(2M).
    """
    if kind not in ("system-mass", "bath-mass"):
        raise ConfigurationError(f"unknown scan kind {kind!r}")
    rows: list[ScanRow] = []
    prev = None
    for i, f in enumerate(factors):
        if not f > 0:
            raise ConfigurationError(f"factor {i} must be > 0, got {f}")
        if kind == "system-mass":
            system = scale_system_mass(base_system, f)
            bath = BathParams(
                base_bath.pressure,
                base_bath.temperature,
                base_bath.bath_mass,
                base_bath.distance_d * f ** (1.0 / 3.0),
            )
            varied = system.mass_M
        else:
            system = base_system
            bath = BathParams(
                base_bath.pressure,
                base_bath.temperature,
                base_bath.bath_mass * f,
                base_bath.distance_d,
            )
            varied = bath.bath_mass
        if system.mass_M < RECOIL_FREE_RATIO * bath.bath_mass:
            raise RegimeError(
                f"row {i} (factor {f}): M = {system.mass_M:g} amu < "
                f"{RECOIL_FREE_RATIO:g} m = {RECOIL_FREE_RATIO * bath.bath_mass:g} amu; not recoil-free"
            )
        beta_N = rates_generic(system, model).beta_N
        beta_C = collisional_broadening(bath, system.mass_M, recoil_free=not exact_reduced_mass)
        if prev is None:
            sN = sC = math.nan
        else:
            sN = _loglog_slope(prev[0], prev[1], varied, beta_N)
            sC = _loglog_slope(prev[0], prev[2], varied, beta_C)
        rows.append(ScanRow(varied, beta_N, beta_C, sN, sC))
        prev = (varied, beta_N, beta_C)
    return rows


def fitted_slopes(rows: Sequence[ScanRow]) -> tuple[float, float]:
    """Least-squares log-log slopes of (beta_N, beta_C) over a scan."""
    if len(rows) < 2:
        raise ConfigurationError("need at least two rows for a slope")
    x = np.log([r.mass for r in rows])
    out = []
    for attr in ("beta_N", "beta_C"):
        y = np.log([getattr(r, attr) for r in rows])
        out.append(float(np.polyfit(x, y, 1)[0]))
    return out[0], out[1]


def hard_sphere_radii() -> list[dict]:
    """Bundled table of gas hard-sphere radii: name, mass_amu, radius_m."""
    text = resources.files("collapse_spectra").joinpath("data/hard_sphere_radii.csv").read_text()
    rows = []
    for row in csv.DictReader(text.splitlines()):
        rows.append({"name": row["name"], "mass_amu": float(row["mass_amu"]), "radius_m": float(row["radius_m"])})
    return rows
