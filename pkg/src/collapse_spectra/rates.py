"""Collapse rates, line broadening and shift in the small-scale limit.

For a system much smaller than the noise correlation length ``r_C``::

    lambda_x = Lambda D12^2 / (2 r_C^2 m0^2)
    lambda_z = Lambda M (I2 - I1) / (8 r_C^2 m0^2)
    beta_N   = lambda_x + 2 lambda_z
    gamma_N  = lambda_x^2 / (2 omega0)

CSL and Diosi-Penrose share this structure and differ only in ``Lambda``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Iterable, Literal

from .constants import CODATA2018 as K
from .errors import ConfigurationError
from .systems import (
    DoubleWellSpec,
    HarmonicSpec,
    TwoLevelSystem,
    zero_point_amplitude,
)

LAMBDA_CSL = 1.12e-9  # s^-1
LAMBDA_DP = 7.39e-25  # s^-1
R_C = 1e-7  # m
M0_AMU = 1.0

SMALL_SCALE_FRACTION = 0.1


class SmallScaleWarning(UserWarning):
    """System extent is not small compared with r_C."""


class NegativeMomentWarning(UserWarning):
    """Excited state is more compact than the ground state (I2 < I1)."""


def lambda_dp_from_gravity(r_C: float = R_C, m0_amu: float = M0_AMU) -> float:
    """G m0^2 / (3 sqrt(2) pi^(3/2) hbar r_C)."""
    m0 = m0_amu * K.amu
    return K.G * m0**2 / (3.0 * math.sqrt(2.0) * math.pi**1.5 * K.hbar * r_C)


@dataclass(frozen=True)
class CollapseModel:
    variant: Literal["CSL", "DP"] = "CSL"
    Lambda: float = LAMBDA_CSL  # s^-1
    r_C: float = R_C  # m
    m0: float = M0_AMU  # amu

    def __post_init__(self):
        if self.variant not in ("CSL", "DP"):
            raise ConfigurationError(f"unknown collapse model {self.variant!r}")
        # Lambda = 0 is allowed: it switches the collapse contribution off.
        if not (self.Lambda >= 0 and math.isfinite(self.Lambda)):
            raise ConfigurationError("Lambda must be >= 0")
        if not self.r_C > 0:
            raise ConfigurationError("r_C must be > 0")
        if not self.m0 > 0:
            raise ConfigurationError("m0 must be > 0")

    @classmethod
    def csl(cls, **overrides) -> "CollapseModel":
        return cls(**{"variant": "CSL", "Lambda": LAMBDA_CSL, **overrides})

    @classmethod
    def dp(cls, **overrides) -> "CollapseModel":
        return cls(**{"variant": "DP", "Lambda": LAMBDA_DP, **overrides})


@dataclass(frozen=True)
class CollapseRates:
    lambda_x: float
    lambda_z: float
    beta_N: float
    gamma_N: float

    @classmethod
    def from_lambdas(cls, lambda_x: float, lambda_z: float, omega0: float) -> "CollapseRates":
        return cls(lambda_x, lambda_z, lambda_x + 2.0 * lambda_z, lambda_x**2 / (2.0 * omega0))


def _check_small_scale(sys: TwoLevelSystem, r_C: float) -> None:
    limit = SMALL_SCALE_FRACTION * r_C
    lengths = {
        "D12/M": sys.D12 / sys.mass_M,
        "sqrt(I1/M)": math.sqrt(sys.I1 / sys.mass_M),
        "sqrt(I2/M)": math.sqrt(sys.I2 / sys.mass_M),
    }
    for name, length in lengths.items():
        if length > limit:
            warnings.warn(
                f"{name} = {length:.3g} m exceeds {SMALL_SCALE_FRACTION} r_C; "
                "small-scale limit questionable",
                SmallScaleWarning,
                stacklevel=3,
            )


def rates_generic(sys: TwoLevelSystem, model: CollapseModel) -> CollapseRates:
    """Collapse rates from the mass-weighted moments of ``sys``."""
    _check_small_scale(sys, model.r_C)
    denom = model.r_C**2 * model.m0**2
    lambda_x = model.Lambda * sys.D12**2 / (2.0 * denom)
    dI = sys.I2 - sys.I1
    noise = 1e-12 * max(sys.I1, sys.I2)
    if dI < -noise:
        warnings.warn(
            f"I2 < I1 (difference {dI:.3g} amu m^2); using |I2 - I1|",
            NegativeMomentWarning,
            stacklevel=2,
        )
        dI = -dI
    elif dI < 0:
        dI = 0.0
    lambda_z = model.Lambda * sys.mass_M * dI / (8.0 * denom)
    return CollapseRates.from_lambdas(lambda_x, lambda_z, sys.omega0)


def rates_harmonic(spec: HarmonicSpec, model: CollapseModel) -> CollapseRates:
    """lambda_x = 4 lambda_z = (Lambda/2) (mu x0 / (m0 r_C))^2."""
    x0 = zero_point_amplitude(spec.mu, spec.omega0)
    u2 = (spec.mu * x0 / (model.m0 * model.r_C)) ** 2
    return CollapseRates.from_lambdas(model.Lambda / 2.0 * u2, model.Lambda / 8.0 * u2, spec.omega0)


def rates_doublewell(spec: DoubleWellSpec, model: CollapseModel) -> CollapseRates:
    """lambda_x = (Lambda/8) (mu q0 / (m0 r_C))^2, lambda_z = 0."""
    u2 = (spec.mu * spec.q0 / (model.m0 * model.r_C)) ** 2
    return CollapseRates.from_lambdas(model.Lambda / 8.0 * u2, 0.0, spec.omega0)


def scale_system_mass(sys: TwoLevelSystem, factor: float) -> TwoLevelSystem:
    """Multiply every mass by ``factor`` keeping the spatial shape fixed."""
    if not factor > 0:
        raise ConfigurationError(f"scale factor must be > 0, got {factor}")
    return replace(
        sys,
        mass_M=sys.mass_M * factor,
        D12=sys.D12 * factor,
        I1=sys.I1 * factor,
        I2=sys.I2 * factor,
    )


def mass_scaling_scan(
    base: TwoLevelSystem, factors: Iterable[float], model: CollapseModel
) -> list[tuple[float, float]]:
    """Rows of ``(M, beta_N)`` for the base system with all masses scaled.

    beta_N grows exactly as factor**2 under this scaling.
    """
    rows = []
    for f in factors:
        scaled = scale_system_mass(base, f)
        rows.append((scaled.mass_M, rates_generic(scaled, model).beta_N))
    return rows
