"""Two-level system descriptors and the QED spontaneous-emission baseline.

A :class:`TwoLevelSystem` carries the mass-weighted geometry that enters
the collapse rates: total mass ``M``, the transition moment
``D12 = <2| sum_j m_j q_j |1>`` and the mass moments
``I_a = <a| sum_j m_j q_j^2 |a>``. Masses are in amu, lengths in metres.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional

from .constants import CODATA2018 as K
from .errors import ConfigurationError

Kind = Literal["generic", "hydrogen-like", "harmonic", "double-well"]
DipoleConvention = Literal["paper", "textbook"]

PROTON_MASS_AMU = 1.007276466621
_ANGSTROM = 1e-10


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigurationError(message)


@dataclass(frozen=True)
class TwoLevelSystem:
    omega0: float  # rad/s
    mass_M: float  # amu
    D12: float  # amu m
    I1: float  # amu m^2
    I2: float  # amu m^2
    d12: Optional[float] = None  # C m
    kind: Kind = "generic"

    def __post_init__(self):
        for name in ("omega0", "mass_M", "D12", "I1", "I2"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigurationError(f"{name} must be finite")
        _require(self.omega0 > 0, "omega0 must be > 0")
        _require(self.mass_M > 0, "mass_M must be > 0")
        _require(self.D12 >= 0, "D12 must be >= 0")
        _require(self.I1 >= 0 and self.I2 >= 0, "I1, I2 must be >= 0")
        if self.d12 is not None:
            _require(self.d12 >= 0, "d12 must be >= 0")
        if self.kind == "double-well":
            scale = max(self.I1, _ANGSTROM**2)
            _require(abs(self.I2 - self.I1) <= 1e-12 * scale, "double-well moments must be degenerate")

    @property
    def delta_I(self) -> float:
        return self.I2 - self.I1


@dataclass(frozen=True)
class HarmonicSpec:
    mu: float  # amu
    omega0: float  # rad/s

    def __post_init__(self):
        _require(self.mu > 0, "mu must be > 0")
        _require(self.omega0 > 0, "omega0 must be > 0")


@dataclass(frozen=True)
class DoubleWellSpec:
    mu: float  # amu
    q0: float  # m
    omega0: float  # rad/s

    def __post_init__(self):
        _require(self.mu > 0, "mu must be > 0")
        _require(self.q0 > 0, "q0 must be > 0")
        _require(self.omega0 > 0, "omega0 must be > 0")


@dataclass(frozen=True)
class HydrogenLikeSpec:
    Z: int = 1
    nuclear_mass: float = PROTON_MASS_AMU  # amu

    def __post_init__(self):
        _require(isinstance(self.Z, int) and not isinstance(self.Z, bool), "Z must be an integer")
        _require(self.Z >= 1, "Z must be >= 1")
        _require(self.nuclear_mass >= 1, "nuclear_mass must be >= 1 amu")


def zero_point_amplitude(mu: float, omega0: float) -> float:
    """sqrt(hbar / (mu omega0)) in metres, with ``mu`` in amu."""
    return math.sqrt(K.hbar / (mu * K.amu * omega0))


def harmonic_system(
    spec: HarmonicSpec, convention: DipoleConvention = "paper", d12: Optional[float] = None
) -> TwoLevelSystem:
    """Ground and first excited oscillator states.

    ``convention="paper"`` takes ``D12 = mu x0``, which is what reproduces the
    tabulated harmonic-oscillator rates. ``"textbook"`` uses the position
    matrix element ``<0|q|1> = x0/sqrt(2)``.
    """
    if convention not in ("paper", "textbook"):
        raise ConfigurationError(f"unknown dipole convention {convention!r}")
    x0 = zero_point_amplitude(spec.mu, spec.omega0)
    D12 = spec.mu * x0 if convention == "paper" else spec.mu * x0 / math.sqrt(2.0)
    # <0|q^2|0> = x0^2/2, <1|q^2|1> = 3 x0^2/2
    I1 = spec.mu * x0**2 / 2.0
    I2 = I1 + spec.mu * x0**2
    return TwoLevelSystem(spec.omega0, spec.mu, D12, I1, I2, d12=d12, kind="harmonic")


def doublewell_system(spec: DoubleWellSpec, d12: Optional[float] = None) -> TwoLevelSystem:
    """Symmetric and antisymmetric combinations of states localised at +-q0/2."""
    D12 = spec.mu * spec.q0 / 2.0
    I = spec.mu * (spec.q0 / 2.0) ** 2
    return TwoLevelSystem(spec.omega0, spec.mu, D12, I, I, d12=d12, kind="double-well")


# Hydrogenic matrix elements in units of a0/Z.
RADIAL_1S_2P = 128.0 * math.sqrt(6.0) / 243.0  # int R10 R21 r^3 dr
Z_1S_2P0 = RADIAL_1S_2P / math.sqrt(3.0)  # <1S|z|2P0>
R2_1S = 3.0  # <1S|r^2|1S>
R2_2P = 30.0  # <2P|r^2|2P>


def hydrogenlike_system(spec: HydrogenLikeSpec, matrix_element: str = "z") -> TwoLevelSystem:
    """The 2P -> 1S pair of a one-electron ion, infinite nuclear mass.

    ``matrix_element="z"`` uses the single-component dipole element
    ``<1S|z|2P0>``, the one whose ``beta_qed`` is half the Einstein A
    coefficient. ``"radial"`` uses the full radial integral (larger by
    sqrt(3)). The electron is the only particle that moves, so
    ``D12 = (m_e/e) d12`` and the mass moments are electronic.
    """
    if matrix_element == "z":
        r12 = Z_1S_2P0
    elif matrix_element == "radial":
        r12 = RADIAL_1S_2P
    else:
        raise ConfigurationError(f"unknown matrix_element {matrix_element!r}")
    a = K.a0 / spec.Z
    me = K.m_e_amu
    omega0 = spec.Z**2 * 0.375 * K.e_charge**2 / (4.0 * math.pi * K.eps0 * K.hbar * K.a0)
    return TwoLevelSystem(
        omega0=omega0,
        mass_M=spec.nuclear_mass + me,
        D12=me * r12 * a,
        I1=me * R2_1S * a**2,
        I2=me * R2_2P * a**2,
        d12=K.e_charge * r12 * a,
        kind="hydrogen-like",
    )


def beta_qed(omega0: float, d12: float) -> float:
    """Coherence decay rate omega0^3 |d12|^2 / (6 pi eps0 hbar c^3), in s^-1.

    The excited population decays at twice this rate.
    """
    if omega0 <= 0:
        raise ConfigurationError("omega0 must be > 0")
    if d12 < 0:
        raise ConfigurationError("d12 must be >= 0")
    return omega0**3 * d12**2 / (6.0 * math.pi * K.eps0 * K.hbar * K.c**3)
