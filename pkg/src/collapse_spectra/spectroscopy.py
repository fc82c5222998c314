"""Emission spectra: Wiener-Khinchin transform, Lorentzian fits, line predictions."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from .constants import CODATA2018 as K
from .errors import (
    ConfigurationError,
    DegenerateInputError,
    IncompleteSystemError,
    NoPeakError,
    WindowError,
)
from .rates import CollapseModel, rates_generic
from .systems import TwoLevelSystem, beta_qed

PAD_FACTOR = 4
DECAY_TOLERANCE = 1e-3
# Window choices under which a 1% width tolerance holds.
MAX_DTAU_TIMES_OMEGA = 0.1
MIN_BETA_TIMES_TAU_MAX = 7.0

FIT_MAX_ITER = 100
FIT_STEP_TOL = 1e-10


class ConvergenceWarning(UserWarning):
    """Gauss-Newton refinement did not converge; stage-1 values returned."""


@dataclass(frozen=True)
class Spectrum:
    omega: np.ndarray
    density: np.ndarray
    normalization: Literal["unit-area", "raw"] = "unit-area"

    @property
    def step(self) -> float:
        return float(self.omega[1] - self.omega[0])

    def area(self) -> float:
        return float(np.trapezoid(self.density, self.omega))


@dataclass(frozen=True)
class LorentzianFit:
    beta_fit: float
    omega_center: float
    peak_height: float
    rms_residual: float
    converged: bool = True
    iterations: int = 0


@dataclass(frozen=True)
class LinePrediction:
    omega_center: float  # rad/s
    fwhm: float  # s^-1
    beta_qed: float
    beta_N: float
    gamma_N: float
    shift: float  # Omega_QED - omega_center, evaluated without cancellation


def lorentzian(omega, beta: float, omega_center: float):
    """(1/pi) beta / (beta^2 + (omega - omega_center)^2)."""
    if not beta > 0:
        raise ConfigurationError("beta must be > 0")
    d = np.asarray(omega, dtype=float) - omega_center
    return beta / (beta * beta + d * d) / math.pi


def spectrum_from_autocorrelation(
    C, dtau: float, pad_factor: int = PAD_FACTOR, normalize: bool = True
) -> Spectrum:
    """One-sided transform S(w) = (1/pi) Re int_0^inf exp(-i w tau) C(tau)/C(0) dtau.

    Trapezoid rule on the sampled grid, zero-padded by ``pad_factor`` and
    evaluated by FFT on the alias-free band [-pi/dtau, pi/dtau). With
    ``normalize=False`` the transform of C itself is returned.
    """
    C = np.asarray(C, dtype=complex)
    if C.ndim != 1 or C.size < 3:
        raise ConfigurationError("autocorrelation must be a 1-D series of >= 3 samples")
    if not dtau > 0:
        raise ConfigurationError("dtau must be > 0")
    if pad_factor < PAD_FACTOR:
        raise ConfigurationError(f"pad_factor must be >= {PAD_FACTOR}")
    c0 = C[0]
    if c0 == 0:
        raise DegenerateInputError("C(0) = 0; autocorrelation carries no signal")
    if abs(C[-1]) > DECAY_TOLERANCE * abs(c0):
        raise WindowError(
            f"|C(tau_max)|/|C(0)| = {abs(C[-1]) / abs(c0):.3g} > {DECAY_TOLERANCE:g}; "
            "extend tau_max"
        )
    c = C / c0 if normalize else C.copy()
    c[0] *= 0.5
    c[-1] *= 0.5
    n = pad_factor * C.size
    spec = np.fft.fftshift(np.fft.fft(c, n=n)) * dtau
    omega = np.fft.fftshift(np.fft.fftfreq(n, d=dtau)) * 2.0 * math.pi
    density = np.maximum(spec.real / math.pi, 0.0)
    return Spectrum(omega, density, "unit-area" if normalize else "raw")


def _stage1(omega, y):
    i = int(np.argmax(y))
    if i == 0 or i == y.size - 1 or not y[i] > max(y[i - 1], y[i + 1]) * (1 - 1e-15):
        raise NoPeakError("spectrum has no interior maximum")
    h = omega[1] - omega[0]
    ym, y0, yp = y[i - 1], y[i], y[i + 1]
    denom = ym - 2 * y0 + yp
    off = 0.5 * (ym - yp) / denom if denom != 0 else 0.0
    center = omega[i] + off * h
    peak = y0 - 0.25 * (ym - yp) * off
    half = 0.5 * peak

    def crossing(direction):
        j = i
        while 0 <= j + direction < y.size and y[j + direction] > half:
            j += direction
        k = j + direction
        if not 0 <= k < y.size:
            return None
        # linear interpolation between j (above) and k (below)
        return omega[j] + (omega[k] - omega[j]) * (y[j] - half) / (y[j] - y[k])

    left, right = crossing(-1), crossing(+1)
    if left is None or right is None:
        raise NoPeakError("half-maximum crossings not bracketed by the grid")
    beta = 0.5 * (right - left)
    return beta, center, peak


def _model(omega, beta, center, peak):
    d = omega - center
    return peak * beta**2 / (beta**2 + d**2)


def fit_lorentzian(spec: Spectrum, window: Optional[float] = 30.0) -> LorentzianFit:
    """Fit peak * beta^2/(beta^2 + (w - center)^2) to a sampled line.

    Stage 1 locates the maximum by parabolic interpolation and the half-width
    from linearly interpolated half-maximum crossings. Stage 2 refines
    (beta, center, peak) by Gauss-Newton on the samples within ``window``
    stage-1 half-widths of the center (all samples if ``window`` is None).
    """
    omega = np.asarray(spec.omega, dtype=float)
    y = np.asarray(spec.density, dtype=float)
    beta0, center0, peak0 = _stage1(omega, y)
    if window is not None:
        sel = np.abs(omega - center0) <= window * beta0
        omega, y = omega[sel], y[sel]
    theta = np.array([beta0, center0, peak0])
    converged = False
    it = 0
    for it in range(1, FIT_MAX_ITER + 1):
        b, c, a = theta
        d = omega - c
        q = b * b + d * d
        f = a * b * b / q
        r = y - f
        J = np.empty((omega.size, 3))
        J[:, 0] = 2 * a * b * d * d / q**2
        J[:, 1] = 2 * a * b * b * d / q**2
        J[:, 2] = b * b / q
        delta, *_ = np.linalg.lstsq(J, r, rcond=None)
        if not np.all(np.isfinite(delta)):
            break
        theta = theta + delta
        if theta[0] <= 0:
            break
        scale = np.array([theta[0], theta[0], abs(theta[2])])
        if np.all(np.abs(delta) <= FIT_STEP_TOL * scale):
            converged = True
            break
    if not converged:
        warnings.warn("Gauss-Newton did not converge; returning stage-1 estimate", ConvergenceWarning, stacklevel=2)
        theta = np.array([beta0, center0, peak0])
    b, c, a = theta
    rms = float(np.sqrt(np.mean((y - _model(omega, b, c, a)) ** 2)))
    return LorentzianFit(float(abs(b)), float(c), float(a), rms, converged, it)


def predict_line(sys: TwoLevelSystem, model: CollapseModel, omega_qed: float) -> LinePrediction:
    """Observable line center and FWHM for a physical system."""
    if not omega_qed > 0:
        raise ConfigurationError("omega_qed must be > 0")
    if sys.d12 is None:
        raise IncompleteSystemError("system has no electric dipole d12; beta_QED undefined")
    bq = beta_qed(sys.omega0, sys.d12)
    r = rates_generic(sys, model)
    lx = r.lambda_x
    if not omega_qed > lx:
        raise ConfigurationError("omega_qed must exceed lambda_x")
    root = math.sqrt(omega_qed**2 - lx**2)
    # omega_qed - root, written so it survives lx << omega_qed
    shift = lx * lx / (omega_qed + root)
    return LinePrediction(
        omega_center=root,
        fwhm=2.0 * (bq + r.beta_N),
        beta_qed=bq,
        beta_N=r.beta_N,
        gamma_N=r.gamma_N,
        shift=shift,
    )


def far_field_intensity(r, theta, t, beta_qed, lambda_x, sz0, omega0, d12):
    """Mean far-field intensity (W/m^2) at distance ``r`` and polar angle ``theta``.

    Zero before the light-travel time r/c. For lambda_x > 0 the bracket keeps
    a floor lambda_x/(beta + lambda_x): collapse noise sustains emission.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ConfigurationError("r must be > 0")
    t = np.asarray(t, dtype=float)
    retarded = t - r / K.c
    amp = (omega0**2 * abs(d12) / (8.0 * math.pi * K.eps0 * K.c**2 * r)) ** 2
    angular = 1.0 - 0.5 * np.sin(theta) ** 2
    g = beta_qed + lambda_x
    with np.errstate(over="ignore"):
        bracket = (beta_qed / g + sz0) * np.exp(-2.0 * g * np.maximum(retarded, 0.0)) + lambda_x / g
    out = np.where(retarded > 0, amp * angular * bracket, 0.0)
    return out if out.ndim else float(out)
