"""Stochastic Bloch equations driven by collapse noise.

The state is the Bloch vector (sx, sy, sz) of a two-level emitter. In
Stratonovich form, with independent Wiener increments dWx and dWz::

    dsx = (-Omega sy - beta sx) dt                 + 2 sqrt(lz) sy dWz
    dsy = ( Omega sx - beta sy) dt + 2 sqrt(lx) sz dWx - 2 sqrt(lz) sx dWz
    dsz = -2 beta (sz + 1) dt      - 2 sqrt(lx) sy dWx

Everything here is dimensionless: ``beta_qed`` is O(1) and the collapse rates
are inflated far above their physical size so the statistics are resolvable.
The closed-form evaluators in this module are the oracles for the sampled
ensembles.

Random numbers: trajectory ``i`` draws from a Philox (counter-based) stream
keyed by ``SeedSequence(seed, spawn_key=(i,))``; its k-th pair of normals
drives step k. Trajectories are processed in fixed chunks of
:data:`CHUNK_SIZE` and the chunk statistics are merged in chunk order, so
output bits do not depend on the number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Literal, Optional

import numpy as np
from scipy.linalg import expm

from .errors import ConfigurationError, NumericalFailure, RegimeError

Scheme = Literal["ito-euler", "stratonovich-heun"]

CHUNK_SIZE = 512
NOISE_BLOCK = 1024
RESOLUTION_FACTOR = 0.1


@dataclass(frozen=True)
class SimParams:
    omega_qed: float
    beta_qed: float
    lambda_x: float
    lambda_z: float
    dt: float
    t_max: float
    n_traj: int = 1000
    seed: int = 0
    scheme: Scheme = "ito-euler"

    def __post_init__(self):
        for name in ("omega_qed", "beta_qed", "lambda_x", "lambda_z", "dt", "t_max"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ConfigurationError(f"{name} must be finite")
        for name in ("omega_qed", "beta_qed", "lambda_x", "lambda_z"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be >= 0")
        if not self.dt > 0:
            raise ConfigurationError("dt must be > 0")
        if self.t_max < self.dt:
            raise ConfigurationError("t_max must be >= dt")
        if not (isinstance(self.n_traj, (int, np.integer)) and self.n_traj >= 1):
            raise ConfigurationError("n_traj must be a positive integer")
        if not (0 <= self.seed < 2**64):
            raise ConfigurationError("seed must be a 64-bit unsigned integer")
        if self.scheme not in ("ito-euler", "stratonovich-heun"):
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")
        fastest = max(self.omega_qed, self.beta_qed + 2 * self.lambda_x + 2 * self.lambda_z)
        if fastest > 0 and self.dt > RESOLUTION_FACTOR / fastest * (1 + 1e-12):
            raise ConfigurationError(
                f"dt = {self.dt:g} too coarse; need dt <= {RESOLUTION_FACTOR / fastest:g}"
            )

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))

    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)


@dataclass(frozen=True)
class BlochState:
    sx: float = 0.0
    sy: float = 0.0
    sz: float = -1.0

    def __post_init__(self):
        v = (self.sx, self.sy, self.sz)
        if not all(math.isfinite(c) for c in v):
            raise ConfigurationError("Bloch components must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.sx, self.sy, self.sz])

    @classmethod
    def ground(cls) -> "BlochState":
        return cls(0.0, 0.0, -1.0)

    @classmethod
    def excited(cls) -> "BlochState":
        return cls(0.0, 0.0, 1.0)


def _check_physical(init: BlochState) -> None:
    if abs(init.sz) > 1 + 1e-6:
        raise ConfigurationError(f"initial |sz| = {abs(init.sz)} exceeds 1")


@dataclass(frozen=True)
class EnsembleStats:
    times: np.ndarray
    mean_sx: np.ndarray
    mean_sy: np.ndarray
    mean_sz: np.ndarray
    sem_sx: np.ndarray
    sem_sy: np.ndarray
    sem_sz: np.ndarray
    n_traj: int


@dataclass(frozen=True)
class CorrelationStats:
    tau: np.ndarray
    mean: np.ndarray  # complex
    sem_real: np.ndarray
    sem_imag: np.ndarray
    n_traj: int


def ito_drift_correction(params: SimParams) -> np.ndarray:
    """Drift added when rewriting the Stratonovich equations in Ito form.

    Equals half the sum of the squared noise generators, which is diagonal:
    (-2 lz, -2 lx - 2 lz, -2 lx) acting on (sx, sy, sz).
    """
    lx, lz = params.lambda_x, params.lambda_z
    return np.array([-2.0 * lz, -2.0 * lx - 2.0 * lz, -2.0 * lx])


# Array kernels. ``s`` has shape (3, ...) and may be complex; ``source``
# switches the inhomogeneous -2 beta term of the sz equation.


def _drift(s, p: SimParams, source: float):
    sx, sy, sz = s
    W, b = p.omega_qed, p.beta_qed
    return np.stack([-W * sy - b * sx, W * sx - b * sy, -2.0 * b * (sz + source)])


def _diffusion(s, dwx, dwz, p: SimParams):
    sx, sy, sz = s
    ax = 2.0 * math.sqrt(p.lambda_x)
    az = 2.0 * math.sqrt(p.lambda_z)
    return np.stack([az * sy * dwz, ax * sz * dwx - az * sx * dwz, -ax * sy * dwx])


def _advance(s, dwx, dwz, p: SimParams, source: float = 1.0):
    if p.scheme == "ito-euler":
        corr = ito_drift_correction(p).reshape((3,) + (1,) * (np.ndim(s) - 1))
        return s + (_drift(s, p, source) + corr * s) * p.dt + _diffusion(s, dwx, dwz, p)
    pred = s + _drift(s, p, source) * p.dt + _diffusion(s, dwx, dwz, p)
    return (
        s
        + 0.5 * (_drift(s, p, source) + _drift(pred, p, source)) * p.dt
        + 0.5 * (_diffusion(s, dwx, dwz, p) + _diffusion(pred, dwx, dwz, p))
    )


def step(state: BlochState, dW_x: float, dW_z: float, params: SimParams, step_index: int = 0) -> BlochState:
    """Advance one Bloch vector by ``params.dt`` with the given increments."""
    with np.errstate(over="ignore", invalid="ignore"):
        new = _advance(state.as_array(), dW_x, dW_z, params)
    if not np.all(np.isfinite(new)):
        raise NumericalFailure(f"non-finite state at step {step_index}", step_index=step_index)
    return BlochState(*(float(v) for v in new))


def trajectory_stream(seed: int, index: int) -> np.random.Generator:
    """Independent counter-based generator for trajectory ``index``."""
    ss = np.random.SeedSequence(seed, spawn_key=(index,))
    return np.random.Generator(np.random.Philox(ss))


def _merge(n_a, mean_a, m2_a, n_b, mean_b, m2_b):
    n = n_a + n_b
    delta = mean_b - mean_a
    mean = mean_a + delta * (n_b / n)
    m2 = m2_a + m2_b + delta * delta * (n_a * n_b / n)
    return n, mean, m2


def _run_chunk(
    p: SimParams,
    start: int,
    stop: int,
    init: np.ndarray,
    source: float,
    observe: Callable[[np.ndarray], np.ndarray],
    n_obs: int,
):
    nc = stop - start
    n_steps = p.n_steps
    gens = [trajectory_stream(p.seed, i) for i in range(start, stop)]
    s = np.repeat(init[:, None], nc, axis=1)
    mean = np.empty((n_steps + 1, n_obs))
    m2 = np.empty((n_steps + 1, n_obs))
    obs = observe(s)
    mean[0] = obs.mean(axis=-1)
    m2[0] = ((obs - mean[0][:, None]) ** 2).sum(axis=-1)
    sqdt = math.sqrt(p.dt)
    k = 0
    while k < n_steps:
        nb = min(NOISE_BLOCK, n_steps - k)
        # (nb, 2, nc): each trajectory consumes its own stream sequentially
        noise = np.stack([g.standard_normal((nb, 2)) for g in gens], axis=-1) * sqdt
        block = np.empty((nb, n_obs, nc))
        for j in range(nb):
            s = _advance(s, noise[j, 0], noise[j, 1], p, source)
            block[j] = observe(s)
        if not np.all(np.isfinite(block)):
            bad_step, _, bad_traj = np.argwhere(~np.isfinite(block))[0]
            raise NumericalFailure(
                f"non-finite state in trajectory {start + bad_traj} at step {k + bad_step + 1}",
                step_index=int(k + bad_step + 1),
                trajectory=int(start + bad_traj),
            )
        bm = block.mean(axis=-1)
        mean[k + 1 : k + 1 + nb] = bm
        m2[k + 1 : k + 1 + nb] = ((block - bm[..., None]) ** 2).sum(axis=-1)
        k += nb
    return nc, mean, m2


def _ensemble(p, init, source, observe, n_obs, workers):
    bounds = [(a, min(a + CHUNK_SIZE, p.n_traj)) for a in range(0, p.n_traj, CHUNK_SIZE)]

    def job(b):
        return _run_chunk(p, b[0], b[1], init, source, observe, n_obs)

    if workers and workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(job, bounds))
    else:
        parts = [job(b) for b in bounds]
    n, mean, m2 = parts[0]
    for part in parts[1:]:
        n, mean, m2 = _merge(n, mean, m2, *part)
    if n > 1:
        sem = np.sqrt(m2 / (n - 1) / n)
    else:
        sem = np.zeros_like(mean)
    return mean, sem


def run_ensemble(params: SimParams, init: BlochState, workers: int = 1) -> EnsembleStats:
    """Monte Carlo means and standard errors of the Bloch vector on ``params.times()``."""
    _check_physical(init)
    mean, sem = _ensemble(params, init.as_array(), 1.0, lambda s: s, 3, workers)
    return EnsembleStats(
        times=params.times(),
        mean_sx=mean[:, 0],
        mean_sy=mean[:, 1],
        mean_sz=mean[:, 2],
        sem_sx=sem[:, 0],
        sem_sy=sem[:, 1],
        sem_sz=sem[:, 2],
        n_traj=params.n_traj,
    )


def _xy_generator(p: SimParams) -> np.ndarray:
    """Linear generator of the mean (sx, sy) pair in Ito form."""
    b, W, lx, lz = p.beta_qed, p.omega_qed, p.lambda_x, p.lambda_z
    return np.array([[-(b + 2 * lz), -W], [W, -(b + 2 * lx + 2 * lz)]])


def mean_closed_form(params: SimParams, init: BlochState, t):
    """Exact ensemble mean (sx, sy, sz) at time(s) ``t``.

    sz relaxes to -beta/(beta + lx) at rate 2(beta + lx); (sx, sy) evolve by
    the matrix exponential of the Ito-averaged 2x2 generator.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ConfigurationError("t must be >= 0")
    b, lx = params.beta_qed, params.lambda_x
    if b + lx > 0:
        floor = b / (b + lx)
        sz = (floor + init.sz) * np.exp(-2.0 * (b + lx) * t) - floor
    else:
        sz = np.full_like(t, init.sz)
    A = _xy_generator(params)
    prop = expm(A * t[..., None, None])
    xy = prop @ np.array([init.sx, init.sy])
    return xy[..., 0], xy[..., 1], sz


def excited_population(params: SimParams, sz0: float, t):
    """Mean excited-state population (1 + <sz>)/2 at time(s) ``t``."""
    if abs(sz0) > 1 + 1e-12:
        raise ConfigurationError("|sz0| must be <= 1")
    t = np.asarray(t, dtype=float)
    b, lx = params.beta_qed, params.lambda_x
    if b + lx == 0:
        return np.full_like(t, 0.5 * (1.0 + sz0))
    return 0.5 * ((b / (b + lx) + sz0) * np.exp(-2.0 * (b + lx) * t) + lx / (b + lx))


def line_frequency(omega_qed: float, lambda_x: float) -> float:
    """sqrt(Omega_QED^2 - lx^2); rejects the overdamped case."""
    if not omega_qed > lambda_x:
        raise RegimeError(
            f"overdamped regime: omega_qed = {omega_qed:g} <= lambda_x = {lambda_x:g}"
        )
    return math.sqrt(omega_qed**2 - lambda_x**2)


def autocorrelation_closed_form(params: SimParams, tau_grid, C0: complex = 1.0, approximate: bool = False):
    """Mean dipole autocorrelation <sigma_+(t + tau) sigma_-(t)>.

    Exact: C0 exp(-(beta + lx + 2 lz) tau) (cos W tau + i (Omega_QED/W) sin W tau)
    with W = sqrt(Omega_QED^2 - lx^2). ``approximate`` replaces the bracket
    by exp(i W tau).
    """
    tau = np.asarray(tau_grid, dtype=float)
    W = line_frequency(params.omega_qed, params.lambda_x)
    decay = np.exp(-(params.beta_qed + params.lambda_x + 2.0 * params.lambda_z) * tau)
    if approximate:
        osc = np.exp(1j * W * tau)
    else:
        osc = np.cos(W * tau) + 1j * (params.omega_qed / W) * np.sin(W * tau)
    return C0 * decay * osc


def _uniform_step(tau: np.ndarray) -> float:
    if tau.ndim != 1 or tau.size < 2 or tau[0] != 0:
        raise ConfigurationError("tau grid must be 1-D, start at 0 and have >= 2 points")
    d = np.diff(tau)
    h = d[0]
    if not h > 0 or np.max(np.abs(d - h)) > 1e-9 * h:
        raise ConfigurationError("tau grid must be uniform and increasing")
    return float(h)


def autocorrelation_sde(
    params: SimParams, tau_grid, C0: complex = 1.0, workers: int = 1
) -> CorrelationStats:
    """Sampled dipole autocorrelation, propagated stochastically in tau.

    The pair X = <sx(t+tau) s_-(t)>, Y = <sy(t+tau) s_-(t)> obeys the same
    equations as the Bloch vector, together with Z = <sz(t+tau) s_-(t)>, but
    without the -2 beta source: <s_-(t)> vanishes when the emitter starts in
    an energy eigenstate, which is the only case handled. Initial values are
    X = C0, Y = -i C0, Z = 0 and C = (X + iY)/2.

    ``params.dt`` is replaced by the spacing of ``tau_grid``.
    """
    tau = np.asarray(tau_grid, dtype=float)
    h = _uniform_step(tau)
    p = SimParams(
        params.omega_qed,
        params.beta_qed,
        params.lambda_x,
        params.lambda_z,
        h,
        h * (tau.size - 1),
        params.n_traj,
        params.seed,
        params.scheme,
    )
    C0 = complex(C0)
    init = np.array([C0, -1j * C0, 0.0], dtype=complex)

    def observe(s):
        c = 0.5 * (s[0] + 1j * s[1])
        return np.stack([c.real, c.imag])

    mean, sem = _ensemble(p, init, 0.0, observe, 2, workers)
    return CorrelationStats(
        tau=tau,
        mean=mean[:, 0] + 1j * mean[:, 1],
        sem_real=sem[:, 0],
        sem_imag=sem[:, 1],
        n_traj=p.n_traj,
    )
