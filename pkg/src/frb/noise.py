"""Seeded space-time white noise and exact per-mode Ornstein-Uhlenbeck paths.

Normalization (derived from the Fourier convention in :mod:`frb.spectral`):
white noise has E[xi_k(t) xi_{-k}(s)] = delta(t - s) / (2*pi), so a time-step
increment of mode k has variance dt / (2*pi) and the stationary variance of
the stochastic convolution is

    sigma_stat(k)^2 = 1 / (4*pi*|k|^gamma),

which equals |T| / (2 |k|^gamma) for the unnormalized transform (|T| = 2*pi).
The per-mode update is the exact OU transition, so its statistics carry no
time-discretization error at any dt.

Reproducibility: every path owns a generator derived from the master seed by
the documented sub-stream scheme ``philox-seedseq-v1``:
``np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=seed,
spawn_key=(index,))))``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError
from .spectral import TWO_PI, SpectralField, TimePath, TorusGrid

SUBSEED_SCHEME = "philox-seedseq-v1"

NOISE_CONVENTION = (
    "E[xi_k(t) xi_{-k}(s)] = delta(t-s)/(2*pi); stationary variance "
    "sigma_stat(k)^2 = 1/(4*pi*|k|^gamma) = |T|/(2*|k|^gamma) / |T|^2"
)

VARIANTS = ("white", "mollified", "band_limited", "roughened")


def substream(seed: int, index: int = 0) -> np.random.Generator:
    """Counter-based generator for path `index` of master `seed`."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


def mollifier_profile(r) -> np.ndarray:
    """Even, smooth, decreasing cutoff with value 1 at 0 and support |r| <= 1."""
    from .besov import _smooth_step

    r = np.abs(np.asarray(r, dtype=float))
    return 1.0 - _smooth_step((r - 0.5) / 0.5)


@dataclass(frozen=True)
class NoiseConfig:
    """Driving-noise description: dissipation order, seed, time grid, variant."""

    grid: TorusGrid
    gamma: float
    seed: int
    dt: float
    n_steps: int
    variant: str = "white"
    epsilon: Optional[float] = None
    n_band: Optional[int] = None
    beta: float = 0.0

    def __post_init__(self):
        if not (1.0 < self.gamma <= 2.0):
            raise ConfigError(f"gamma must lie in (1, 2], got {self.gamma}")
        if self.dt <= 0 or self.n_steps < 1:
            raise ConfigError("need dt > 0 and n_steps >= 1")
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown noise variant {self.variant!r}")
        if self.variant == "mollified" and not self.epsilon:
            raise ConfigError("mollified variant requires epsilon > 0")
        if self.variant == "band_limited" and not self.n_band:
            raise ConfigError("band_limited variant requires n_band")
        if self.beta < 0:
            raise ConfigError(f"beta must be >= 0, got {self.beta}")
        if self.variant == "roughened" and self.beta == 0:
            raise ConfigError("roughened variant requires beta > 0")

    @property
    def horizon(self) -> float:
        return self.dt * self.n_steps

    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt


def mode_weights(config: NoiseConfig) -> np.ndarray:
    """Spectral weight w(k) applied to the white noise: variant cutoff x |k|^beta."""
    grid = config.grid
    k = np.abs(grid.wavenumbers).astype(float)
    if config.variant == "mollified":
        w = mollifier_profile(config.epsilon * k)
    elif config.variant == "band_limited":
        w = ((k >= config.n_band / 2.0) & (k <= config.n_band)).astype(float)
    else:
        w = np.ones_like(k)
    if config.beta > 0:
        with np.errstate(divide="ignore"):
            w = w * np.where(k > 0, k**config.beta, 0.0)
    w[0] = 0.0
    w[grid.nyquist_index] = 0.0
    return w


def _mirror(grid: TorusGrid, positive: np.ndarray) -> np.ndarray:
    """Expand (..., K) positive-mode data into Hermitian (..., N) arrays."""
    n = grid.n_modes
    kmax = grid.max_wavenumber
    out = np.zeros(positive.shape[:-1] + (n,), dtype=np.complex128)
    out[..., 1 : kmax + 1] = positive
    out[..., n - 1 : n - kmax - 1 : -1] = np.conj(positive)
    return out


def standard_complex_normals(rng: np.random.Generator, shape) -> np.ndarray:
    """Complex normals with E|z|^2 = 1 (real and imaginary parts N(0, 1/2))."""
    z = rng.standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


@dataclass(frozen=True)
class NoisePath:
    """Per-mode white-noise increments over the time grid: (n_steps, N)."""

    config: NoiseConfig
    increments: np.ndarray


def sample_noise(config: NoiseConfig, path_index: int = 0) -> NoisePath:
    """Draw the Hermitian white-noise increments; deterministic given the seed."""
    rng = substream(config.seed, path_index)
    grid = config.grid
    kmax = grid.max_wavenumber
    z = standard_complex_normals(rng, (config.n_steps, kmax))
    w = mode_weights(config)[1 : kmax + 1]
    scale = np.sqrt(config.dt / TWO_PI)
    return NoisePath(config, _mirror(grid, z * (scale * w)))


# -- exact OU transition ------------------------------------------------------


def stationary_variance(k, gamma: float) -> np.ndarray:
    """sigma_stat(k)^2 = 1/(4*pi*|k|^gamma) under the module convention."""
    k = np.abs(np.asarray(k, dtype=float))
    with np.errstate(divide="ignore"):
        return np.where(k > 0, 1.0 / (2.0 * TWO_PI * k**gamma), 0.0)


def ou_step(x_k: complex, k: int, gamma: float, dt: float, rng: np.random.Generator) -> complex:
    """One exact OU transition for mode k (distributionally exact at any dt)."""
    if k == 0:
        raise ValueError("the zero mode is projected out (mean-zero convention)")
    lam = abs(k) ** gamma
    decay = np.exp(-lam * dt)
    var = (1.0 - decay**2) * stationary_variance(k, gamma)
    eta = standard_complex_normals(rng, ()) * np.sqrt(var)
    return decay * x_k + eta


@dataclass(frozen=True)
class OUPath:
    """Stochastic-convolution trajectory (zero start) plus optional stationary twin.

    ``max_step_sigmas`` flags discrete-continuity: the largest realized step
    in units of its own standard deviation (> 10 marks a suspect path).
    """

    config: NoiseConfig
    x: TimePath
    y: Optional[TimePath] = None
    max_step_sigmas: float = 0.0

    @property
    def times(self) -> np.ndarray:
        return self.x.times

    @property
    def continuity_flag(self) -> bool:
        return self.max_step_sigmas <= 10.0


def draw_normals(config: NoiseConfig, path_index: int = 0) -> np.ndarray:
    """Standard complex normals (n_steps, K) driving one OU path realization.

    Exposed so coupled realizations (e.g. a mollification ladder) can reuse
    one draw across configs that differ only in spectral weights.
    """
    rng = substream(config.seed, path_index)
    return standard_complex_normals(rng, (config.n_steps, config.grid.max_wavenumber))


def build_ou_path(
    config: NoiseConfig,
    path_index: int = 0,
    stationary: bool = False,
    normals: Optional[np.ndarray] = None,
) -> OUPath:
    """Evolve every mode by the exact OU transition from zero initial data.

    With ``stationary=True`` the returned path also carries the stationary
    process started from an exact stationary draw and driven by the same
    increments (the smooth-difference decomposition of the convolution).
    """
    grid = config.grid
    kmax = grid.max_wavenumber
    kk = np.arange(1, kmax + 1, dtype=float)
    lam = kk**config.gamma
    decay = np.exp(-lam * config.dt)
    w = mode_weights(config)[1 : kmax + 1]
    sig2 = stationary_variance(kk, config.gamma) * w**2
    step_std = np.sqrt((1.0 - decay**2) * sig2)

    if normals is None:
        normals = draw_normals(config, path_index)
    if normals.shape != (config.n_steps, kmax):
        raise ConfigError(f"normals shape {normals.shape} != {(config.n_steps, kmax)}")

    x = np.zeros((config.n_steps + 1, kmax), dtype=np.complex128)
    max_sig = 0.0
    for n in range(config.n_steps):
        eta = normals[n] * step_std
        x[n + 1] = decay * x[n] + eta
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.abs(x[n + 1] - x[n]) / np.where(step_std > 0, step_std, np.inf)
        if ratio.size:
            max_sig = max(max_sig, float(np.max(ratio)))

    times = config.times()
    x_path = TimePath(grid, times, _mirror(grid, x))
    y_path = None
    if stationary:
        # independent sub-stream for the stationary start: spawn_key=(index, 1)
        rng_init = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(entropy=int(config.seed),
                                                    spawn_key=(int(path_index), 1)))
        )
        y0 = standard_complex_normals(rng_init, (kmax,)) * np.sqrt(sig2)
        envelope = np.exp(-np.outer(times, lam))
        y = x + envelope * y0[None, :]
        y_path = TimePath(grid, times, _mirror(grid, y))
    return OUPath(config, x_path, y_path, max_step_sigmas=max_sig)


def sample_stationary_field(
    config: NoiseConfig, rng: np.random.Generator
) -> SpectralField:
    """One exact draw of the stationary convolution at a fixed time."""
    grid = config.grid
    kmax = grid.max_wavenumber
    kk = np.arange(1, kmax + 1, dtype=float)
    w = mode_weights(config)[1 : kmax + 1]
    sig = np.sqrt(stationary_variance(kk, config.gamma)) * w
    z = standard_complex_normals(rng, (kmax,)) * sig
    return SpectralField(grid, _mirror(grid, z))
