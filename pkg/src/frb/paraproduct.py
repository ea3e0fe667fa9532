"""Bony paraproducts, resonant products, the time-mollified paraproduct,
and the commutators built from them.

The temporally mollified paraproduct replaces the low-frequency factor
S_{i-1}f of each block term by its causal time average at scale 2^(-gamma*i):

    (f <<g)(t) = sum_i [ int 2^(gamma i) phi(2^(gamma i) (t-s)) f(s v 0) ds
                         applied to S_{i-1}f ] * block_i g(t),

with phi a fixed mass-one bump supported in [1/4, 3/4].  The discrete taps
are renormalized to sum exactly to one, so a time-constant low factor gives
back the plain paraproduct to machine precision.  Blocks whose mollification
window spans fewer than four time steps fall back to the unmollified factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .besov import partition_for
from .errors import DimensionMismatchError, InsufficientResolutionError
from .spectral import (
    SpectralField,
    TimePath,
    TorusGrid,
    dealiased_product,
    product_coeffs,
)

MIN_WINDOW_STEPS = 4


# -- paraproducts on single fields -------------------------------------------


def _check_grids(f, g):
    if f.grid.n_modes != g.grid.n_modes:
        raise DimensionMismatchError(
            f"grid mismatch: N={f.grid.n_modes} vs N={g.grid.n_modes}"
        )


def _para_less_coeffs(fc: np.ndarray, gc: np.ndarray, grid: TorusGrid) -> np.ndarray:
    """Low-high part of the product for (..., N) coefficient arrays."""
    part = partition_for(grid.n_modes)
    out = np.zeros_like(np.broadcast_arrays(fc, gc)[0])
    lows = []
    highs = []
    for j in range(1, part.j_max + 1):
        lows.append(fc * part.cutoff_weights(j - 1))  # S_{j-1} f: blocks <= j-2
        highs.append(gc * part.rho[j])
    lows = np.stack(lows, axis=0)
    highs = np.stack(highs, axis=0)
    prods = product_coeffs(lows, highs, grid)
    return out + prods.sum(axis=0)


def para_less(f: SpectralField, g: SpectralField) -> SpectralField:
    """f < g: sum over blocks of S_{j-1} f times block_j g (low-high part)."""
    _check_grids(f, g)
    return SpectralField(f.grid, _para_less_coeffs(f.coeffs, g.coeffs, f.grid))


def para_greater(f: SpectralField, g: SpectralField) -> SpectralField:
    """f > g = g < f (high-low part)."""
    return para_less(g, f)


def _resonant_coeffs(fc: np.ndarray, gc: np.ndarray, grid: TorusGrid) -> np.ndarray:
    part = partition_for(grid.n_modes)
    weights = np.concatenate([part.chi[None, :], part.rho], axis=0)
    n_blocks = weights.shape[0]
    lefts = []
    rights = []
    for a in range(n_blocks):
        for b in range(n_blocks):
            if abs(a - b) <= 1:
                lefts.append(fc * weights[a])
                rights.append(gc * weights[b])
    prods = product_coeffs(np.stack(lefts, axis=0), np.stack(rights, axis=0), grid)
    return prods.sum(axis=0)


def resonant(f: SpectralField, g: SpectralField) -> SpectralField:
    """f o g: the part of the product with comparable block indices (|i-j| <= 1)."""
    _check_grids(f, g)
    return SpectralField(f.grid, _resonant_coeffs(f.coeffs, g.coeffs, f.grid))


def commutator_resonant(f: SpectralField, g: SpectralField, h: SpectralField) -> SpectralField:
    """C(f, g, h) = (f < g) o h - f (g o h), the outer product alias-free."""
    _check_grids(f, g)
    _check_grids(f, h)
    first = resonant(para_less(f, g), h)
    second = dealiased_product(f, resonant(g, h))
    return first - second


# -- temporal mollifier --------------------------------------------------------


def _bump(t: np.ndarray) -> np.ndarray:
    """Polynomial bump on [1/4, 3/4] with unit mass: 17920 ((t-1/4)(3/4-t))^3."""
    t = np.asarray(t, dtype=float)
    inside = (t > 0.25) & (t < 0.75)
    out = np.zeros_like(t)
    out[inside] = 17920.0 * ((t[inside] - 0.25) * (0.75 - t[inside])) ** 3
    return out


@dataclass(frozen=True)
class TemporalMollifier:
    """Mass-one causal kernel profile with block-dependent scale 2^(-gamma*i)."""

    gamma: float

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("mollifier scale exponent must be positive")

    def profile(self, t) -> np.ndarray:
        return _bump(t)

    def mass(self, n_quad: int = 20001) -> float:
        t = np.linspace(0.0, 1.0, n_quad)
        return float(np.trapezoid(self.profile(t), t))

    def taps(self, block: int, dt: float):
        """FIR taps (offsets m, weights) so Q_i f(t_n) = sum_m w_m f(t_{n-m} v 0).

        Returns None when the window [2^(-gamma i)/4, 3*2^(-gamma i)/4] spans
        fewer than MIN_WINDOW_STEPS grid steps; the caller then skips the
        mollification for this block.
        """
        scale = 2.0 ** (-self.gamma * block)
        m_lo = int(np.ceil(0.25 * scale / dt))
        m_hi = int(np.floor(0.75 * scale / dt))
        if m_hi - m_lo + 1 < MIN_WINDOW_STEPS:
            return None
        offsets = np.arange(m_lo, m_hi + 1)
        weights = self.profile(offsets * dt / scale)
        total = weights.sum()
        if total <= 0:
            return None
        return offsets, weights / total


def _mollify_rows(values: np.ndarray, offsets: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Causal FIR filter along axis 0 with the pre-initial rows clamped to row 0."""
    n = values.shape[0]
    out = np.zeros_like(values)
    for m, w in zip(offsets, weights):
        if m >= n:
            out += w * values[0]
            continue
        shifted = np.concatenate(
            [np.repeat(values[:1], m, axis=0), values[: n - m]], axis=0
        )
        out += w * shifted
    return out


def modified_para(f: TimePath, g: TimePath, moll: Optional[TemporalMollifier] = None,
                  gamma: Optional[float] = None) -> TimePath:
    """f << g: paraproduct with the low factor causally mollified in time."""
    f._check_aligned(g)
    if moll is None:
        if gamma is None:
            raise ValueError("provide a TemporalMollifier or a gamma")
        moll = TemporalMollifier(gamma)
    grid = f.grid
    part = partition_for(grid.n_modes)
    dt = f.dt
    k = np.abs(grid.wavenumbers).astype(float)
    out = np.zeros_like(f.coeffs)
    lows = []
    highs = []
    for j in range(1, part.j_max + 1):
        low = f.coeffs * part.cutoff_weights(j - 1)
        taps = moll.taps(j, dt)
        if taps is not None:
            # only modes inside the S_{j-1} support matter; filter those columns
            active = k <= (4.0 / 3.0) * 2.0 ** (j - 1)
            filtered = low.copy()
            filtered[:, active] = _mollify_rows(low[:, active], *taps)
            low = filtered
        lows.append(low)
        highs.append(g.coeffs * part.rho[j])
    prods = product_coeffs(np.stack(lows, axis=0), np.stack(highs, axis=0), grid)
    out += prods.sum(axis=0)
    return TimePath(grid, f.times, out)


def para_less_path(f: TimePath, g: TimePath) -> TimePath:
    """Plain paraproduct applied at every time of a pair of paths."""
    f._check_aligned(g)
    return TimePath(f.grid, f.times, _para_less_coeffs(f.coeffs, g.coeffs, f.grid))


# -- discrete heat operator ----------------------------------------------------


def heat_operator_discrete(path: TimePath, gamma: float) -> TimePath:
    """Discrete L = d/dt - Lambda^gamma along a path, exact in space.

    Returns a path one step shorter whose entry n approximates L at the
    midpoint t_n + dt/2:

        (f(t_{n+1}) - f(t_n))/dt + |k|^gamma (f(t_n) + f(t_{n+1}))/2,

    which is second-order accurate for smooth trajectories.
    """
    if path.n_times < 3:
        raise InsufficientResolutionError("need at least 3 time points for the stencil")
    lam = np.abs(path.grid.wavenumbers).astype(float) ** gamma
    c = path.coeffs
    dt = path.dt
    vals = (c[1:] - c[:-1]) / dt + lam[None, :] * 0.5 * (c[1:] + c[:-1])
    return TimePath(path.grid, path.times[:-1], vals)


def commutator_heat(
    f: TimePath,
    g: TimePath,
    moll: Optional[TemporalMollifier] = None,
    gamma: Optional[float] = None,
    lg: Optional[TimePath] = None,
) -> TimePath:
    """L(f << g) - f << (L g), with L applied by the discrete stencil.

    ``lg`` may supply L g exactly (e.g. from a known forcing); otherwise it is
    computed by the same stencil.
    """
    f._check_aligned(g)
    if gamma is None:
        if moll is None:
            raise ValueError("provide gamma (and optionally a mollifier)")
        gamma = moll.gamma
    if moll is None:
        moll = TemporalMollifier(gamma)
    if f.n_times < MIN_WINDOW_STEPS + 2:
        raise InsufficientResolutionError(
            f"time grid too coarse: {f.n_times} points"
        )
    w = modified_para(f, g, moll)
    lw = heat_operator_discrete(w, gamma)
    if lg is None:
        lg = heat_operator_discrete(g, gamma)
    else:
        if lg.n_times == g.n_times:
            lg = lg.slice(0, g.n_times - 1)
    f_short = f.slice(0, f.n_times - 1)
    second = modified_para(f_short, lg, moll)
    return TimePath(f.grid, lw.times, lw.coeffs - second.coeffs)
