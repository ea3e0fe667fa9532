"""Torus discretization, real<->spectral transforms, multipliers, dealiased products.

Conventions (fixed once, used everywhere):

* The torus is R / 2*pi*Z, so wavenumbers are integers.
* coeff(k) = (1/(2*pi)) * integral u(x) exp(-i k x) dx, hence
  u(x) = sum_k coeff(k) exp(i k x).  This is ``np.fft.fft(samples) / N``.
* Retained modes are |k| <= N/2 - 1.  The Nyquist slot (k = -N/2 in FFT
  layout) is forced to zero so Hermitian symmetry is unambiguous.
* Parseval: ||u||_{L2}^2 = 2*pi * sum_k |coeff(k)|^2.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .errors import DimensionMismatchError

TWO_PI = 2.0 * np.pi

FOURIER_CONVENTION = (
    "coeff(k) = (1/(2*pi)) int_T u(x) exp(-i*k*x) dx; u = sum_k coeff(k) exp(i*k*x); "
    "||u||_L2^2 = 2*pi*sum_k|coeff(k)|^2; Nyquist mode dropped"
)


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid on the 2*pi torus with N points, N a power of two >= 8."""

    n_modes: int

    def __post_init__(self):
        if not isinstance(self.n_modes, (int, np.integer)):
            raise ValueError(f"n_modes must be an integer, got {self.n_modes!r}")
        if self.n_modes < 8 or not _is_power_of_two(int(self.n_modes)):
            raise ValueError(f"n_modes must be a power of two >= 8, got {self.n_modes}")

    @property
    def length(self) -> float:
        return TWO_PI

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Integer wavenumbers in FFT layout: 0, 1, ..., N/2-1, -N/2, ..., -1."""
        k = np.fft.fftfreq(self.n_modes, d=1.0 / self.n_modes)
        k = np.rint(k).astype(np.int64)
        k.setflags(write=False)
        return k

    @cached_property
    def nyquist_index(self) -> int:
        return self.n_modes // 2

    @cached_property
    def max_wavenumber(self) -> int:
        """Largest retained |k| (the Nyquist mode is dropped)."""
        return self.n_modes // 2 - 1

    @cached_property
    def points(self) -> np.ndarray:
        x = np.linspace(0.0, TWO_PI, self.n_modes, endpoint=False)
        x.setflags(write=False)
        return x


def _canonical_coeffs(grid: TorusGrid, coeffs: np.ndarray) -> np.ndarray:
    c = np.array(coeffs, dtype=np.complex128, copy=True)
    if c.shape != (grid.n_modes,):
        raise DimensionMismatchError(
            f"coefficient array has shape {c.shape}, expected ({grid.n_modes},)"
        )
    c[grid.nyquist_index] = 0.0
    c.setflags(write=False)
    return c


@dataclass(frozen=True)
class SpectralField:
    """Complex Fourier coefficients of a real field on the torus.

    Immutable; all operations return new fields.  Hermitian symmetry
    coeff(-k) = conj(coeff(k)) is the caller's responsibility when building
    coefficients by hand and is verified by :meth:`hermitian_defect`.
    """

    grid: TorusGrid
    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _canonical_coeffs(self.grid, self.coeffs))

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zeros(grid: TorusGrid) -> "SpectralField":
        return SpectralField(grid, np.zeros(grid.n_modes, dtype=np.complex128))

    @staticmethod
    def from_modes(grid: TorusGrid, modes: dict) -> "SpectralField":
        """Build a field from {k: coeff}; the conjugate modes are filled in."""
        c = np.zeros(grid.n_modes, dtype=np.complex128)
        for k, val in modes.items():
            if abs(k) > grid.max_wavenumber:
                raise DimensionMismatchError(f"mode {k} not representable on N={grid.n_modes}")
            c[k % grid.n_modes] = val
            if -k % grid.n_modes != k % grid.n_modes and -k not in modes:
                c[-k % grid.n_modes] = np.conj(val)
        return SpectralField(grid, c)

    # -- basic queries -----------------------------------------------------

    def coeff(self, k: int) -> complex:
        if abs(k) > self.grid.max_wavenumber and k != 0:
            raise DimensionMismatchError(f"mode {k} not retained on N={self.grid.n_modes}")
        return complex(self.coeffs[k % self.grid.n_modes])

    def hermitian_defect(self) -> float:
        """Relative size of coeff(-k) - conj(coeff(k)); 0 for real fields."""
        c = self.coeffs
        mirror = np.conj(c[(-np.arange(self.grid.n_modes)) % self.grid.n_modes])
        scale = max(float(np.max(np.abs(c))), 1e-300)
        return float(np.max(np.abs(c - mirror))) / scale

    def is_mean_zero(self, tol: float = 1e-12) -> bool:
        return abs(self.coeffs[0]) <= tol

    def l2_norm(self) -> float:
        return float(np.sqrt(TWO_PI * np.sum(np.abs(self.coeffs) ** 2)))

    def h_norm(self, s: float) -> float:
        """Classical Sobolev norm with weight (1 + k^2)^s (iteration norm)."""
        k = self.grid.wavenumbers
        w = (1.0 + k.astype(float) ** 2) ** s
        return float(np.sqrt(TWO_PI * np.sum(w * np.abs(self.coeffs) ** 2)))

    # -- arithmetic --------------------------------------------------------

    def _check_same_grid(self, other: "SpectralField"):
        if self.grid.n_modes != other.grid.n_modes:
            raise DimensionMismatchError(
                f"grid mismatch: N={self.grid.n_modes} vs N={other.grid.n_modes}"
            )

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check_same_grid(other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check_same_grid(other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.grid, -self.coeffs)


# -- transforms -------------------------------------------------------------


def to_spectral(samples: np.ndarray, grid: TorusGrid) -> SpectralField:
    """Forward transform of real samples on the uniform grid."""
    samples = np.asarray(samples, dtype=float)
    if samples.shape != (grid.n_modes,):
        raise DimensionMismatchError(
            f"sample count {samples.shape} does not match grid N={grid.n_modes}"
        )
    return SpectralField(grid, np.fft.fft(samples) / grid.n_modes)


def to_physical(field: SpectralField, oversample: int = 1) -> np.ndarray:
    """Evaluate the trigonometric polynomial on a (possibly finer) uniform grid."""
    return physical_values(field.coeffs, field.grid, oversample=oversample)


def physical_values(coeffs: np.ndarray, grid: TorusGrid, oversample: int = 1) -> np.ndarray:
    """Batched inverse transform of (..., N) coefficient arrays."""
    n = grid.n_modes
    if oversample == 1:
        return np.fft.ifft(coeffs, axis=-1).real * n
    m = n * int(oversample)
    k = grid.wavenumbers
    padded = np.zeros(coeffs.shape[:-1] + (m,), dtype=np.complex128)
    padded[..., k % m] = coeffs
    return np.fft.ifft(padded, axis=-1).real * m


# -- multipliers ------------------------------------------------------------


def symbol_array(grid: TorusGrid, symbol) -> np.ndarray:
    """Evaluate a symbol k -> complex on the grid's wavenumbers (Nyquist zeroed)."""
    if callable(symbol):
        m = np.asarray([symbol(int(k)) for k in grid.wavenumbers], dtype=np.complex128)
    else:
        m = np.asarray(symbol, dtype=np.complex128)
        if m.shape != (grid.n_modes,):
            raise DimensionMismatchError(
                f"symbol array has shape {m.shape}, expected ({grid.n_modes},)"
            )
        m = m.copy()
    m[grid.nyquist_index] = 0.0
    return m


def apply_multiplier(field: SpectralField, symbol) -> SpectralField:
    """Multiply coeff(k) by m(k).  m may be a callable or a length-N array."""
    m = symbol_array(field.grid, symbol)
    return SpectralField(field.grid, field.coeffs * m)


def fractional_laplacian_symbol(grid: TorusGrid, gamma: float) -> np.ndarray:
    """Symbol of the fractional dissipation operator: -(|k|^gamma)."""
    k = np.abs(grid.wavenumbers).astype(float)
    return symbol_array(grid, -(k**gamma) + 0j)


def derivative_symbol(grid: TorusGrid) -> np.ndarray:
    """Symbol of d/dx: i*k."""
    return symbol_array(grid, 1j * grid.wavenumbers.astype(float))


def dp_smoothing_symbol(grid: TorusGrid) -> np.ndarray:
    """Symbol of (1 - d^2/dx^2)^{-1} d/dx: i*k / (1 + k^2)."""
    k = grid.wavenumbers.astype(float)
    return symbol_array(grid, 1j * k / (1.0 + k**2))


def heat_symbol(grid: TorusGrid, t: float, gamma: float) -> np.ndarray:
    """Symbol of the fractional heat flow at time t: exp(-t*|k|^gamma)."""
    if t < 0:
        raise ValueError(f"heat flow requires t >= 0, got {t}")
    k = np.abs(grid.wavenumbers).astype(float)
    return symbol_array(grid, np.exp(-t * k**gamma) + 0j)


# -- dealiased products ------------------------------------------------------


@lru_cache(maxsize=64)
def _padding_layout(n: int):
    """Index map embedding N retained modes into the 3N/2 padded transform."""
    m = (3 * n) // 2
    k = np.rint(np.fft.fftfreq(n, d=1.0 / n)).astype(np.int64)
    dest = k % m
    dest.setflags(write=False)
    return m, dest


def product_coeffs(a: np.ndarray, b: np.ndarray, grid: TorusGrid) -> np.ndarray:
    """Alias-free spectral product of (..., N) coefficient arrays.

    Zero-pads to 3N/2 modes (2/3 rule), multiplies in physical space and
    truncates back, which makes the convolution exact on retained modes.
    """
    n = grid.n_modes
    m, dest = _padding_layout(n)
    pa = np.zeros(a.shape[:-1] + (m,), dtype=np.complex128)
    pb = np.zeros(b.shape[:-1] + (m,), dtype=np.complex128)
    pa[..., dest] = a
    pb[..., dest] = b
    ua = np.fft.ifft(pa, axis=-1) * m
    ub = np.fft.ifft(pb, axis=-1) * m
    pc = np.fft.fft(ua * ub, axis=-1) / m
    out = pc[..., dest]
    out[..., grid.nyquist_index] = 0.0
    return out


def dealiased_product(f: SpectralField, g: SpectralField) -> SpectralField:
    """Exact (alias-free) product of two fields, truncated to retained modes."""
    f._check_same_grid(g)
    return SpectralField(f.grid, product_coeffs(f.coeffs, g.coeffs, f.grid))


# -- time paths --------------------------------------------------------------


@dataclass(frozen=True)
class TimePath:
    """A field trajectory on a uniform time grid: coeffs has shape (n_times, N)."""

    grid: TorusGrid
    times: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float, copy=True)
        c = np.array(self.coeffs, dtype=np.complex128, copy=True)
        if t.ndim != 1 or len(t) < 2:
            raise ValueError("times must be a 1-d array with at least two entries")
        dt = np.diff(t)
        if np.any(dt <= 0) or not np.allclose(dt, dt[0], rtol=1e-9, atol=1e-12):
            raise ValueError("times must be strictly increasing and uniform")
        if c.shape != (len(t), self.grid.n_modes):
            raise DimensionMismatchError(
                f"coeffs shape {c.shape} does not match (n_times={len(t)}, N={self.grid.n_modes})"
            )
        c[:, self.grid.nyquist_index] = 0.0
        t.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "coeffs", c)

    @property
    def n_times(self) -> int:
        return len(self.times)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def field_at(self, index: int) -> SpectralField:
        return SpectralField(self.grid, self.coeffs[index])

    def slice(self, start: int, stop: int) -> "TimePath":
        return TimePath(self.grid, self.times[start:stop], self.coeffs[start:stop])

    def shift_times(self, origin: float = 0.0) -> "TimePath":
        return TimePath(self.grid, self.times - self.times[0] + origin, self.coeffs)

    def _check_aligned(self, other: "TimePath"):
        if self.grid.n_modes != other.grid.n_modes:
            raise DimensionMismatchError("time paths live on different grids")
        if self.n_times != other.n_times or not np.allclose(
            self.times - self.times[0], other.times - other.times[0], rtol=1e-9, atol=1e-12
        ):
            raise DimensionMismatchError("time paths have mismatched time grids")

    def __add__(self, other: "TimePath") -> "TimePath":
        self._check_aligned(other)
        return TimePath(self.grid, self.times, self.coeffs + other.coeffs)

    def __sub__(self, other: "TimePath") -> "TimePath":
        self._check_aligned(other)
        return TimePath(self.grid, self.times, self.coeffs - other.coeffs)

    def sup_l2_norm(self) -> float:
        return float(np.max(np.sqrt(TWO_PI * np.sum(np.abs(self.coeffs) ** 2, axis=-1))))

    def sup_h_norm(self, s: float) -> float:
        k = self.grid.wavenumbers.astype(float)
        w = (1.0 + k**2) ** s
        return float(np.max(np.sqrt(TWO_PI * np.sum(w * np.abs(self.coeffs) ** 2, axis=-1))))


def constant_path(field: SpectralField, times: np.ndarray) -> TimePath:
    coeffs = np.broadcast_to(field.coeffs, (len(times), field.grid.n_modes))
    return TimePath(field.grid, np.asarray(times, dtype=float), coeffs)
