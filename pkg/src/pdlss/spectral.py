"""Periodic grids and FFT pseudospectral differentiation.

A :class:`Grid` samples the periodic interval ``[-ell, ell)`` at ``2**n``
equispaced points ``x_j = -ell + 2 ell j / 2**n``.  Derivatives are taken
by multiplying Fourier coefficients by ``(i k pi / ell)**p``.

Note on the sample points: a formula of the form
``x_m = -ell + 2 ell (m + 1) / (2**n + 1)`` is sometimes quoted for this
scheme, but it does not produce one full period of equispaced points and
is incompatible with the FFT.  The uniform grid above is used instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError, ConsistencyError, ContractViolation, DomainError

MAX_EXPONENT = 24
_SYMMETRY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform periodic grid on ``[-half_width, half_width)`` with ``2**exponent`` points."""

    half_width: float
    exponent: int
    points: np.ndarray = field(repr=False)
    wavenumbers: np.ndarray = field(repr=False)
    _multipliers: dict = field(repr=False, default_factory=dict)

    @property
    def size(self) -> int:
        return self.points.size

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.size

    @property
    def period(self) -> float:
        return 2.0 * self.half_width

    def multiplier(self, p: int) -> np.ndarray:
        """Half-spectrum multiplier ``(i k pi / ell)**p`` for use with ``rfft``.

        The Nyquist entry is zeroed for odd ``p`` and kept (it is real) for
        even ``p``.
        """
        return self._multipliers[p]

    def derivative(self, values: np.ndarray, p: int) -> np.ndarray:
        """Raw-array version of :func:`spectral_derivative`."""
        if p not in self._multipliers:
            raise ContractViolation(f"derivative order must be 1..4, got {p}")
        return np.fft.irfft(self._multipliers[p] * np.fft.rfft(values), n=self.size)

    def derivatives(self, values: np.ndarray, orders) -> np.ndarray:
        """Several derivatives of the same samples with one forward and one batched inverse FFT."""
        coeffs = np.fft.rfft(values)
        stacked = np.stack([self._multipliers[p] * coeffs for p in orders])
        return np.fft.irfft(stacked, n=self.size, axis=-1)

    def integrate(self, values: np.ndarray) -> float:
        """Periodic trapezoid rule (uniform Riemann sum times spacing)."""
        return float(np.sum(values) * self.spacing)

    def sample(self, func: Callable[[np.ndarray], np.ndarray]) -> "SampledFunction":
        return SampledFunction(self, np.asarray(func(self.points), dtype=float))


def make_grid(half_width: float, exponent: int) -> Grid:
    """Build the ``2**exponent``-point grid on ``[-half_width, half_width)``."""
    if not np.isfinite(half_width) or half_width <= 0:
        raise ConfigurationError(f"half width must be positive, got {half_width}")
    if int(exponent) != exponent or not 1 <= exponent <= MAX_EXPONENT:
        raise ConfigurationError(f"exponent must be an integer in 1..{MAX_EXPONENT}, got {exponent}")
    exponent = int(exponent)
    half_width = float(half_width)
    size = 2**exponent
    points = -half_width + 2.0 * half_width * np.arange(size) / size
    wavenumbers = np.fft.fftfreq(size, d=1.0 / size).astype(np.int64)
    wavenumbers[size // 2] = size // 2
    half_k = np.arange(size // 2 + 1, dtype=float)
    multipliers = {}
    for p in range(1, 5):
        m = (1j * half_k * np.pi / half_width) ** p
        if p % 2 == 1:
            m[-1] = 0.0
        else:
            m = m.real.astype(complex)
        multipliers[p] = m
    for arr in (points, wavenumbers):
        arr.setflags(write=False)
    return Grid(half_width, exponent, points, wavenumbers, multipliers)


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Samples of a real function on a :class:`Grid`."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.size,):
            raise ContractViolation(
                f"expected {self.grid.size} samples, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise DomainError("non-finite sample", index=bad, value=float(values[bad]))
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size

    def integral(self) -> float:
        return self.grid.integrate(self.values)


def forward_transform(values: np.ndarray) -> np.ndarray:
    """Complex Fourier coefficients ``f_k`` with ``f(x_j) = sum_k f_k exp(i k pi (x_j + ell) / ell)``."""
    values = np.asarray(values)
    return np.fft.fft(values) / values.size


def inverse_transform(coeffs: np.ndarray) -> np.ndarray:
    """Inverse of :func:`forward_transform` for coefficients of a real signal.

    Raises :class:`ConsistencyError` if the coefficients are not conjugate
    symmetric to within ``1e-12`` relative.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    mirrored = np.conj(np.roll(coeffs[::-1], 1))
    scale = max(float(np.max(np.abs(coeffs))), np.finfo(float).tiny)
    asym = float(np.max(np.abs(coeffs - mirrored))) / scale
    if asym > _SYMMETRY_TOL:
        raise ConsistencyError(f"coefficients are not conjugate symmetric (relative {asym:.2e})")
    return np.fft.ifft(coeffs * coeffs.size).real


def spectral_derivative(f: SampledFunction, p: int) -> SampledFunction:
    """``p``-th derivative (``1 <= p <= 4``) of the trigonometric interpolant of ``f``."""
    if int(p) != p or not 1 <= p <= 4:
        raise ContractViolation(f"derivative order must be 1..4, got {p}")
    return SampledFunction(f.grid, f.grid.derivative(f.values, int(p)))


def elementwise(func: Callable, f: SampledFunction) -> SampledFunction:
    """Apply ``func`` pointwise, raising :class:`DomainError` where it is undefined."""
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        out = np.asarray(func(f.values), dtype=float)
    bad = ~np.isfinite(out)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise DomainError(
            f"map undefined at index {i} (value {f.values[i]!r})", index=i, value=float(f.values[i])
        )
    return SampledFunction(f.grid, out)


def trig_interpolate(f: SampledFunction, x) -> np.ndarray:
    """Evaluate the trigonometric interpolant of ``f`` at arbitrary points ``x``.

    The Nyquist mode is split symmetrically so the interpolant is real.
    Cost is ``O(len(x) * grid.size)``.
    """
    grid = f.grid
    x = np.atleast_1d(np.asarray(x, dtype=float))
    coeffs = forward_transform(f.values)
    k = grid.wavenumbers.astype(float)
    phase = np.pi * (x[:, None] + grid.half_width) / grid.half_width
    half = grid.size // 2
    weights = coeffs.copy()
    nyq = weights[half]
    weights[half] = 0.0
    out = (np.exp(1j * phase * k[None, :]) @ weights).real
    out += (nyq * np.cos(half * phase[:, 0])).real
    return out
