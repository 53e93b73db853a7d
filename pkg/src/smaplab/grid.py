"""Periodic square grid, spectral operators and exact linear propagators.

The torus ``[0, L)^2`` stands in for the plane.  All L^p norms are Riemann
sums (``sum * spacing**2``) so that refinement converges to continuum values.
The Schrodinger sign convention is ``i u_t + Lap u = 0``, i.e. the Fourier
multiplier ``exp(-i t |xi|^2)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
import struct

import numpy as np
import scipy.fft as sfft


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """``n`` sites per side on a periodic square of side ``length``."""

    n: int
    length: float

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or not _is_power_of_two(int(self.n)):
            raise ValueError(f"grid size must be a power of two, got {self.n!r}")
        if self.n < 16:
            raise ValueError(f"grid size must be at least 16, got {self.n}")
        if not np.isfinite(self.length) or self.length <= 0:
            raise ValueError(f"grid length must be positive, got {self.length!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "length", float(self.length))

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def cell_area(self) -> float:
        return self.spacing ** 2

    @cached_property
    def x(self) -> np.ndarray:
        """1D site coordinates, centred on the origin: ``[-L/2, L/2)``."""
        return (np.arange(self.n) - self.n // 2) * self.spacing

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """(x1, x2) coordinate arrays, axis 0 is x1."""
        return np.meshgrid(self.x, self.x, indexing="ij")

    @cached_property
    def k1d(self) -> np.ndarray:
        """Wavenumbers in FFT order, (2 pi / L) * {-n/2, ..., n/2 - 1}."""
        return 2 * np.pi * sfft.fftfreq(self.n, d=self.spacing)

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.k1d, self.k1d, indexing="ij")

    @cached_property
    def ksq(self) -> np.ndarray:
        k1, k2 = self.wavenumbers
        return k1 ** 2 + k2 ** 2

    @cached_property
    def kabs(self) -> np.ndarray:
        return np.sqrt(self.ksq)

    @property
    def k_nyquist(self) -> float:
        return np.pi / self.spacing

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """True away from the Nyquist row/column."""
        k = np.abs(sfft.fftfreq(self.n) * self.n) != self.n // 2
        return np.outer(k, k)

    @cached_property
    def derivative_symbols(self) -> tuple[np.ndarray, np.ndarray]:
        """``i xi_m`` with the Nyquist modes zeroed (odd multipliers)."""
        k1, k2 = self.wavenumbers
        mask = self.nyquist_mask
        return 1j * k1 * mask, 1j * k2 * mask

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule truncation mask (square, per axis)."""
        keep = np.abs(sfft.fftfreq(self.n) * self.n) < self.n / 3
        return np.outer(keep, keep)

    def origin_index(self) -> tuple[int, int]:
        return self.n // 2, self.n // 2


def make_grid(n: int, length: float) -> GridSpec:
    return GridSpec(n, length)


# ---------------------------------------------------------------------------
# Fields


def _frozen(values: np.ndarray) -> np.ndarray:
    values = np.array(values, copy=True)
    values.setflags(write=False)
    return values


@dataclass(frozen=True)
class ComplexField:
    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"expected shape {(self.grid.n,) * 2}, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field contains non-finite samples")
        object.__setattr__(self, "values", _frozen(values))

    def norm(self, q: float = 2) -> float:
        return lp_norm(self.grid, self.values, q)

    def __add__(self, other: "ComplexField") -> "ComplexField":
        _check_same_grid(self.grid, other.grid)
        return ComplexField(self.grid, self.values + other.values)

    def __sub__(self, other: "ComplexField") -> "ComplexField":
        _check_same_grid(self.grid, other.grid)
        return ComplexField(self.grid, self.values - other.values)

    def scale(self, c: complex) -> "ComplexField":
        return ComplexField(self.grid, c * self.values)


@dataclass(frozen=True)
class RealField:
    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values)
        if np.iscomplexobj(values):
            if np.max(np.abs(values.imag), initial=0.0) > 1e-10 * max(1.0, np.max(np.abs(values))):
                raise ValueError("RealField given values with a non-negligible imaginary part")
            values = values.real
        values = values.astype(float)
        if values.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"expected shape {(self.grid.n,) * 2}, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field contains non-finite samples")
        object.__setattr__(self, "values", _frozen(values))

    def norm(self, q: float = 2) -> float:
        return lp_norm(self.grid, self.values, q)


def _check_same_grid(a: GridSpec, b: GridSpec) -> None:
    if a != b:
        raise ValueError(f"fields live on different grids: {a} vs {b}")


def lp_norm(grid: GridSpec, values: np.ndarray, q: float = 2) -> float:
    """Discrete L^q norm of a scalar field or of the pointwise Euclidean norm
    of a stacked vector field (leading axes are components)."""
    mag = np.abs(values)
    if mag.ndim > 2:
        mag = np.sqrt(np.sum(mag.reshape(-1, grid.n, grid.n) ** 2, axis=0))
    if np.isinf(q):
        return float(np.max(mag))
    return float((np.sum(mag ** q) * grid.cell_area) ** (1.0 / q))


def inner(grid: GridSpec, f: np.ndarray, g: np.ndarray) -> complex:
    """``int f conj(g) dx``."""
    return complex(np.sum(f * np.conj(g)) * grid.cell_area)


# ---------------------------------------------------------------------------
# Transforms and multipliers (array level; leading axes are batched)


def fft2(values: np.ndarray) -> np.ndarray:
    return sfft.fft2(values, axes=(-2, -1))


def ifft2(values: np.ndarray) -> np.ndarray:
    return sfft.ifft2(values, axes=(-2, -1))


def apply_multiplier(values: np.ndarray, symbol: np.ndarray) -> np.ndarray:
    return ifft2(fft2(values) * symbol)


def spectral_gradient(grid: GridSpec, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Spectral (d/dx1, d/dx2); real input gives real output."""
    d1, d2 = grid.derivative_symbols
    hat = fft2(values)
    g1, g2 = ifft2(hat * d1), ifft2(hat * d2)
    if not np.iscomplexobj(values):
        g1, g2 = g1.real, g2.real
    return g1, g2


def spectral_derivative(grid: GridSpec, values: np.ndarray, axis: int) -> np.ndarray:
    if axis not in (1, 2):
        raise ValueError("axis must be 1 or 2")
    out = apply_multiplier(values, grid.derivative_symbols[axis - 1])
    return out if np.iscomplexobj(values) else out.real


def spectral_laplacian(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    out = apply_multiplier(values, -grid.ksq)
    return out if np.iscomplexobj(values) else out.real


# ---------------------------------------------------------------------------
# Field-level operations


def fourier_multiplier(f: ComplexField, m) -> ComplexField:
    """``F^{-1}(m(xi) F f)``; ``m`` is an array on the lattice or a callable
    ``m(k1, k2)``."""
    k1, k2 = f.grid.wavenumbers
    symbol = m(k1, k2) if callable(m) else m
    symbol = np.broadcast_to(np.asarray(symbol), k1.shape)
    if not np.all(np.isfinite(symbol)):
        raise ValueError("multiplier has non-finite values")
    return ComplexField(f.grid, apply_multiplier(f.values, symbol))


def laplacian(f: ComplexField) -> ComplexField:
    return ComplexField(f.grid, spectral_laplacian(f.grid, f.values))


def schrodinger_symbol(grid: GridSpec, t: float) -> np.ndarray:
    return np.exp(-1j * t * grid.ksq)


def free_schrodinger(f: ComplexField, t: float) -> ComplexField:
    """Exact free flow ``e^{it Lap} f`` (multiplier ``e^{-it|xi|^2}``)."""
    if t == 0:
        return f
    return ComplexField(f.grid, apply_multiplier(f.values, schrodinger_symbol(f.grid, t)))


def heat_semigroup(f: ComplexField, s: float) -> ComplexField:
    if s < 0:
        raise ValueError(f"heat time must be nonnegative, got {s}")
    if s == 0:
        return f
    return ComplexField(f.grid, apply_multiplier(f.values, np.exp(-s * f.grid.ksq)))


# ---------------------------------------------------------------------------
# Snapshot files
#
# Layout (little endian):
#   8 bytes   magic b"SMLFLD01"
#   int64     n
#   float64   length
#   int64     number of components c
#   c*n*n     complex128 samples, component-major then row-major (x1 slow)

_MAGIC = b"SMLFLD01"
_HEADER = struct.Struct("<8sqdq")


def write_snapshot(path, grid: GridSpec, components) -> None:
    data = np.asarray(components, dtype="<c16")
    if data.ndim == 2:
        data = data[None]
    if data.shape[1:] != (grid.n, grid.n):
        raise ValueError("snapshot components do not match the grid")
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, grid.n, grid.length, data.shape[0]))
        fh.write(np.ascontiguousarray(data).tobytes())
    tmp.replace(path)


def read_snapshot(path) -> tuple[GridSpec, np.ndarray]:
    """Returns the grid and a (components, n, n) complex array."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated snapshot header")
    magic, n, length, ncomp = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ValueError(f"{path}: not a field snapshot (bad magic {magic!r})")
    grid = GridSpec(int(n), float(length))
    expected = _HEADER.size + ncomp * n * n * 16
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    data = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size).reshape(ncomp, n, n)
    return grid, data.astype(complex)
