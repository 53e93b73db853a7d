"""Littlewood-Paley projections, Besov norms and frequency envelopes.

Band ``j`` is the multiplier ``psi(2^-j xi) = phi(2^-(j+1) xi) - phi(2^-j xi)``
and the low-pass ``P_<j`` is ``phi(2^-j xi)``, so that

    lp_low(f, j0) + sum_{j0 <= j <= j_max} lp_project(f, j) == f

holds exactly on the lattice.  ``phi`` switches off over ``1 <= |xi| <= 3/2``;
each band is therefore supported in ``2^j < |xi| < 3 * 2^j`` and equals one
on the plateau ``1.5 * 2^j <= |xi| <= 2^(j+1)``.
"""
from __future__ import annotations

from dataclasses import dataclass
import logging
import math

import numpy as np

from .grid import ComplexField, GridSpec, apply_multiplier, fft2, ifft2, lp_norm

log = logging.getLogger(__name__)

PHI_EDGE = 1.5   # phi == 0 for |xi| >= PHI_EDGE
TAIL_WARN = 1e-10


def _smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


@dataclass(frozen=True)
class BumpProfile:
    """Radial cutoff ``phi``: 1 on ``r <= 1``, 0 on ``r >= edge``."""

    edge: float = PHI_EDGE

    def __post_init__(self):
        if not 1.0 < self.edge <= 2.0:
            raise ValueError("phi must switch off inside (1, 2]")

    def phi(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return _smooth_step((self.edge - r) / (self.edge - 1.0))

    def psi(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return self.phi(r / 2.0) - self.phi(r)

    @property
    def plateau(self) -> tuple[float, float]:
        """Interval of |xi| on which psi == 1 (band 0)."""
        return self.edge, 2.0

    def orthogonality_floor(self, samples: int = 20001) -> float:
        """inf over |xi| of sum_j psi(2^-j xi)^2, by brute force over one octave."""
        r = np.linspace(1.0, 2.0, samples)
        total = sum(self.psi(r * 2.0 ** -j) ** 2 for j in range(-3, 4))
        return float(total.min())


DEFAULT_PROFILE = BumpProfile()


@dataclass(frozen=True)
class DyadicRange:
    j_min: int
    j_max: int

    def __post_init__(self):
        if self.j_min > self.j_max:
            raise ValueError("empty dyadic range")

    @property
    def bands(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def check(self, j: int) -> None:
        if not (self.j_min <= j <= self.j_max):
            raise ValueError(f"band {j} outside representable range [{self.j_min}, {self.j_max}]")


def dyadic_range(grid: GridSpec) -> DyadicRange:
    """Bands needed to tile every lattice frequency.

    ``j_min`` is the largest band whose low-pass sees only ``xi = 0``;
    ``j_max`` is the smallest band with ``2^j_max >= max |xi|`` on the lattice
    (the square's corner), so ``lp_low(f, j_max) == f``.
    """
    k0 = 2 * np.pi / grid.length
    kmax = float(grid.kabs.max())
    j_min = math.floor(math.log2(k0 / DEFAULT_PROFILE.edge) + 1e-12)
    j_max = math.ceil(math.log2(kmax))
    return DyadicRange(j_min, j_max)


@dataclass(frozen=True)
class BesovParams:
    """Smoothness ``s``, band summation exponent ``p`` and spatial exponent ``q``:
    ``(sum_j 2^{jps} ||P_j f||_{L^q}^p)^{1/p}``."""

    s: float
    p: float
    q: float

    def __post_init__(self):
        for name in ("p", "q"):
            v = getattr(self, name)
            if not (v >= 1 or np.isinf(v)):
                raise ValueError(f"{name} must lie in [1, inf], got {v}")


@dataclass(frozen=True)
class Envelope:
    delta: float
    sigma: int
    bands: tuple[int, ...]
    values: np.ndarray

    def value(self, k: int) -> float:
        return float(self.values[self.bands.index(k)])

    def max_violation(self) -> float:
        """max over k, l of v_k - 2^{delta |k-l|} v_l (<= 0 for an envelope)."""
        b = np.asarray(self.bands, dtype=float)
        v = np.asarray(self.values, dtype=float)
        slack = 2.0 ** (self.delta * np.abs(b[:, None] - b[None, :]))
        return float(np.max(v[:, None] - slack * v[None, :]))


# ---------------------------------------------------------------------------
# Multipliers


def band_symbol(grid: GridSpec, j: int, profile: BumpProfile = DEFAULT_PROFILE) -> np.ndarray:
    return profile.psi(grid.kabs * 2.0 ** -j)


def low_symbol(grid: GridSpec, j: int, profile: BumpProfile = DEFAULT_PROFILE) -> np.ndarray:
    return profile.phi(grid.kabs * 2.0 ** -j)


def project_array(grid: GridSpec, values: np.ndarray, j: int) -> np.ndarray:
    out = apply_multiplier(values, band_symbol(grid, j))
    return out if np.iscomplexobj(values) else out.real


def band_decomposition(grid: GridSpec, values: np.ndarray, bands=None) -> dict[int, np.ndarray]:
    """All band projections from one forward transform."""
    bands = dyadic_range(grid).bands if bands is None else bands
    hat = fft2(values)
    real = not np.iscomplexobj(values)
    out = {}
    for j in bands:
        pj = ifft2(hat * band_symbol(grid, j))
        out[j] = pj.real if real else pj
    return out


def band_norms_array(grid: GridSpec, values: np.ndarray, q: float = 2, bands=None) -> dict[int, float]:
    """``||P_j f||_{L^q}`` per band; stacked components are combined pointwise."""
    return {j: lp_norm(grid, pj, q) for j, pj in band_decomposition(grid, values, bands).items()}


def lp_project(f: ComplexField, j: int) -> ComplexField:
    dyadic_range(f.grid).check(j)
    return ComplexField(f.grid, project_array(f.grid, f.values, j))


def lp_low(f: ComplexField, j: int) -> ComplexField:
    dyadic_range(f.grid).check(j)
    return ComplexField(f.grid, apply_multiplier(f.values, low_symbol(f.grid, j)))


def tail_fraction(grid: GridSpec, values: np.ndarray, rng: DyadicRange) -> float:
    """Fraction of L^2 mass that no band in ``rng`` sees (the low-pass below
    ``j_min`` plus anything above ``j_max``)."""
    hat = fft2(values)
    weight = np.abs(hat) ** 2
    if weight.ndim > 2:
        weight = weight.reshape(-1, grid.n, grid.n).sum(axis=0)
    covered = sum(band_symbol(grid, j) for j in rng.bands)
    total = weight.sum()
    if total == 0:
        return 0.0
    return float(np.sum(weight * (1 - covered) ** 2) / total)


def besov_from_band_norms(norms: dict[int, float], params: BesovParams) -> float:
    terms = np.array([2.0 ** (j * params.s) * v for j, v in norms.items()])
    if terms.size == 0:
        return 0.0
    if np.isinf(params.p):
        return float(terms.max())
    return float(np.sum(terms ** params.p) ** (1.0 / params.p))


def besov_norm_array(grid: GridSpec, values: np.ndarray, params: BesovParams,
                     rng: DyadicRange | None = None) -> float:
    rng = dyadic_range(grid) if rng is None else rng
    tail = tail_fraction(grid, values, rng)
    if tail > TAIL_WARN:
        log.warning("%.3g of the L2 mass lies outside bands %d..%d", tail, rng.j_min, rng.j_max)
    return besov_from_band_norms(band_norms_array(grid, values, params.q, rng.bands), params)


def besov_norm(f: ComplexField, params: BesovParams, rng: DyadicRange | None = None) -> float:
    return besov_norm_array(f.grid, f.values, params, rng)


def frequency_envelope(band_norms, delta: float = 0.25, sigma: int = 0, bands=None) -> Envelope:
    """``v_k = sup_j 2^{-delta |k-j|} 2^{j sigma} band_norms[j]``.

    ``band_norms`` is a mapping band -> value, or a sequence paired with
    ``bands`` (default ``0, 1, ...``).
    """
    if delta <= 0:
        raise ValueError("envelope slack delta must be positive")
    if isinstance(band_norms, dict):
        bands = tuple(sorted(band_norms))
        vals = np.array([band_norms[j] for j in bands], dtype=float)
    else:
        vals = np.asarray(band_norms, dtype=float)
        bands = tuple(range(len(vals))) if bands is None else tuple(int(b) for b in bands)
        if len(bands) != len(vals):
            raise ValueError("bands and band_norms differ in length")
    b = np.asarray(bands, dtype=float)
    weighted = 2.0 ** (sigma * b) * vals
    decay = 2.0 ** (-delta * np.abs(b[:, None] - b[None, :]))
    env = np.max(decay * weighted[None, :], axis=1) if len(b) else np.zeros(0)
    return Envelope(delta=float(delta), sigma=int(sigma), bands=bands, values=env)


def bernstein_ratio(f: ComplexField, j: int, leak_tol: float = 1e-10) -> float:
    """``||f||_{L^4} / (2^{j/2} ||f||_{L^2})`` for ``f`` band-limited to band ``j``."""
    l2 = f.norm(2)
    if l2 == 0:
        raise ValueError("bernstein ratio of the zero field is undefined")
    hat = fft2(f.values)
    outside = (f.grid.kabs <= 2.0 ** j) | (f.grid.kabs >= 2 * PHI_EDGE * 2.0 ** j)
    leak = np.sum(np.abs(hat[outside]) ** 2) / np.sum(np.abs(hat) ** 2)
    if leak > leak_tol:
        raise ValueError(f"field is not band-limited to band {j} (leak {leak:.2e})")
    return f.norm(4) / (2.0 ** (j / 2) * l2)
