"""Initial-data generators: Gaussians, packets, seeded band-limited noise and
envelope-shaped tangent data for maps near the north pole."""
from __future__ import annotations

import numpy as np

from .grid import ComplexField, GridSpec, apply_multiplier, fft2, ifft2, lp_norm
from .littlewood_paley import band_symbol, dyadic_range
from .sphere_map import NORTH, SphereField, exp_Q

ENVELOPE_PROFILES = ("bump", "flat", "single")
_BAND_OFFSET = 1 << 16  # spawn keys must be nonnegative


def gaussian(grid: GridSpec, center=(0.0, 0.0), width: float = 1.0, amplitude: complex = 1.0,
             momentum=(0.0, 0.0)) -> ComplexField:
    """``a exp(-|x-c|^2 / (2 width^2) + i p.x)``, periodized from the centred box."""
    if width <= 0:
        raise ValueError("width must be positive")
    x1, x2 = grid.mesh
    d1 = _wrap(x1 - center[0], grid.length)
    d2 = _wrap(x2 - center[1], grid.length)
    env = np.exp(-(d1 ** 2 + d2 ** 2) / (2 * width ** 2))
    return ComplexField(grid, amplitude * env * np.exp(1j * (momentum[0] * x1 + momentum[1] * x2)))


def _wrap(d: np.ndarray, length: float) -> np.ndarray:
    return (d + length / 2) % length - length / 2


def gaussian_free_exact(grid: GridSpec, t: float, width: float = 1.0, amplitude: float = 1.0) -> np.ndarray:
    """Closed-form free evolution of a centred Gaussian on the plane."""
    x1, x2 = grid.mesh
    s2 = width ** 2
    z = s2 + 2j * t
    return amplitude * (s2 / z) * np.exp(-(x1 ** 2 + x2 ** 2) / (2 * z))


def _generator(seed: int, band: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(band) + _BAND_OFFSET,))
    return np.random.Generator(np.random.Philox(ss))


def random_band_field(grid: GridSpec, j: int, seed: int, l2: float = 1.0, real: bool = False) -> np.ndarray:
    """Band-``j`` noise with prescribed ``L^2`` norm.

    Draws white noise from a Philox stream keyed by ``(seed, band)``, so each
    band's draw is independent of which other bands are requested.
    """
    rng = _generator(seed, j)
    noise = rng.standard_normal((grid.n, grid.n))
    if not real:
        noise = noise + 1j * rng.standard_normal((grid.n, grid.n))
    f = apply_multiplier(noise, band_symbol(grid, j))
    if real:
        f = f.real
    norm = lp_norm(grid, f)
    if norm == 0:
        raise ValueError(f"band {j} holds no lattice modes on this grid")
    return f * (l2 / norm)


def envelope_weights(profile: str, bands, center: int | None = None, delta: float = 0.5) -> dict[int, float]:
    """Per-band relative sizes with max 1."""
    bands = list(bands)
    if profile not in ENVELOPE_PROFILES:
        raise ValueError(f"unknown envelope profile {profile!r}; expected one of {ENVELOPE_PROFILES}")
    c = bands[len(bands) // 2] if center is None else center
    if profile == "flat":
        return {j: 1.0 for j in bands}
    if profile == "single":
        return {j: (1.0 if j == c else 0.0) for j in bands}
    return {j: 2.0 ** (-delta * abs(j - c)) for j in bands}


def tangent_from_envelope(grid: GridSpec, eps: float, profile: str = "bump", seed: int = 0,
                          bands=None, center: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Real tangent components ``(h1, h2)`` with ``2^j ||P_j h||_{L^2} = eps * weight_j``."""
    rng = dyadic_range(grid)
    bands = [j for j in rng.bands if j >= 0 and 2.0 ** j * 3 < grid.k_nyquist * 2 / 3] if bands is None else bands
    weights = envelope_weights(profile, bands, center)
    h = np.zeros((2, grid.n, grid.n))
    for j in bands:
        if weights[j] == 0:
            continue
        target = eps * weights[j] * 2.0 ** (-j)
        for c in range(2):
            # seed stream per component via a shifted seed
            h[c] += random_band_field(grid, j, seed * 2 + c, target / np.sqrt(2), real=True)
    return h[0], h[1]


def envelope_map(grid: GridSpec, eps: float, profile: str = "bump", seed: int = 0, q=NORTH,
                 bands=None) -> SphereField:
    h1, h2 = tangent_from_envelope(grid, eps, profile, seed, bands)
    return exp_Q(grid, h1, h2, q)


def gaussian_bump_map(grid: GridSpec, eps: float, width: float = 1.0, q=NORTH) -> SphereField:
    """``exp_q`` of a smooth Gaussian tangent bump with an asymmetric twist so
    both frame components are populated."""
    x1, x2 = grid.mesh
    g = np.exp(-(x1 ** 2 + x2 ** 2) / (2 * width ** 2))
    return exp_Q(grid, eps * g, 0.5 * eps * (x1 / width) * g, q)


def band_packet(grid: GridSpec, j: int, freq: float, direction: float, width: float,
                center=(0.0, 0.0), phase: float = 0.0) -> np.ndarray:
    """``P_j`` of a modulated Gaussian with wavevector ``freq (cos, sin)(direction)``."""
    p = (freq * np.cos(direction), freq * np.sin(direction))
    f = gaussian(grid, center, width, np.exp(1j * phase), p).values
    return ifft2(fft2(f) * band_symbol(grid, j))
