"""Strang split-step solver for ``i u_t + Lap u = mu |u|^2 u`` and its
scattering diagnostics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import (ComplexField, GridSpec, apply_multiplier, fft2, ifft2,
                   lp_norm, schrodinger_symbol, spectral_gradient)
from .littlewood_paley import band_norms_array


class BlowUpError(RuntimeError):
    """Raised when the solution stops being finite."""

    def __init__(self, message: str, t: float):
        super().__init__(message)
        self.t = t


@dataclass(frozen=True)
class NlsConfig:
    mu: int
    dt: float
    t_end: float
    grid: GridSpec
    sample_every: int = 1
    dealias: bool = True

    def __post_init__(self):
        if self.mu not in (1, -1):
            raise ValueError(f"mu must be +1 or -1, got {self.mu}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be nonnegative, got {self.t_end}")
        if self.sample_every < 1:
            raise ValueError("sample_every must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass
class Trajectory:
    times: np.ndarray
    states: list = field(repr=False)
    mass: np.ndarray | None = None
    hamiltonian: np.ndarray | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.times) != len(self.states):
            raise ValueError("times and states differ in length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        grids = {s.grid for s in self.states}
        if len(grids) > 1:
            raise ValueError("trajectory states live on different grids")

    @property
    def grid(self) -> GridSpec:
        return self.states[0].grid

    def __len__(self) -> int:
        return len(self.states)


def mass(grid: GridSpec, u: np.ndarray) -> float:
    return lp_norm(grid, u, 2) ** 2


def hamiltonian(grid: GridSpec, u: np.ndarray, mu: int) -> float:
    """``int |grad u|^2 + mu |u|^4 / 2``."""
    g1, g2 = spectral_gradient(grid, u)
    dens = np.abs(g1) ** 2 + np.abs(g2) ** 2 + 0.5 * mu * np.abs(u) ** 4
    return float(np.sum(dens) * grid.cell_area)


class _Stepper:
    """Caches the half-step propagator for repeated steps."""

    def __init__(self, grid: GridSpec, dt: float, mu: int, dealias: bool = True):
        self.dt, self.mu = dt, mu
        self.half = schrodinger_symbol(grid, dt / 2)
        self.mask = grid.dealias_mask if dealias else None

    def __call__(self, u: np.ndarray) -> np.ndarray:
        u = ifft2(fft2(u) * self.half)
        u = u * np.exp(-1j * self.mu * np.abs(u) ** 2 * self.dt)
        hat = fft2(u)
        if self.mask is not None:
            hat = hat * self.mask
        return ifft2(hat * self.half)


def nls_step(u: ComplexField, dt: float, mu: int, dealias: bool = True) -> ComplexField:
    """One Strang step: half free flow, exact nonlinear phase, half free flow."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if mu not in (1, -1):
        raise ValueError(f"mu must be +1 or -1, got {mu}")
    return ComplexField(u.grid, _Stepper(u.grid, dt, mu, dealias)(u.values))


def nls_evolve(u0: ComplexField, cfg: NlsConfig, diagnostics: bool = True) -> Trajectory:
    if u0.grid != cfg.grid:
        raise ValueError("initial data and config use different grids")
    grid = cfg.grid
    step = _Stepper(grid, cfg.dt, cfg.mu, cfg.dealias)
    u = np.array(u0.values)
    times, states = [0.0], [u0]
    for n in range(1, cfg.n_steps + 1):
        u = step(u)
        if n % cfg.sample_every == 0 or n == cfg.n_steps:
            if not np.all(np.isfinite(u)):
                raise BlowUpError(f"non-finite solution at t = {n * cfg.dt:.6g} (mu = {cfg.mu})",
                                  n * cfg.dt)
            times.append(n * cfg.dt)
            states.append(ComplexField(grid, u))
    traj = Trajectory(times, states)
    if diagnostics:
        traj.mass = np.array([mass(grid, s.values) for s in states])
        traj.hamiltonian = np.array([hamiltonian(grid, s.values, cfg.mu) for s in states])
    return traj


def nls_evolve_backward(u0: ComplexField, cfg: NlsConfig) -> Trajectory:
    """Solution on ``[-t_end, 0]`` from ``u(t) = conj(w(-t))`` where ``w`` solves
    the same equation with data ``conj(u0)``; times returned increasing."""
    fwd = nls_evolve(ComplexField(u0.grid, np.conj(u0.values)), cfg, diagnostics=False)
    times = -fwd.times[::-1]
    states = [ComplexField(s.grid, np.conj(s.values)) for s in fwd.states[::-1]]
    return Trajectory(times, states)


def scattering_profile(traj: Trajectory) -> list[ComplexField]:
    """``w(t) = e^{-it Lap} u(t)``."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    return [ComplexField(s.grid, apply_multiplier(s.values, schrodinger_symbol(s.grid, -t)))
            for t, s in zip(traj.times, traj.states)]


def profile_increments(traj: Trajectory, t1: float, t2: float) -> dict[int, float]:
    """``||P_k (w(t2) - w(t1))||_{L^2}`` per band, using the nearest samples."""
    w = scattering_profile(traj)
    i1 = int(np.argmin(np.abs(traj.times - t1)))
    i2 = int(np.argmin(np.abs(traj.times - t2)))
    return band_norms_array(traj.grid, w[i2].values - w[i1].values, 2)


def band_sup_norms(traj: Trajectory) -> dict[int, float]:
    """``sup_t ||P_k u(t)||_{L^2}`` per band."""
    out: dict[int, float] = {}
    for s in traj.states:
        for j, v in band_norms_array(traj.grid, s.values, 2).items():
            out[j] = max(out.get(j, 0.0), v)
    return out
