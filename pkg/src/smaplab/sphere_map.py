"""Schrodinger maps into S^2: ``u_t = u x Lap u``, the Dirichlet energy and
derivative fields in a moving tangent frame.

Frame orientation: ``w = z x v``.  The complex structure ``J = z x`` then
acts as multiplication by ``i`` on frame coordinates, which is what makes
``psi_t = i sum_l D_l psi_l`` hold with ``D = d + iA``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import (ComplexField, GridSpec, RealField, lp_norm,
                   spectral_gradient, spectral_laplacian)

NORTH = np.array([0.0, 0.0, 1.0])
SPHERE_TOL = 1e-12
RHS_SPHERE_TOL = 1e-8
FRAME_TOL = 1e-8


def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("i...,i...->...", a, b)


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.cross(a, b, axis=0)


def _normalize(u: np.ndarray) -> np.ndarray:
    return u / np.sqrt(_dot(u, u))


def sphere_defect(u: np.ndarray) -> float:
    return float(np.max(np.abs(np.sqrt(_dot(u, u)) - 1.0)))


@dataclass(frozen=True)
class SphereField:
    """Unit 3-vector per site; ``u`` has shape ``(3, n, n)``."""

    grid: GridSpec
    u: np.ndarray = field(repr=False)

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        if u.shape != (3, self.grid.n, self.grid.n):
            raise ValueError(f"expected shape {(3, self.grid.n, self.grid.n)}, got {u.shape}")
        if not np.all(np.isfinite(u)):
            raise ValueError("sphere field contains non-finite samples")
        d = sphere_defect(u)
        if d > SPHERE_TOL:
            raise ValueError(f"field is off the sphere by {d:.3e}")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)

    @classmethod
    def project(cls, grid: GridSpec, u: np.ndarray) -> "SphereField":
        """Build from arbitrary nonzero vectors by normalizing."""
        return cls(grid, _normalize(np.asarray(u, dtype=float)))

    @classmethod
    def constant(cls, grid: GridSpec, q=NORTH) -> "SphereField":
        q = np.asarray(q, dtype=float)
        q = q / np.linalg.norm(q)
        return cls(grid, np.broadcast_to(q[:, None, None], (3, grid.n, grid.n)))


def _as_array(u, tol: float) -> tuple[GridSpec | None, np.ndarray]:
    if isinstance(u, SphereField):
        return u.grid, u.u
    arr = np.asarray(u, dtype=float)
    d = sphere_defect(arr)
    if d > tol:
        raise ValueError(f"input is off the sphere by {d:.3e} (tolerance {tol:.0e})")
    return None, arr


def _rhs(grid: GridSpec, u: np.ndarray) -> np.ndarray:
    return _cross(u, spectral_laplacian(grid, u))


def smap_rhs(u, grid: GridSpec | None = None) -> np.ndarray:
    """``u x Lap u``; accepts a SphereField or a ``(3, n, n)`` array plus grid."""
    g, arr = _as_array(u, RHS_SPHERE_TOL)
    grid = g or grid
    if grid is None:
        raise ValueError("grid required for array input")
    return _rhs(grid, arr)


def _rk4(f, u: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(u)
    k2 = f(u + 0.5 * dt * k1)
    k3 = f(u + 0.5 * dt * k2)
    k4 = f(u + dt * k3)
    return u + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def smap_step_raw(grid: GridSpec, u: np.ndarray, dt: float) -> tuple[np.ndarray, float]:
    """RK4 step then renormalize; returns the new array and the
    renormalization displacement ``max | |u| - 1 |`` before projection."""
    nxt = _rk4(lambda x: _rhs(grid, x), u, dt)
    if not np.all(np.isfinite(nxt)):
        raise FloatingPointError("Schrodinger map step produced non-finite values")
    return _normalize(nxt), sphere_defect(nxt)


def smap_step(u: SphereField, dt: float) -> SphereField:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    nxt, _ = smap_step_raw(u.grid, u.u, dt)
    return SphereField(u.grid, nxt)


@dataclass(frozen=True)
class SmapConfig:
    dt: float
    t_end: float
    sample_every: int = 1
    q: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
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
class SmapTrajectory:
    times: np.ndarray
    states: list = field(repr=False)
    energy: np.ndarray
    sup_dist: np.ndarray
    max_renorm_defect: float

    @property
    def grid(self) -> GridSpec:
        return self.states[0].grid

    def __len__(self) -> int:
        return len(self.states)


def smap_evolve(u0: SphereField, cfg: SmapConfig) -> SmapTrajectory:
    grid, u = u0.grid, u0.u
    q = np.asarray(cfg.q, dtype=float)
    times, states, worst = [0.0], [u0], 0.0
    for n in range(1, cfg.n_steps + 1):
        u, d = smap_step_raw(grid, u, cfg.dt)
        worst = max(worst, d)
        if n % cfg.sample_every == 0 or n == cfg.n_steps:
            times.append(n * cfg.dt)
            states.append(SphereField(grid, u))
    return SmapTrajectory(
        times=np.array(times), states=states,
        energy=np.array([energy_map(s) for s in states]),
        sup_dist=np.array([sup_distance_to_Q(s, q) for s in states]),
        max_renorm_defect=worst)


def energy_density(grid: GridSpec, u: np.ndarray) -> np.ndarray:
    g1, g2 = spectral_gradient(grid, u)
    return np.sum(g1 ** 2 + g2 ** 2, axis=0)


def energy_map(u: SphereField) -> float:
    """``int |d1 u|^2 + |d2 u|^2`` as a Riemann sum."""
    return float(np.sum(energy_density(u.grid, u.u)) * u.grid.cell_area)


def sup_distance_to_Q(u: SphereField, q=NORTH) -> float:
    q = np.asarray(q, dtype=float)
    return float(np.max(np.sqrt(np.sum((u.u - q[:, None, None]) ** 2, axis=0))))


def exp_map(q, h: np.ndarray) -> np.ndarray:
    """Pointwise sphere exponential at ``q`` of a tangent field ``h``
    (shape ``(3, n, n)``, orthogonal to ``q``)."""
    q = np.asarray(q, dtype=float)[:, None, None]
    r = np.sqrt(_dot(h, h))
    with np.errstate(invalid="ignore", divide="ignore"):
        sinc = np.where(r > 1e-300, np.sin(r) / np.where(r > 0, r, 1.0), 1.0)
    return np.cos(r) * q + sinc * h


def exp_Q(grid: GridSpec, h1: np.ndarray, h2: np.ndarray, q=NORTH) -> SphereField:
    """Map ``exp_q(h1 e1 + h2 e2)`` for the orthonormal tangent pair
    ``e1, e2`` at ``q`` returned by :func:`tangent_basis`."""
    e1, e2 = tangent_basis(q)
    h = e1[:, None, None] * np.asarray(h1) + e2[:, None, None] * np.asarray(h2)
    return SphereField.project(grid, exp_map(q, h))


def tangent_basis(q=NORTH) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal pair ``(e1, e2)`` at ``q`` with ``e2 = q x e1``."""
    q = np.asarray(q, dtype=float)
    q = q / np.linalg.norm(q)
    seed = np.array([1.0, 0.0, 0.0]) if abs(q[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = seed - np.dot(seed, q) * q
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(q, e1)


# ---------------------------------------------------------------------------
# Frames and derivative fields


@dataclass(frozen=True)
class TangentFrame:
    """Orthonormal tangent pair along ``z`` with ``w = z x v``."""

    v: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)

    @classmethod
    def from_v(cls, z: np.ndarray, v: np.ndarray) -> "TangentFrame":
        v = v - _dot(v, z) * z
        v = _normalize(v)
        return cls(v, _cross(z, v))

    def defect(self, z: np.ndarray) -> float:
        """Largest deviation from orthonormality, tangency and orientation."""
        return float(max(
            np.max(np.abs(_dot(self.v, self.v) - 1)),
            np.max(np.abs(_dot(self.v, z))),
            np.max(np.abs(self.w - _cross(z, self.v))),
        ))

    def rotate(self, theta: np.ndarray) -> "TangentFrame":
        """``(v, w) -> (cos v + sin w, cos w - sin v)``; in frame
        coordinates ``psi -> e^{-i theta} psi`` and ``A -> A + d theta``."""
        c, s = np.cos(theta), np.sin(theta)
        return TangentFrame(c * self.v + s * self.w, c * self.w - s * self.v)


@dataclass
class GaugeData:
    psi1: ComplexField
    psi2: ComplexField
    a1: RealField
    a2: RealField
    psit: ComplexField | None = None
    at: RealField | None = None

    @property
    def psi(self) -> tuple[np.ndarray, np.ndarray]:
        return self.psi1.values, self.psi2.values

    @property
    def a(self) -> tuple[np.ndarray, np.ndarray]:
        return self.a1.values, self.a2.values

    def energy(self) -> float:
        g = self.psi1.grid
        return lp_norm(g, self.psi1.values) ** 2 + lp_norm(g, self.psi2.values) ** 2


def frame_coordinates(frame: TangentFrame, vec: np.ndarray) -> np.ndarray:
    """Complex coordinate ``v.vec + i w.vec`` of a tangent vector field."""
    return _dot(frame.v, vec) + 1j * _dot(frame.w, vec)


def _check_frame(frame: TangentFrame, z: np.ndarray) -> None:
    d = frame.defect(z)
    if d > FRAME_TOL:
        raise ValueError(f"frame is not an oriented orthonormal tangent frame (defect {d:.2e})")


def derivative_fields(u: SphereField, frame: TangentFrame) -> GaugeData:
    """``psi_m = v.d_m u + i w.d_m u`` and ``A_m = w.d_m v``."""
    _check_frame(frame, u.u)
    grid = u.grid
    du = spectral_gradient(grid, u.u)
    dv = spectral_gradient(grid, frame.v)
    psi = [ComplexField(grid, frame_coordinates(frame, d)) for d in du]
    a = [RealField(grid, _dot(frame.w, d)) for d in dv]
    return GaugeData(psi[0], psi[1], a[0], a[1])
