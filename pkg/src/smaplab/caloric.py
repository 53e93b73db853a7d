"""Harmonic map heat flow into S^2, the caloric frame and gauge diagnostics.

The heat flow ``z_s = Lap z + |grad z|^2 z`` is integrated with ETDRK4 on a
fixed geometric grid in ``s``.  The frame is transported backward from
``s_max`` with the antisymmetric generator ``(z_s z^T - z z_s^T)``, which
forces ``A_s = w . v_s = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import logging

import numpy as np

from .grid import ComplexField, GridSpec, RealField, fft2, ifft2, lp_norm, spectral_gradient
from .littlewood_paley import band_norms_array
from .morawetz import central_derivative_samples
from .sphere_map import (NORTH, RHS_SPHERE_TOL, GaugeData, SphereField, TangentFrame,
                         _as_array, _cross, _dot, _normalize, derivative_fields,
                         energy_density, frame_coordinates, smap_rhs, tangent_basis)

log = logging.getLogger(__name__)

ENERGY_SLACK = 1e-12
MAX_SPLIT_DEPTH = 10
DEGENERATE_PROJECTION = 1e-6


# ---------------------------------------------------------------------------
# Heat flow


def _heat_nonlinear(grid: GridSpec, z: np.ndarray) -> np.ndarray:
    return energy_density(grid, z) * z


def heat_rhs(z, grid: GridSpec | None = None) -> np.ndarray:
    """``Lap z + |grad z|^2 z`` (tangent to the sphere)."""
    g, arr = _as_array(z, RHS_SPHERE_TOL)
    grid = g or grid
    if grid is None:
        raise ValueError("grid required for array input")
    return ifft2(fft2(arr) * -grid.ksq).real + _heat_nonlinear(grid, arr)


def _phi_coefficients(c: np.ndarray, contour_points: int = 32):
    """ETDRK4 weights by the contour-integral average (Kassam & Trefethen)."""
    r = np.exp(1j * np.pi * (np.arange(1, contour_points + 1) - 0.5) / contour_points)
    lr = c[..., None] + r
    e = np.exp(lr)
    half = np.real(np.mean((np.exp(lr / 2) - 1) / lr, axis=-1))
    f1 = np.real(np.mean((-4 - lr + e * (4 - 3 * lr + lr ** 2)) / lr ** 3, axis=-1))
    f2 = np.real(np.mean((2 + lr + e * (lr - 2)) / lr ** 3, axis=-1))
    f3 = np.real(np.mean((-4 - 3 * lr - lr ** 2 + e * (4 - lr)) / lr ** 3, axis=-1))
    return half, f1, f2, f3


_COEFF_CACHE: dict[tuple, tuple] = {}
_COEFF_CACHE_MAX = 4096


class _Etdrk4:
    def __init__(self, grid: GridSpec):
        self.grid = grid
        self._uniq, self._inv = np.unique(grid.ksq, return_inverse=True)

    def coefficients(self, h: float):
        key = (self.grid.n, self.grid.length, float(h))
        if key not in _COEFF_CACHE:
            if len(_COEFF_CACHE) >= _COEFF_CACHE_MAX:
                _COEFF_CACHE.clear()
            c = -h * self._uniq
            half, f1, f2, f3 = _phi_coefficients(c)
            shape = self.grid.ksq.shape
            full = lambda x: x[self._inv].reshape(shape)
            _COEFF_CACHE[key] = tuple(full(x) for x in (np.exp(c), np.exp(c / 2), h * half,
                                                        h * f1, h * f2, h * f3))
        return _COEFF_CACHE[key]

    def step(self, z: np.ndarray, h: float) -> np.ndarray:
        grid = self.grid
        e, e2, q, f1, f2, f3 = self.coefficients(h)
        nl = lambda x: fft2(_heat_nonlinear(grid, x))
        zh = fft2(z)
        nz = nl(z)
        a = ifft2(e2 * zh + q * nz).real
        na = nl(a)
        b = ifft2(e2 * zh + q * na).real
        nb = nl(b)
        c = ifft2(e2 * fft2(a) + q * (2 * nb - nz)).real
        nc = nl(c)
        out = ifft2(e * zh + f1 * nz + 2 * f2 * (na + nb) + f3 * nc).real
        return _normalize(out)


@dataclass(frozen=True)
class HeatConfig:
    h0: float = 1e-3
    ratio: float = 1.1
    tol_q: float = 1e-6
    s_cap: float = 1e5

    def __post_init__(self):
        if not self.h0 > 0:
            raise ValueError("h0 must be positive")
        if not self.ratio >= 1:
            raise ValueError("ratio must be >= 1")
        if not self.tol_q > 0:
            raise ValueError("tol_q must be positive")

    def grid_until(self, s_max: float) -> np.ndarray:
        """Geometric nodes ``0, h0, h0 + h0 r, ...`` ending exactly at ``s_max``."""
        nodes, h = [0.0], self.h0
        while nodes[-1] + h < s_max * (1 - 1e-12):
            nodes.append(nodes[-1] + h)
            h *= self.ratio
        nodes.append(float(s_max))
        return np.array(nodes)


@dataclass
class HeatTrajectory:
    grid: GridSpec
    s_grid: np.ndarray
    z: list = field(repr=False)
    energy: np.ndarray
    terminal_dist: float
    rejected_steps: int = 0

    @property
    def s_max(self) -> float:
        return float(self.s_grid[-1])

    def sphere(self, i: int) -> SphereField:
        return SphereField(self.grid, self.z[i])


def dist_to_constant(z: np.ndarray) -> float:
    """``sup_x |z(x) - mean(z)|``."""
    m = z.mean(axis=(1, 2))
    return float(np.max(np.sqrt(np.sum((z - m[:, None, None]) ** 2, axis=0))))


def _energy(grid: GridSpec, z: np.ndarray) -> float:
    return float(np.sum(energy_density(grid, z)) * grid.cell_area)


def _monotone_step(stepper: _Etdrk4, z: np.ndarray, e0: float, h: float, depth: int = 0):
    """One step of length ``h``, subdivided while the energy would rise."""
    nxt = stepper.step(z, h)
    e1 = _energy(stepper.grid, nxt)
    if e1 <= e0 + ENERGY_SLACK * max(e0, 1.0):
        return nxt, e1, 0
    if depth >= MAX_SPLIT_DEPTH:
        raise FloatingPointError(f"heat flow energy increase persists at step {h:.3e}")
    mid, em, r1 = _monotone_step(stepper, z, e0, h / 2, depth + 1)
    out, eo, r2 = _monotone_step(stepper, mid, em, h / 2, depth + 1)
    return out, eo, 1 + r1 + r2


def heat_evolve(z0: SphereField, s_max: float | None = None, cfg: HeatConfig = HeatConfig(),
                s_grid=None) -> HeatTrajectory:
    """ETDRK4 heat flow.  With ``s_max=None`` the flow runs on the geometric
    grid until ``dist_to_constant < tol_q``; an explicit ``s_grid`` is used
    verbatim (so several trajectories can share nodes)."""
    grid = z0.grid
    stepper = _Etdrk4(grid)
    z = np.array(z0.u)
    e = _energy(grid, z)
    if s_grid is not None:
        nodes = np.asarray(s_grid, dtype=float)
        if nodes[0] != 0 or np.any(np.diff(nodes) <= 0):
            raise ValueError("s_grid must start at 0 and increase")
    elif s_max is not None:
        if not s_max > 0:
            raise ValueError("s_max must be positive")
        nodes = cfg.grid_until(s_max)
    else:
        nodes = None

    zs, es, ss, rejected = [z], [e], [0.0], 0
    h, i = cfg.h0, 0
    while True:
        if nodes is not None:
            if i + 1 >= len(nodes):
                break
            h = nodes[i + 1] - nodes[i]
        elif dist_to_constant(z) < cfg.tol_q:
            break
        elif ss[-1] >= cfg.s_cap:
            raise RuntimeError(f"heat flow did not reach tol_q = {cfg.tol_q} by s = {cfg.s_cap}")
        z, e, r = _monotone_step(stepper, z, e, h)
        rejected += r
        zs.append(z)
        es.append(e)
        ss.append(ss[-1] + h if nodes is None else nodes[i + 1])
        i += 1
        if nodes is None:
            h *= cfg.ratio
    return HeatTrajectory(grid, np.array(ss), zs, np.array(es), dist_to_constant(z), rejected)


# ---------------------------------------------------------------------------
# Caloric frame


def _hermite(z0, z1, d0, d1, h, theta=0.5):
    """Cubic Hermite value at fraction ``theta`` of an interval of length ``h``."""
    t2, t3 = theta ** 2, theta ** 3
    return ((2 * t3 - 3 * t2 + 1) * z0 + (t3 - 2 * t2 + theta) * h * d0
            + (-2 * t3 + 3 * t2) * z1 + (t3 - t2) * h * d1)


def _transport_rate(z: np.ndarray, zs: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``[(z_s) z^T - z (z_s)^T] v``."""
    return zs * _dot(z, v) - z * _dot(zs, v)


@dataclass
class CaloricFrames:
    heat: HeatTrajectory
    frames: list = field(repr=False)   # TangentFrame per s node
    zs: list = field(repr=False)       # heat_rhs per node

    @property
    def at_zero(self) -> TangentFrame:
        return self.frames[0]

    def orthonormality_defect(self) -> float:
        return max(f.defect(z) for f, z in zip(self.frames, self.heat.z))

    def caloric_defect(self) -> float:
        """``max |w . v_s|`` with ``v_s`` from the transport generator."""
        return max(float(np.max(np.abs(_dot(f.w, _transport_rate(z, zs, f.v)))))
                   for f, z, zs in zip(self.frames, self.heat.z, self.zs))

    def caloric_defect_fd(self) -> float:
        """Same quantity from centred differences of the stored frames
        (an O(h^2) diagnostic, not a tolerance target)."""
        s = self.heat.s_grid
        out = 0.0
        for i in range(1, len(s) - 1):
            dv = (self.frames[i + 1].v - self.frames[i - 1].v) / (s[i + 1] - s[i - 1])
            out = max(out, float(np.max(np.abs(_dot(self.frames[i].w, dv)))))
        return out


def caloric_frame(heat: HeatTrajectory, e_inf=None) -> CaloricFrames:
    """Transport ``e_inf[0]`` (projected at ``z(s_max)``) back to ``s = 0``."""
    grid = heat.grid
    e1 = tangent_basis(NORTH)[0] if e_inf is None else np.asarray(e_inf[0], dtype=float)
    zt = heat.z[-1]
    v = np.broadcast_to(e1[:, None, None], zt.shape) - _dot(e1[:, None, None], zt) * zt
    norm = np.sqrt(_dot(v, v))
    if np.min(norm) < DEGENERATE_PROJECTION:
        raise ValueError("frame leg is (nearly) normal to z(s_max); choose another e_inf")
    v = v / norm
    zs = [heat_rhs(z, grid) for z in heat.z]
    frames = [None] * len(heat.z)
    frames[-1] = TangentFrame.from_v(zt, v)
    s = heat.s_grid
    for i in range(len(s) - 2, -1, -1):
        h = s[i + 1] - s[i]
        z_hi, z_lo = heat.z[i + 1], heat.z[i]
        d_hi, d_lo = zs[i + 1], zs[i]
        z_mid = _normalize(_hermite(z_lo, z_hi, d_lo, d_hi, h))
        d_mid = heat_rhs(z_mid, grid)
        # RK4 with step -h from s[i+1] to s[i]
        k1 = _transport_rate(z_hi, d_hi, v)
        k2 = _transport_rate(z_mid, d_mid, v - 0.5 * h * k1)
        k3 = _transport_rate(z_mid, d_mid, v - 0.5 * h * k2)
        k4 = _transport_rate(z_lo, d_lo, v - h * k3)
        v = v - h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        frames[i] = TangentFrame.from_v(z_lo, v)
        v = frames[i].v
    return CaloricFrames(heat, frames, zs)


def gauge_fields_along_s(cal: CaloricFrames) -> list[GaugeData]:
    """Derivative fields, connection coefficients and ``psi_s`` per node;
    ``psi_s`` is stored in the ``psit`` slot."""
    out = []
    for i, frame in enumerate(cal.frames):
        g = derivative_fields(cal.heat.sphere(i), frame)
        g.psit = ComplexField(cal.heat.grid, frame_coordinates(frame, cal.zs[i]))
        out.append(g)
    return out


def caloric_gauge(u: SphereField, cfg: HeatConfig = HeatConfig(), s_grid=None, e_inf=None):
    """Heat flow, caloric frames and gauge fields for one map."""
    heat = heat_evolve(u, cfg=cfg, s_grid=s_grid)
    cal = caloric_frame(heat, e_inf)
    return cal, gauge_fields_along_s(cal)


def band_psi_norms(grid: GridSpec, gauge: GaugeData) -> dict[int, float]:
    """``||P_k psi_x||_{L^2}`` per band, combining both components."""
    return band_norms_array(grid, np.stack(gauge.psi), 2)


# ---------------------------------------------------------------------------
# Integral identity for A and the gauged equation


def _cov_div(grid: GridSpec, g: GaugeData) -> np.ndarray:
    """``sum_l (d_l psi_l + i A_l psi_l)``."""
    out = np.zeros((grid.n, grid.n), dtype=complex)
    for l, (p, a) in enumerate(zip(g.psi, g.a)):
        out += spectral_gradient(grid, p)[l] + 1j * a * p
    return out


@dataclass(frozen=True)
class AIntegralReport:
    s0: float
    residual: float
    tail: float
    per_component: tuple


def verify_A_integral(gauges: list[GaugeData], s_grid, s0_index: int = 0) -> AIntegralReport:
    """Compare ``A_m(s0)`` from the frame with
    ``-sum_l int_{s0}^{s_max} Im(conj(psi_m) D_l psi_l) dr`` (trapezoid).

    ``tail`` is ``||A(s_max)|| / ||A(s0)||``, the part of the integral beyond
    ``s_max`` that the quadrature omits.
    """
    s = np.asarray(s_grid, dtype=float)[s0_index:]
    gs = gauges[s0_index:]
    grid = gs[0].psi1.grid
    integrand = []
    for g in gs:
        div = _cov_div(grid, g)
        integrand.append([-np.imag(np.conj(p) * div) for p in g.psi])
    integrand = np.array(integrand)  # (ns, 2, n, n)
    w = np.diff(s)[:, None, None, None] / 2
    quad = np.sum(w * (integrand[1:] + integrand[:-1]), axis=0)
    a0 = np.stack(gs[0].a)
    scale = lp_norm(grid, a0)
    if scale == 0:
        return AIntegralReport(float(s[0]), 0.0, 0.0, (0.0, 0.0))
    per = tuple(lp_norm(grid, a0[m] - quad[m]) / max(lp_norm(grid, a0[m]), 1e-300) for m in range(2))
    return AIntegralReport(float(s[0]), lp_norm(grid, a0 - quad) / scale,
                           lp_norm(grid, np.stack(gs[-1].a)) / scale, per)


@dataclass(frozen=True)
class GaugedResidual:
    relative: float
    per_component: tuple
    compatibility: float
    psi_t_identity: float
    t_center: float


def gauged_residual(states, h: float, cfg: HeatConfig = HeatConfig(), s_grid=None,
                    e_inf=None, t_center: float = 0.0) -> GaugedResidual:
    """Residual of the gauged Schrodinger equation at the middle of five map
    samples spaced ``h`` apart.

    ``d_t`` is the 5-point centred difference; ``A_t = w . d_t v``.  Returns
    ``||LHS - RHS|| / ||Lap psi_m||`` plus two cross-checks: the
    compatibility ``D_t psi_m - D_m psi_t`` and ``psi_t - i sum D_l psi_l``,
    each relative to ``||d_t psi_m||``.
    """
    if len(states) != 5:
        raise ValueError("need five equally spaced map samples")
    grid = states[0].grid
    if s_grid is None:
        s_grid = heat_evolve(states[2], cfg=cfg).s_grid
    psis, vs, frames = [], [], []
    for u in states:
        cal = caloric_frame(heat_evolve(u, cfg=cfg, s_grid=s_grid), e_inf)
        f = cal.at_zero
        g = derivative_fields(u, f)
        psis.append(np.stack(g.psi))
        vs.append(f.v)
        frames.append((f, g))
    f, g = frames[2]
    u = states[2]
    dpsi = central_derivative_samples(psis, h)
    dv = central_derivative_samples(vs, h)
    at = _dot(f.w, dv)
    psit = frame_coordinates(f, smap_rhs(u))
    psi, a = np.stack(g.psi), np.stack(g.a)
    grads = [spectral_gradient(grid, p) for p in psi]        # grads[m][l] = d_l psi_m
    da = [spectral_gradient(grid, a[l])[l] for l in range(2)]  # d_l A_l
    a_sq = a[0] ** 2 + a[1] ** 2
    div_a = da[0] + da[1]
    res, lap_norms = [], []
    for m in range(2):
        lap = sum(spectral_gradient(grid, grads[m][l])[l] for l in range(2))
        lhs = 1j * dpsi[m] + lap
        rhs = (-2j * sum(a[l] * grads[m][l] for l in range(2))
               + (at + a_sq - 1j * div_a) * psi[m]
               - 1j * sum(psi[l] * np.imag(np.conj(psi[l]) * psi[m]) for l in range(2)))
        res.append(lhs - rhs)
        lap_norms.append(lap)
    rel = lp_norm(grid, np.stack(res)) / lp_norm(grid, np.stack(lap_norms))
    per = tuple(lp_norm(grid, res[m]) / lp_norm(grid, lap_norms[m]) for m in range(2))
    dpsit = spectral_gradient(grid, psit)
    compat = [dpsi[m] + 1j * at * psi[m] - dpsit[m] - 1j * a[m] * psit for m in range(2)]
    cov = sum(grads[l][l] + 1j * a[l] * psi[l] for l in range(2))
    scale = lp_norm(grid, dpsi)
    return GaugedResidual(
        relative=rel, per_component=per,
        compatibility=lp_norm(grid, np.stack(compat)) / scale,
        psi_t_identity=lp_norm(grid, psit - 1j * cov) / lp_norm(grid, psit),
        t_center=t_center)
