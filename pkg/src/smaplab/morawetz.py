"""Interaction Morawetz potential along axis 1, its free-flow derivative
identity, forcing corrections and the bilinear L^2_{t,x} harness.

The sign kernel ``sgn((x - y)_1)`` is replaced by the odd, L-periodic square
wave.  It agrees with the planar kernel whenever ``|x_1 - y_1| < L/2``, so
every identity below holds up to wrap-around terms that are exponentially
small for well-localized data.

On the discrete torus the free-flow identity reads

    dM/dt = 4 * int |d_1(u(x1, x2) conj(v(x1, y2)))|^2 dx1 dx2 dy2,

the factor 4 coming from ``d/dx sgn = 2 delta`` on both symmetrized terms.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import logging

import numpy as np
import scipy.fft as sfft

from .grid import (ComplexField, GridSpec, apply_multiplier, fft2, ifft2,
                   schrodinger_symbol, spectral_derivative)
from .littlewood_paley import band_symbol, dyadic_range
from .nls import Trajectory

log = logging.getLogger(__name__)

MORAWETZ_CONSTANT = 4.0

# 5-point centred first-derivative stencil, error -h^4/30 f^(5)
_D1_OFFSETS = np.array([-2, -1, 1, 2])
_D1_WEIGHTS = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0


def central_derivative(f, t0: float, h: float):
    """4th-order centred difference of a callable ``f`` at ``t0``."""
    return sum(w * f(t0 + o * h) for o, w in zip(_D1_OFFSETS, _D1_WEIGHTS)) / h


def central_derivative_samples(samples, h: float):
    """Same stencil applied to five equally spaced samples ``f(t0 + m h)``,
    ``m = -2..2``."""
    s = list(samples)
    if len(s) != 5:
        raise ValueError("need exactly five samples")
    return (s[0] - 8 * s[1] + 8 * s[3] - s[4]) / (12.0 * h)


def sign_kernel(n: int) -> np.ndarray:
    """Discrete odd square wave ``sgn(m)`` for ``0 < |m| < n/2``, zero at
    ``m = 0`` and ``m = n/2`` (index order as in an FFT)."""
    m = np.arange(n)
    m = np.where(m >= n // 2, m - n, m)
    ker = np.sign(m).astype(float)
    ker[n // 2] = 0.0
    return ker


def sign_kernel_hat(n: int) -> np.ndarray:
    """Closed-form DFT of :func:`sign_kernel`:
    ``-2i sum_{m=1}^{n/2-1} sin(2 pi k m / n)``."""
    k = np.arange(n)
    theta = 2 * np.pi * k / n
    big_m = n // 2
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.sin(big_m * theta / 2) * np.sin((big_m - 1) * theta / 2) / np.sin(theta / 2)
    s[0] = 0.0
    return -2j * s


def momentum_density(v: ComplexField, axis: int = 1):
    """``Im(conj(v) d_axis v)`` as a RealField."""
    from .grid import RealField
    return RealField(v.grid, _momentum(v.grid, v.values, axis))


def _momentum(grid: GridSpec, v: np.ndarray, axis: int = 1) -> np.ndarray:
    return np.imag(np.conj(v) * spectral_derivative(grid, v, axis))


def _line_density(grid: GridSpec, dens: np.ndarray, axis: int) -> np.ndarray:
    """Integrate a density over the transverse coordinate."""
    other = 1 if axis == 1 else 0
    return dens.sum(axis=other) * grid.spacing


def _kernel_pair(grid: GridSpec, a: np.ndarray, b: np.ndarray, axis: int = 1) -> float:
    """``int int a(y) sgn((x-y)_axis) b(x) dx dy`` via an FFT convolution."""
    la = _line_density(grid, a, axis)
    lb = _line_density(grid, b, axis)
    conv = np.real(sfft.ifft(sfft.fft(la) * sign_kernel_hat(grid.n)))  # (K * la)(x)
    return float(np.sum(conv * lb) * grid.spacing ** 2)


def morawetz_potential(u: ComplexField, v: ComplexField, axis: int = 1) -> float:
    if u.grid != v.grid:
        raise ValueError("u and v live on different grids")
    return _morawetz(u.grid, u.values, v.values, axis)


def _morawetz(grid: GridSpec, u: np.ndarray, v: np.ndarray, axis: int = 1) -> float:
    return (_kernel_pair(grid, np.abs(u) ** 2, _momentum(grid, v, axis), axis)
            + _kernel_pair(grid, np.abs(v) ** 2, _momentum(grid, u, axis), axis))


def morawetz_potential_bruteforce(u: ComplexField, v: ComplexField, axis: int = 1) -> float:
    """O(N^4) double sum with the periodic sign kernel; a test oracle."""
    grid, n = u.grid, u.grid.n
    h2 = grid.cell_area
    mu, mv = np.abs(u.values) ** 2, np.abs(v.values) ** 2
    pu, pv = _momentum(grid, u.values, axis), _momentum(grid, v.values, axis)
    if axis == 2:
        mu, mv, pu, pv = mu.T, mv.T, pu.T, pv.T
    idx = np.arange(n)
    total = 0.0
    for y1 in range(n):
        for y2 in range(n):
            d = (idx - y1) % n
            s = np.where(d == 0, 0.0, np.where(d < n // 2, 1.0, np.where(d == n // 2, 0.0, -1.0)))
            total += mu[y1, y2] * np.sum(s[:, None] * pv) + mv[y1, y2] * np.sum(s[:, None] * pu)
    return float(total * h2 * h2)


def morawetz_rhs_free(u: ComplexField, v: ComplexField, axis: int = 1) -> float:
    """``int |d_1(u(x1,x2) conj(v(x1,y2)))|^2 dx1 dx2 dy2`` in O(N^2).

    Expands to ``A1 b + a B1 + 2 Re(c_u c_v)`` per line, with
    ``a = int |u|^2``, ``A1 = int |d1 u|^2``, ``c_u = int conj(u) d1 u``
    (the cross term is ``2 Re(c_u c_v)``, unconjugated).
    """
    if u.grid != v.grid:
        raise ValueError("u and v live on different grids")
    return _rhs_free(u.grid, u.values, v.values, axis)


def _rhs_free(grid: GridSpec, u: np.ndarray, v: np.ndarray, axis: int = 1) -> float:
    du = spectral_derivative(grid, u, axis)
    dv = spectral_derivative(grid, v, axis)
    line = lambda f: _line_density(grid, f, axis)
    a, b = line(np.abs(u) ** 2), line(np.abs(v) ** 2)
    a1, b1 = line(np.abs(du) ** 2), line(np.abs(dv) ** 2)
    cu, cv = line(np.conj(u) * du), line(np.conj(v) * dv)
    dens = a1 * b + a * b1 + 2 * np.real(cu * cv)
    return float(max(np.sum(dens) * grid.spacing, 0.0))


def morawetz_dmdt_exact(grid: GridSpec, u: np.ndarray, v: np.ndarray, axis: int = 1) -> float:
    """Exact time derivative of the lattice ``M`` along the free flow,
    from ``u_t = i Lap u`` inserted into the mass and momentum densities.

    Differs from ``4 * rhs_free`` only by the spatial error of the sampled
    sign kernel, so it isolates the time-stepping error of a difference
    quotient.
    """
    ut = 1j * apply_multiplier(u, -grid.ksq)
    vt = 1j * apply_multiplier(v, -grid.ksq)

    def dens_dot(f, ft):
        mass_t = 2 * np.real(np.conj(f) * ft)
        mom_t = np.imag(np.conj(ft) * spectral_derivative(grid, f, axis)
                        + np.conj(f) * spectral_derivative(grid, ft, axis))
        return mass_t, mom_t

    mu_t, pu_t = dens_dot(u, ut)
    mv_t, pv_t = dens_dot(v, vt)
    mu_, mv_ = np.abs(u) ** 2, np.abs(v) ** 2
    pu, pv = _momentum(grid, u, axis), _momentum(grid, v, axis)
    pair = lambda a, b: _kernel_pair(grid, a, b, axis)
    return pair(mu_t, pv) + pair(mu_, pv_t) + pair(mv_t, pu) + pair(mv_, pu_t)


def morawetz_rhs_bruteforce(u: ComplexField, v: ComplexField, axis: int = 1) -> float:
    """O(N^3) triple sum of the squared product derivative; a test oracle."""
    grid = u.grid
    uu, vv = u.values, v.values
    du = spectral_derivative(grid, uu, axis)
    dv = spectral_derivative(grid, vv, axis)
    if axis == 2:
        uu, vv, du, dv = uu.T, vv.T, du.T, dv.T
    total = 0.0
    for x1 in range(grid.n):
        prod = du[x1][:, None] * np.conj(vv[x1])[None, :] + uu[x1][:, None] * np.conj(dv[x1])[None, :]
        total += np.sum(np.abs(prod) ** 2)
    return float(total * grid.spacing ** 3)


# ---------------------------------------------------------------------------
# Identity check along the free flow


@dataclass
class MorawetzSample:
    t: float
    m_value: float
    dmdt_numeric: float
    dmdt_identity: float
    forcing_terms: dict = field(default_factory=dict)

    @property
    def rel_err(self) -> float:
        scale = max(abs(self.dmdt_identity), 1e-300)
        return abs(self.dmdt_numeric - self.dmdt_identity) / scale


class MorawetzToleranceError(AssertionError):
    def __init__(self, message: str, worst: MorawetzSample):
        super().__init__(message)
        self.worst = worst


def verify_morawetz_identity(u0: ComplexField, v0: ComplexField, t_grid, dt: float = 1e-3,
                             axis: int = 1, tol: float | None = None) -> list[MorawetzSample]:
    """Compare a 4th-order centred difference of ``M`` along the exact free
    flow (spacing ``dt``) with ``4 * morawetz_rhs_free`` at each time.

    With ``tol`` set, a breach raises :class:`MorawetzToleranceError`
    carrying the worst sample.
    """
    grid = u0.grid
    uh, vh = fft2(u0.values), fft2(v0.values)

    def m_at(t):
        sym = schrodinger_symbol(grid, t)
        return _morawetz(grid, ifft2(uh * sym), ifft2(vh * sym), axis)

    out = []
    for t in np.asarray(t_grid, dtype=float):
        sym = schrodinger_symbol(grid, t)
        u, v = ifft2(uh * sym), ifft2(vh * sym)
        out.append(MorawetzSample(
            t=float(t),
            m_value=_morawetz(grid, u, v, axis),
            dmdt_numeric=central_derivative(m_at, t, dt),
            dmdt_identity=MORAWETZ_CONSTANT * _rhs_free(grid, u, v, axis),
        ))
    if tol is not None:
        worst = max(out, key=lambda s: s.rel_err)
        if worst.rel_err > tol:
            raise MorawetzToleranceError(
                f"Morawetz identity residual {worst.rel_err:.3e} > {tol:.1e} at t = {worst.t:.4g}", worst)
    return out


# ---------------------------------------------------------------------------
# Bilinear harness


@dataclass(frozen=True)
class BilinearReport:
    j: int
    k: int
    bilinear_l2: float
    normalizer: float
    ratio_log2: float


def trapezoid(values, times) -> float:
    values, times = np.asarray(values, dtype=float), np.asarray(times, dtype=float)
    if len(times) < 2:
        return 0.0
    return float(np.sum(0.5 * (values[1:] + values[:-1]) * np.diff(times)))


def bilinear_l2(grid: GridSpec, times, pu_states, pv_states) -> float:
    """``||(P_j u)(P_k v)||_{L^2_{t,x}}`` from aligned projected samples."""
    dens = [np.sum(np.abs(a * b) ** 2) * grid.cell_area for a, b in zip(pu_states, pv_states)]
    return float(np.sqrt(trapezoid(dens, times)))


def bilinear_norm(traj_u: Trajectory, traj_v: Trajectory, j: int, k: int,
                  u0: ComplexField | None = None, v0: ComplexField | None = None) -> BilinearReport:
    """Trapezoid in time of ``||(P_j u)(P_k v)(t)||^2_{L^2_x}``.

    The normalizer uses ``u0``/``v0`` when given, else the first samples.
    """
    if len(traj_u) != len(traj_v) or not np.allclose(traj_u.times, traj_v.times, rtol=0, atol=1e-12):
        raise ValueError("trajectories are sampled on different time grids")
    grid = traj_u.grid
    rng = dyadic_range(grid)
    rng.check(j)
    rng.check(k)
    sj, sk = band_symbol(grid, j), band_symbol(grid, k)
    pu = [apply_multiplier(s.values, sj) for s in traj_u.states]
    pv = [apply_multiplier(s.values, sk) for s in traj_v.states]
    value = bilinear_l2(grid, traj_u.times, pu, pv)
    u0 = traj_u.states[0] if u0 is None else u0
    v0 = traj_v.states[0] if v0 is None else v0
    from .grid import lp_norm
    norm = lp_norm(grid, apply_multiplier(u0.values, sj)) * lp_norm(grid, apply_multiplier(v0.values, sk))
    ratio = np.log2(value / norm) if value > 0 and norm > 0 else -np.inf
    return BilinearReport(j, k, value, norm, float(ratio))


# ---------------------------------------------------------------------------
# Forcing corrections


FORCING_TERMS = ("mass_forcing_u", "mass_forcing_v",
                 "momentum_forcing_v_grad", "momentum_forcing_v_conj",
                 "momentum_forcing_u_grad", "momentum_forcing_u_conj")


def forcing_densities(grid: GridSpec, u, v, f1, f2, axis: int = 1) -> dict[str, float]:
    """Instantaneous forcing contributions to ``dM/dt`` when
    ``i u_t + Lap u = f1`` and ``i v_t + Lap v = f2``.

    With these, ``dM/dt = 4 rhs_free + sum(values)``.
    """
    pu, pv = _momentum(grid, u, axis), _momentum(grid, v, axis)
    du = spectral_derivative(grid, u, axis)
    dv = spectral_derivative(grid, v, axis)
    df1 = spectral_derivative(grid, f1, axis)
    df2 = spectral_derivative(grid, f2, axis)
    mu_, mv_ = np.abs(u) ** 2, np.abs(v) ** 2
    pair = lambda a, b: _kernel_pair(grid, a, b, axis)
    return {
        "mass_forcing_u": pair(2 * np.imag(np.conj(u) * f1), pv),
        "mass_forcing_v": pair(2 * np.imag(np.conj(v) * f2), pu),
        "momentum_forcing_v_grad": -pair(mu_, np.real(np.conj(v) * df2)),
        "momentum_forcing_v_conj": pair(mu_, np.real(np.conj(f2) * dv)),
        "momentum_forcing_u_grad": -pair(mv_, np.real(np.conj(u) * df1)),
        "momentum_forcing_u_conj": pair(mv_, np.real(np.conj(f1) * du)),
    }


def forced_morawetz_terms(traj_u: Trajectory, traj_v: Trajectory, f1, f2, j: int, k: int,
                          axis: int = 1) -> dict[str, float]:
    """Time-integrated forcing corrections for ``(P_j u, P_k v)``.

    ``f1``/``f2`` are per-sample ComplexFields (or arrays).  Returns the six raw
    integrals, their ``2^{j-2k}``-weighted versions (suffix ``_weighted``) and
    the leading term ``2^{j-k} sup_t ||P_j u||^2 ||P_k v||^2`` as
    ``sup_mass_product``.
    """
    if len(traj_u) != len(traj_v) or len(f1) != len(traj_u) or len(f2) != len(traj_v):
        raise ValueError("trajectories and forcings must have matching samples")
    grid = traj_u.grid
    sj, sk = band_symbol(grid, j), band_symbol(grid, k)
    arr = lambda x: x.values if hasattr(x, "values") else np.asarray(x)
    series = {name: [] for name in FORCING_TERMS}
    sup_prod = 0.0
    from .grid import lp_norm
    for su, sv, a, b in zip(traj_u.states, traj_v.states, f1, f2):
        u = apply_multiplier(su.values, sj)
        v = apply_multiplier(sv.values, sk)
        dens = forcing_densities(grid, u, v, apply_multiplier(arr(a), sj),
                                 apply_multiplier(arr(b), sk), axis)
        for name in FORCING_TERMS:
            series[name].append(dens[name])
        sup_prod = max(sup_prod, lp_norm(grid, u) ** 2 * lp_norm(grid, v) ** 2)
    out = {name: trapezoid(series[name], traj_u.times) for name in FORCING_TERMS}
    weight = 2.0 ** (j - 2 * k)
    out.update({f"{name}_weighted": weight * out[name] for name in FORCING_TERMS})
    out["sup_mass_product"] = 2.0 ** (j - k) * sup_prod
    return out


# ---------------------------------------------------------------------------
# Slope study


@dataclass(frozen=True)
class BilinearStudyConfig:
    """Directional packets at bands ``j`` and ``j + gap``, measured in units
    where ``2^j = 1``.

    ``u`` sits at frequency ``eta`` (random direction), ``v`` at ``xi`` along
    axis 1 crossing ``u`` at ``t = 0``; the time window covers a transit of
    ``+-crossing`` around the origin.
    """

    length: float = 14.0
    width: float = 1.5
    eta: float = 1.75
    xi_factor: float = 1.6
    crossing: float = 3.0 * np.sqrt(2.0) * 1.5
    samples: int = 96
    min_n: int = 64
    resolve_widths: float = 6.0
    flow: str = "free"
    mu: int = 1
    amplitude: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.flow not in ("free", "nls"):
            raise ValueError(f"flow must be 'free' or 'nls', got {self.flow!r}")
        if self.samples < 3:
            raise ValueError("need at least three time samples")

    def grid_for(self, gap: int) -> GridSpec:
        need = self.xi_factor * 2.0 ** gap + self.resolve_widths / self.width
        if self.flow == "nls":
            need *= 1.5  # keep the packet inside the 2/3-rule band
        n = self.min_n
        while np.pi * n / self.length <= need:
            n *= 2
        return GridSpec(n, self.length)

    def window(self, gap: int) -> np.ndarray:
        xi = self.xi_factor * 2.0 ** gap
        half = self.crossing / (2 * xi)
        return np.linspace(-half, half, self.samples)


@dataclass
class SlopeResult:
    slope: float
    intercept: float
    gaps: np.ndarray
    ratios: np.ndarray           # (trials, gaps)
    reports: list = field(repr=False)

    @property
    def mean_ratios(self) -> np.ndarray:
        return self.ratios.mean(axis=0)


def _trial_rng(seed: int, trial: int, gap: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(trial), int(gap)))
    return np.random.Generator(np.random.Philox(ss))


def _packet(grid: GridSpec, freq: float, direction: float, width: float, center, phase: float):
    from .data import gaussian
    p = (freq * np.cos(direction), freq * np.sin(direction))
    return gaussian(grid, center, width, np.exp(1j * phase), p).values


def bilinear_trial(cfg: BilinearStudyConfig, gap: int, trial: int, j: int = 0) -> BilinearReport:
    """One random packet pair at bands ``(j, j + gap)``; frequencies scale with ``2^j``."""
    if gap < 1:
        raise ValueError("gap must be positive")
    rng = _trial_rng(cfg.seed, trial, gap)
    base = cfg.grid_for(gap)
    grid = GridSpec(base.n, base.length / 2.0 ** j)
    scale = 2.0 ** j
    width = cfg.width / scale
    k = j + gap
    sj, sk = band_symbol(grid, j), band_symbol(grid, k)
    u0 = _packet(grid, cfg.eta * scale, rng.uniform(0, 2 * np.pi), width, (0.0, 0.0),
                 rng.uniform(0, 2 * np.pi))
    offset = rng.uniform(-0.5, 0.5) * width
    v0 = _packet(grid, cfg.xi_factor * 2.0 ** k, 0.0, width, (0.0, offset), rng.uniform(0, 2 * np.pi))
    times = cfg.window(gap) / scale ** 2
    if cfg.flow == "free":
        uh, vh = fft2(u0) * sj, fft2(v0) * sk
        pu0, pv0 = ifft2(uh), ifft2(vh)
        pu = [ifft2(uh * schrodinger_symbol(grid, t)) for t in times]
        pv = [ifft2(vh * schrodinger_symbol(grid, t)) for t in times]
    else:
        pu, pv, pu0, pv0 = _nls_pair(grid, cfg, u0, v0, times, sj, sk)
    value = bilinear_l2(grid, times, pu, pv)
    from .grid import lp_norm
    norm = lp_norm(grid, pu0) * lp_norm(grid, pv0)
    return BilinearReport(j, k, value, norm, float(np.log2(value / norm)))


def _nls_pair(grid, cfg, u0, v0, times, sj, sk):
    """Evolve the superposition ``eps (u0/|u0| + v0/|v0|)`` by NLS on the
    symmetric window and return band projections of the one solution."""
    from .grid import lp_norm
    from .nls import NlsConfig, nls_evolve, nls_evolve_backward
    w0 = cfg.amplitude * (u0 / lp_norm(grid, u0) + v0 / lp_norm(grid, v0))
    w0 = ComplexField(grid, ifft2(fft2(w0) * grid.dealias_mask))
    half = len(times) // 2
    dt = float(times[1] - times[0])
    if len(times) % 2:
        steps = half
    else:
        raise ValueError("NLS slope study needs an odd number of samples centred on t = 0")
    ncfg = NlsConfig(mu=cfg.mu, dt=dt, t_end=steps * dt, grid=grid)
    fwd = nls_evolve(w0, ncfg, diagnostics=False)
    bwd = nls_evolve_backward(w0, ncfg)
    states = [s.values for s in bwd.states[:-1]] + [s.values for s in fwd.states]
    pu = [apply_multiplier(s, sj) for s in states]
    pv = [apply_multiplier(s, sk) for s in states]
    return pu, pv, apply_multiplier(w0.values, sj), apply_multiplier(w0.values, sk)


def bilinear_slope_study(gaps, trials: int, cfg: BilinearStudyConfig = BilinearStudyConfig(),
                         j: int = 0) -> SlopeResult:
    """Least-squares slope of ``log2(bilinear / normalizer)`` against ``k - j``."""
    gaps = np.asarray(sorted(set(int(g) for g in gaps)))
    if len(gaps) < 2:
        raise ValueError("slope fit needs at least two distinct gaps")
    if trials < 1:
        raise ValueError("need at least one trial")
    ratios = np.zeros((trials, len(gaps)))
    reports = []
    for t in range(trials):
        for i, gap in enumerate(gaps):
            rep = bilinear_trial(cfg, int(gap), t, j)
            ratios[t, i] = rep.ratio_log2
            reports.append(rep)
    x = np.tile(gaps, trials).astype(float)
    slope, intercept = np.polyfit(x, ratios.ravel(), 1)
    return SlopeResult(float(slope), float(intercept), gaps, ratios, reports)
