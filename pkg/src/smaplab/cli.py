"""Command-line entry point.  Exit status: 0 all checks pass, 1 a check
failed, 2 usage error."""
from __future__ import annotations

from dataclasses import dataclass, field
import csv
import io
import json
import logging
import math
import os
from pathlib import Path
import sys
import tempfile
import time

import numpy as np

from .config import RunConfig, UsageError, parse_config

log = logging.getLogger("smaplab")

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


# ---------------------------------------------------------------------------
# Reports and atomic output


@dataclass
class Check:
    name: str
    value: float
    tol: float
    passed: bool
    detail: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = {"name": self.name, "value": _num(self.value), "tol": _num(self.tol), "passed": self.passed}
        if self.detail:
            d["detail"] = {k: _num(v) for k, v in self.detail.items()}
        return d


def _num(x):
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.12e}")
    if isinstance(x, np.integer):
        return int(x)
    return x


@dataclass
class RunReport:
    command: str
    config: dict
    checks: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)
    wall_clock: float = 0.0

    def check(self, name: str, value: float, tol: float, passed: bool | None = None, **detail) -> Check:
        if any(c.name == name for c in self.checks):
            raise ValueError(f"check {name!r} recorded twice")
        ok = bool(value <= tol) if passed is None else bool(passed)
        c = Check(name, float(value), float(tol), ok, detail)
        self.checks.append(c)
        return c

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> str:
        """Deterministic: wall-clock lives in a separate file."""
        body = {
            "command": self.command,
            "config": self.config,
            "passed": self.passed,
            "checks": [c.as_dict() for c in self.checks],
            "artifacts": sorted(self.artifacts),
        }
        return json.dumps(body, indent=2, sort_keys=True) + "\n"


def atomic_write(path: Path, data: str | bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else (f"{v:.12e}" if isinstance(v, (float, np.floating)) else v)
                    for v in row])
    return buf.getvalue()


class _Run:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.dir = cfg.out_dir()
        self.report = RunReport(cfg.command, cfg.echo())

    def write(self, name: str, data) -> Path:
        path = self.dir / name
        atomic_write(path, data)
        self.report.artifacts.append(name)
        return path

    def write_csv(self, name: str, header, rows) -> Path:
        return self.write(name, csv_text(header, rows))


# ---------------------------------------------------------------------------
# Data


def _grid(cfg: RunConfig):
    from .grid import GridSpec
    return GridSpec(cfg.grid_n, cfg.grid_len)


def _scalar_data(cfg: RunConfig):
    from .data import gaussian, random_band_field
    from .grid import ComplexField, read_snapshot
    grid = _grid(cfg)
    if cfg.data == "zero":
        return ComplexField(grid, np.zeros((grid.n, grid.n)))
    if cfg.data == "file":
        g, comps = read_snapshot(cfg.input)
        if g != grid:
            log.info("using grid %s from %s", g, cfg.input)
        return ComplexField(g, comps[0])
    if cfg.data == "envelope":
        from .data import envelope_weights
        from .littlewood_paley import dyadic_range
        bands = [j for j in dyadic_range(grid).bands if j >= 0 and 3 * 2.0 ** j < grid.k_nyquist]
        weights = envelope_weights(cfg.envelope_profile, bands)
        f = sum(random_band_field(grid, j, cfg.seed, cfg.epsilon * w) for j, w in weights.items() if w)
        return ComplexField(grid, f)
    return gaussian(grid, width=cfg.width, amplitude=cfg.epsilon)


def _map_data(cfg: RunConfig):
    from .data import envelope_map, gaussian_bump_map
    from .sphere_map import SphereField
    from .grid import read_snapshot
    grid = _grid(cfg)
    if cfg.data == "zero":
        return SphereField.constant(grid)
    if cfg.data == "file":
        g, comps = read_snapshot(cfg.input)
        if comps.shape[0] != 3:
            raise UsageError("range", f"{cfg.input}: map snapshots need 3 components, found {comps.shape[0]}")
        return SphereField.project(g, comps.real)
    if cfg.data == "envelope":
        return envelope_map(grid, cfg.epsilon, cfg.envelope_profile, cfg.seed)
    return gaussian_bump_map(grid, cfg.epsilon, cfg.width)


def _drift(series) -> float:
    s = np.asarray(series, dtype=float)
    scale = abs(s[0])
    return float(np.max(np.abs(s - s[0])) / scale) if scale > 0 else float(np.max(np.abs(s)))


# ---------------------------------------------------------------------------
# Commands


def cmd_besov(run: _Run):
    from .littlewood_paley import (BesovParams, band_norms_array, besov_from_band_norms,
                                   dyadic_range, frequency_envelope, lp_low, lp_project)
    cfg = run.cfg
    f = _scalar_data(cfg)
    rng = dyadic_range(f.grid)
    norms = band_norms_array(f.grid, f.values, cfg.besov_q, rng.bands)
    params = BesovParams(cfg.besov_s, cfg.besov_p, cfg.besov_q)
    value = besov_from_band_norms(norms, params)
    run.write_csv("besov.csv", ["j", "band_norm"], [(j, norms[j]) for j in rng.bands])
    env = frequency_envelope(norms, sigma=0)
    record = {
        "per_band_norms": {str(j): _num(norms[j]) for j in rng.bands},
        "besov_norm": _num(value),
        "envelope": {"delta": env.delta, "sigma": env.sigma,
                     "values": {str(k): _num(v) for k, v in zip(env.bands, env.values)}},
    }
    run.write("besov.json", json.dumps(record, indent=2, sort_keys=True) + "\n")
    recon = lp_low(f, rng.j_min).values + sum(lp_project(f, j).values for j in rng.bands)
    err = float(np.sqrt(np.sum(np.abs(recon - f.values) ** 2) * f.grid.cell_area))
    run.report.check("partition_of_unity", err, cfg.tol or 1e-12, besov_norm=value,
                     j_min=rng.j_min, j_max=rng.j_max)


def cmd_nls_run(run: _Run):
    from .nls import NlsConfig, nls_evolve
    cfg = run.cfg
    u0 = _scalar_data(cfg)
    traj = nls_evolve(u0, NlsConfig(cfg.mu, cfg.dt, cfg.t_end, u0.grid, cfg.sample_every))
    run.write_csv("nls.csv", ["t", "mass", "hamiltonian"],
                  zip(traj.times, traj.mass, traj.hamiltonian))
    run.report.check("mass_drift", _drift(traj.mass), 1e-8)
    run.report.check("hamiltonian_drift", _drift(traj.hamiltonian), cfg.tol or 1e-6)


def cmd_smap_run(run: _Run):
    from .caloric import HeatConfig, band_psi_norms, caloric_gauge
    from .littlewood_paley import dyadic_range
    from .sphere_map import SmapConfig, smap_evolve, sphere_defect
    cfg = run.cfg
    u0 = _map_data(cfg)
    traj = smap_evolve(u0, SmapConfig(cfg.dt, cfg.t_end, cfg.sample_every))
    bands = list(dyadic_range(u0.grid).bands)
    rows = []
    hcfg = HeatConfig(cfg.s_h0, cfg.s_ratio, cfg.tol_q)
    for t, s, e, d in zip(traj.times, traj.states, traj.energy, traj.sup_dist):
        band = {}
        if cfg.gauge and e > 0:
            _, gauges = caloric_gauge(s, hcfg)
            band = band_psi_norms(s.grid, gauges[0])
        rows.append([t, e, d] + [band.get(j) for j in bands])
    run.write_csv("smap.csv", ["t", "energy", "sup_dist_Q"] + [f"psi_band_{j}" for j in bands], rows)
    worst = max(sphere_defect(s.u) for s in traj.states)
    run.report.check("sphere_defect", worst, 1e-12, renorm_displacement=traj.max_renorm_defect)
    run.report.check("energy_drift", _drift(traj.energy), cfg.tol or 1e-4)


def cmd_heatflow(run: _Run):
    from .caloric import (HeatConfig, band_psi_norms, caloric_frame, dist_to_constant,
                          gauge_fields_along_s, heat_evolve)
    from .littlewood_paley import dyadic_range
    cfg = run.cfg
    z0 = _map_data(cfg)
    heat = heat_evolve(z0, cfg=HeatConfig(cfg.s_h0, cfg.s_ratio, cfg.tol_q))
    bands = list(dyadic_range(z0.grid).bands)
    gauges = gauge_fields_along_s(caloric_frame(heat)) if cfg.gauge else None
    rows = []
    for i, (s, e, z) in enumerate(zip(heat.s_grid, heat.energy, heat.z)):
        band = band_psi_norms(z0.grid, gauges[i]) if gauges else {}
        rows.append([s, e, dist_to_constant(z)] + [band.get(j) for j in bands])
    run.write_csv("heatflow.csv", ["s", "energy", "sup_dist_const"] + [f"psi_band_{j}" for j in bands], rows)
    rise = float(np.max(np.diff(heat.energy), initial=0.0))
    run.report.check("energy_monotone", rise, 1e-12 * max(heat.energy[0], 1.0),
                     rejected_steps=heat.rejected_steps)
    run.report.check("terminal_dist_to_constant", heat.terminal_dist, cfg.tol_q, s_max=heat.s_max)


def cmd_caloric_gauge(run: _Run):
    from .caloric import HeatConfig, caloric_gauge, verify_A_integral
    from .grid import write_snapshot
    from .sphere_map import energy_map
    cfg = run.cfg
    u = _map_data(cfg)
    cal, gauges = caloric_gauge(u, HeatConfig(cfg.s_h0, cfg.s_ratio, cfg.tol_q))
    g0 = gauges[0]
    path = run.dir / "gauge_s0.bin"
    path.parent.mkdir(parents=True, exist_ok=True)
    write_snapshot(path, u.grid, [g0.psi1.values, g0.psi2.values, g0.a1.values, g0.a2.values])
    run.report.artifacts.append(path.name)
    energy = energy_map(u)
    run.report.check("frame_orthonormality", cal.orthonormality_defect(), 1e-10)
    run.report.check("caloric_condition", cal.caloric_defect(), 1e-8,
                     finite_difference=cal.caloric_defect_fd())
    if energy > 0:
        rep = verify_A_integral(gauges, cal.heat.s_grid)
        run.report.check("A_integral", rep.residual, cfg.tol or 1e-3, tail=rep.tail)
    run.report.check("energy_identity", abs(g0.energy() - energy), 1e-8, energy=energy)


def cmd_morawetz(run: _Run):
    from .data import gaussian
    from .morawetz import verify_morawetz_identity
    cfg = run.cfg
    grid = _grid(cfg)
    u0 = gaussian(grid, (-0.5, 0.0), cfg.width, 1.0)
    v0 = gaussian(grid, (0.5, 0.0), cfg.width, 1.0, (-cfg.momentum, 0.0))
    times = np.linspace(0.0, cfg.t_end, cfg.samples)
    samples = verify_morawetz_identity(u0, v0, times, cfg.dt)
    worst = max(range(len(samples)), key=lambda i: samples[i].rel_err)
    run.write_csv("morawetz.csv", ["t", "M", "dMdt_num", "dMdt_id", "rel_err"],
                  [(s.t, s.m_value, s.dmdt_numeric, s.dmdt_identity, s.rel_err) for s in samples])
    w = samples[worst]
    run.report.check("identity_rel_err", w.rel_err, cfg.tol or 2e-2, worst_row=worst + 1,
                     worst_t=w.t, dMdt_num=w.dmdt_numeric, dMdt_id=w.dmdt_identity)


def cmd_bilinear_verify(run: _Run):
    from .morawetz import BilinearStudyConfig, bilinear_slope_study
    cfg = run.cfg
    study = BilinearStudyConfig(flow=cfg.flow, seed=cfg.seed, mu=cfg.mu,
                                samples=97 if cfg.flow == "nls" else 96)
    res = bilinear_slope_study(cfg.gaps, cfg.trials, study)
    run.write_csv("bilinear.csv", ["j", "k", "bilinear_l2", "normalizer", "ratio_log2"],
                  [(r.j, r.k, r.bilinear_l2, r.normalizer, r.ratio_log2) for r in res.reports])
    tol = cfg.tol or (0.15 if cfg.flow == "free" else 0.2)
    run.report.check("slope", abs(res.slope + 0.5), tol, slope=res.slope)


COMMAND_TABLE = {
    "besov": cmd_besov,
    "nls-run": cmd_nls_run,
    "smap-run": cmd_smap_run,
    "heatflow": cmd_heatflow,
    "caloric-gauge": cmd_caloric_gauge,
    "morawetz": cmd_morawetz,
    "bilinear-verify": cmd_bilinear_verify,
}


def run(cfg: RunConfig) -> RunReport:
    r = _Run(cfg)
    start = time.perf_counter()
    try:
        COMMAND_TABLE[cfg.command](r)
    except UsageError:
        raise
    except Exception as exc:
        raise RuntimeError(f"{cfg.command}: {exc}") from exc
    r.report.wall_clock = time.perf_counter() - start
    atomic_write(r.dir / "report.json", r.report.to_json())
    atomic_write(r.dir / "timing.json", json.dumps({"wall_clock_s": r.report.wall_clock}) + "\n")
    return r.report


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"smaplab: error ({exc.kind}): {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"smaplab: error (missing): {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        report = run(cfg)
    except UsageError as exc:
        print(f"smaplab: error ({exc.kind}): {exc}", file=sys.stderr)
        return EXIT_USAGE
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.value:.3e} (tol {c.tol:.1e})")
    print(f"report: {cfg.out_dir() / 'report.json'}")
    return EXIT_PASS if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
