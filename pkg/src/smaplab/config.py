"""Run configuration: flat ``key = value`` files merged under command-line flags."""
from __future__ import annotations

import argparse
from dataclasses import dataclass, fields
import math
import os
from pathlib import Path

COMMANDS = ("besov", "nls-run", "smap-run", "heatflow", "caloric-gauge", "morawetz", "bilinear-verify")
DATA_KINDS = ("gaussian", "bump", "envelope", "zero", "file")
OUT_ENV = "SMAPLAB_OUT"

# applied between the global defaults and the config file
COMMAND_DEFAULTS = {
    "smap-run": {"dt": 1e-4, "t_end": 0.1, "sample_every": 100},
    "morawetz": {"grid_len": 24.0},
}


class UsageError(ValueError):
    """Invalid invocation; ``kind`` is one of unknown-key, range, missing, syntax."""

    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


@dataclass(frozen=True)
class RunConfig:
    command: str
    grid_n: int = 64
    grid_len: float = 20.0
    dt: float = 1e-3
    t_end: float = 1.0
    sample_every: int = 10
    mu: int = 1
    data: str = "gaussian"
    epsilon: float = 0.05
    width: float = 1.0
    momentum: float = 1.5
    envelope_profile: str = "bump"
    seed: int = 0
    input: str | None = None
    s_h0: float = 1e-3
    s_ratio: float = 1.05
    tol_q: float = 1e-6
    besov_s: float = 0.0
    besov_p: float = math.inf
    besov_q: float = 2.0
    gaps: tuple = (3, 4, 5, 6)
    trials: int = 10
    flow: str = "free"
    samples: int = 11
    gauge: bool = True
    tol: float | None = None
    out: str | None = None

    def __post_init__(self):
        _validate(self)

    def echo(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = list(v)
            elif isinstance(v, float) and math.isinf(v):
                v = "inf"
            out[f.name] = v
        return out

    def out_dir(self) -> Path:
        if self.out:
            return Path(self.out)
        root = os.environ.get(OUT_ENV, "smaplab_out")
        return Path(root) / self.command


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise UsageError("range", message)


def _validate(c: RunConfig) -> None:
    if c.command not in COMMANDS:
        raise UsageError("syntax", f"unknown command {c.command!r}")
    n = c.grid_n
    _require(n >= 16 and n & (n - 1) == 0, f"grid-n must be a power of two >= 16, got {n}")
    _require(c.grid_len > 0 and math.isfinite(c.grid_len), f"grid-len must be positive, got {c.grid_len}")
    _require(c.dt > 0, f"dt must be positive, got {c.dt}")
    _require(c.t_end >= 0, f"t-end must be nonnegative, got {c.t_end}")
    _require(c.sample_every >= 1, f"sample-every must be >= 1, got {c.sample_every}")
    _require(c.mu in (1, -1), f"mu must be +1 or -1, got {c.mu}")
    _require(c.data in DATA_KINDS, f"data must be one of {', '.join(DATA_KINDS)}, got {c.data!r}")
    _require(c.epsilon >= 0, f"epsilon must be nonnegative, got {c.epsilon}")
    _require(c.width > 0, f"width must be positive, got {c.width}")
    _require(c.envelope_profile in ("bump", "flat", "single"),
             f"envelope-profile must be bump, flat or single, got {c.envelope_profile!r}")
    _require(c.seed >= 0, f"seed must be nonnegative, got {c.seed}")
    _require(c.s_h0 > 0, f"s-h0 must be positive, got {c.s_h0}")
    _require(c.s_ratio >= 1, f"s-ratio must be >= 1, got {c.s_ratio}")
    _require(c.tol_q > 0, f"tol-q must be positive, got {c.tol_q}")
    _require(c.besov_p >= 1 and c.besov_q >= 1, "besov-p and besov-q must lie in [1, inf]")
    _require(len(c.gaps) >= 1 and all(g >= 1 for g in c.gaps), f"gaps must be positive, got {c.gaps}")
    _require(c.trials >= 1, f"trials must be >= 1, got {c.trials}")
    _require(c.flow in ("free", "nls"), f"flow must be free or nls, got {c.flow!r}")
    _require(c.samples >= 1, f"samples must be >= 1, got {c.samples}")
    _require(c.tol is None or c.tol > 0, f"tol must be positive, got {c.tol}")
    if c.data == "file" and not c.input:
        raise UsageError("missing", "--data file requires --input PATH")


# ---------------------------------------------------------------------------
# Parsing


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _gaps(text) -> tuple:
    if isinstance(text, (tuple, list)):
        return tuple(int(g) for g in text)
    return tuple(int(g) for g in str(text).replace(",", " ").split())


_CONVERTERS = {
    "grid_n": int, "grid_len": float, "dt": float, "t_end": float, "sample_every": int,
    "mu": int, "data": str, "epsilon": float, "width": float, "momentum": float,
    "envelope_profile": str, "seed": int, "input": str, "s_h0": float, "s_ratio": float,
    "tol_q": float, "besov_s": float, "besov_p": float, "besov_q": float, "gaps": _gaps,
    "trials": int, "flow": str, "samples": int, "gauge": _bool, "tol": float, "out": str,
}


def read_config_file(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment; dashes in keys allowed."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError("syntax", f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONVERTERS:
            raise UsageError("unknown-key", f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _convert(key, value)
    return out


def _convert(key: str, value):
    try:
        return _CONVERTERS[key](value)
    except (TypeError, ValueError) as exc:
        raise UsageError("syntax", f"bad value for {key}: {value!r} ({exc})") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError("syntax", message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="smaplab", description="Numerical experiments for Schrodinger maps into S^2.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", dest="config_file", default=None)
        for key in _CONVERTERS:
            flag = "--" + key.replace("_", "-")
            if key == "gauge":
                s.add_argument("--gauge", dest="gauge", action="store_const", const=True, default=None)
                s.add_argument("--no-gauge", dest="gauge", action="store_const", const=False)
            else:
                s.add_argument(flag, dest=key, default=None)
    return p


def parse_config(argv, config_file=None) -> RunConfig:
    """Defaults, per-command defaults, the config file, then flags."""
    ns = build_parser().parse_args(list(argv))
    values: dict = dict(COMMAND_DEFAULTS.get(ns.command, {}))
    path = config_file or ns.config_file
    if path:
        values.update(read_config_file(path))
    for key in _CONVERTERS:
        v = getattr(ns, key, None)
        if v is not None:
            values[key] = v if key == "gauge" else _convert(key, v)
    return RunConfig(command=ns.command, **values)
