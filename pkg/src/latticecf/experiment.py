"""Experiment configuration, orchestration and CSV output.

Values come from (lowest to highest precedence) built-in defaults, a
``key = value`` config file, the ``LATTICECF_SEED`` environment variable
(seed only) and command-line flags. Sweep points may be farmed out to a
process pool; rows are always written in sweep order and every point is
seeded from the experiment seed alone, so output does not depend on the
worker count.
"""
import csv
import io
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import rates
from .relay import CfConfig, simulate_cf
from .wyner_ziv import ConfigurationError, WzConfig, wz_simulate

SEED_ENV = "LATTICECF_SEED"
DEFAULT_SEED = 42
SUBCOMMANDS = ("rates", "rd-curve", "wz-sim", "cf-sim")

FLOAT_KEYS = {"P", "N1", "N2", "D", "P1", "P2", "N3", "gamma"}
INT_KEYS = {"n", "trials", "seed", "workers", "k1", "k2", "kq", "B"}
STR_KEYS = {"out", "sweep", "mode", "lattice"}
KNOWN_KEYS = FLOAT_KEYS | INT_KEYS | STR_KEYS

COMMON_DEFAULTS = {"seed": DEFAULT_SEED, "workers": 1, "out": None, "sweep": None}
DEFAULTS = {
    "rates": {"P": 1.0, "N1": 1.0, "N2": 1.0, "D": 0.5, "P1": 1.0, "P2": 1.0, "N3": 1.0},
    "wz-sim": {"P": 1.0, "N1": 1.0, "N2": 1.0, "D": 0.5, "gamma": 2.0, "n": 8,
               "trials": 10_000, "lattice": "Z"},
    "rd-curve": {"P": 1.0, "N1": 1.0, "N2": 1.0, "D": 0.5, "gamma": 2.0, "n": 8,
                 "trials": 10_000, "lattice": "Z"},
    "cf-sim": {"P1": 100.0, "P2": 1.1e5, "N2": 1.0, "N3": 1.0, "D": 0.25, "n": 8,
               "B": 10, "k1": 4, "k2": 8, "kq": 8, "mode": "chained", "trials": 100,
               "lattice": "Z"},
}

COLUMNS = {
    "rates": ["param", "value", "wz_rd", "wz_rd_a1", "wz_rd_a2", "cf_rate", "Rprime",
              "D_star"],
    "wz-sim": ["P", "N1", "N2", "D", "n", "k", "gamma", "trials", "seed", "rate_bits",
               "wrap_rate", "distortion", "distortion_no_wrap", "identity_pass_rate"],
    "rd-curve": ["P", "N1", "N2", "D", "n", "k", "gamma", "trials", "seed", "wz_rd",
                 "wz_rd_a1", "wz_rd_a2", "rate_bits", "wrap_rate", "distortion",
                 "distortion_no_wrap"],
    "cf-sim": ["P1", "P2", "N2", "N3", "D", "n", "k1", "k2", "kq", "B", "mode", "seed",
               "R_eff", "t2_err", "wrap_rate", "msg_err", "power1", "power2"],
}

_POSITIVE = ("P", "N1", "N2", "D", "P1", "P2", "N3", "trials", "workers", "n")


class ConfigError(ValueError):
    """One or more configuration violations."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class Sweep:
    name: str
    start: float
    stop: float
    steps: int

    def values(self):
        if self.steps == 1:
            return [self.start]
        return [float(v) for v in np.linspace(self.start, self.stop, self.steps)]


@dataclass(frozen=True)
class ExperimentConfig:
    subcommand: str
    params: dict = field(default_factory=dict)
    sweep: Sweep | None = None
    seed: int = DEFAULT_SEED
    out: str | None = None
    workers: int = 1

    @property
    def trials(self):
        return self.params.get("trials")

    @property
    def n(self):
        return self.params.get("n")


def read_config_file(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values, problems = {}, []
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError([f"config: cannot read {path}: {exc.strerror}"]) from exc
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"config line {lineno}: expected 'key = value'")
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = value
    if problems:
        raise ConfigError(problems)
    return values


def _coerce(key, value, problems):
    if value is None or key in STR_KEYS:
        return value
    try:
        if key in INT_KEYS:
            if isinstance(value, str):
                f = float(value)
                if not f.is_integer():
                    raise ValueError
                return int(f)
            return int(value)
        out = float(value)
        if not math.isfinite(out):
            raise ValueError
        return out
    except (TypeError, ValueError):
        kind = "an integer" if key in INT_KEYS else "a finite number"
        problems.append(f"{key}: expected {kind}, got {value!r}")
        return None


def _parse_sweep(text, subcommand, problems):
    parts = text.split(":")
    if len(parts) != 4:
        problems.append(f"sweep: expected NAME:START:STOP:STEPS, got {text!r}")
        return None
    name, start, stop, steps = parts
    allowed = set(DEFAULTS[subcommand]) & (FLOAT_KEYS | INT_KEYS)
    if name not in allowed:
        problems.append(f"sweep: cannot sweep {name!r} for {subcommand}; "
                        f"choose from {sorted(allowed)}")
        return None
    try:
        start, stop = float(start), float(stop)
        steps = int(steps)
    except ValueError:
        problems.append(f"sweep: bounds must be numbers and steps an integer, got {text!r}")
        return None
    if not (math.isfinite(start) and math.isfinite(stop)):
        problems.append("sweep: bounds must be finite")
        return None
    if steps < 1:
        problems.append(f"sweep: steps must be >= 1, got {steps}")
        return None
    sweep = Sweep(name, start, stop, steps)
    if name in INT_KEYS and any(not float(v).is_integer() for v in sweep.values()):
        problems.append(f"sweep: {name} is an integer parameter but the sweep values "
                        f"{sweep.values()} are not all integers")
        return None
    return sweep


def parse_config(subcommand, flags=None, config_path=None, environ=None):
    """Merge defaults, file, environment and flags into a validated config.

    :param flags: mapping of flag values (strings or numbers); ``None`` entries
        are treated as not given
    :raises ConfigError: listing every violation, each naming its key
    """
    if subcommand not in SUBCOMMANDS:
        raise ConfigError([f"subcommand: expected one of {SUBCOMMANDS}, got {subcommand!r}"])
    environ = os.environ if environ is None else environ
    problems = []
    merged = dict(COMMON_DEFAULTS)
    merged.update(DEFAULTS[subcommand])
    sources = []
    if config_path is not None:
        sources.append(read_config_file(config_path))
    if environ.get(SEED_ENV) not in (None, ""):
        sources.append({"seed": environ[SEED_ENV]})
    sources.append({k: v for k, v in (flags or {}).items() if v is not None})
    for source in sources:
        for key, value in source.items():
            if key not in KNOWN_KEYS:
                problems.append(f"{key}: unknown key")
                continue
            merged[key] = _coerce(key, value, problems)

    for key in _POSITIVE:
        value = merged.get(key)
        if key in merged and value is not None and not value > 0:
            problems.append(f"{key}: must be > 0, got {value}")
    for key in ("k1", "k2", "kq"):
        if merged.get(key) is not None and merged[key] < 2:
            problems.append(f"{key}: must be >= 2, got {merged[key]}")
    if merged.get("B") is not None and merged["B"] < 2:
        problems.append(f"B: must be >= 2, got {merged['B']}")
    if merged.get("gamma") is not None and merged["gamma"] < 1:
        problems.append(f"gamma: must be >= 1, got {merged['gamma']}")
    if merged.get("mode") not in (None, "chained", "genie-reset"):
        problems.append(f"mode: expected 'chained' or 'genie-reset', got {merged['mode']!r}")

    sweep = None
    if merged.get("sweep"):
        sweep = _parse_sweep(merged["sweep"], subcommand, problems)
    if subcommand == "rd-curve" and sweep is not None and sweep.name != "D":
        problems.append(f"sweep: rd-curve sweeps D, got {sweep.name!r}")
    if problems:
        raise ConfigError(problems)

    params = {k: merged[k] for k in DEFAULTS[subcommand]}
    if subcommand == "rd-curve" and sweep is None:
        resid = rates.conditional_variance(params["P"], params["N1"], params["N2"])
        sweep = Sweep("D", resid / 20.0, resid, 10)
    cfg = ExperimentConfig(subcommand, params, sweep, merged["seed"], merged["out"],
                           merged["workers"])
    # validate every point up front so a bad sweep never leaves partial output
    point_problems = []
    for point in sweep_points(cfg):
        try:
            _build(cfg.subcommand, point, cfg.seed)
        except ConfigurationError as exc:
            point_problems.append(f"{_label(cfg, point)}{exc}")
    if point_problems:
        raise ConfigError(point_problems)
    return cfg


def _label(cfg, point):
    if cfg.sweep is None:
        return ""
    return f"{cfg.sweep.name}={point[cfg.sweep.name]!r}: "


def sweep_points(cfg):
    if cfg.sweep is None:
        return [dict(cfg.params)]
    out = []
    for v in cfg.sweep.values():
        point = dict(cfg.params)
        point[cfg.sweep.name] = int(round(v)) if cfg.sweep.name in INT_KEYS else v
        out.append(point)
    return out


def _build(subcommand, p, seed):
    if subcommand == "rates":
        return rates.rate_point(p["P"], p["N1"], p["N2"], p["D"], p["P1"], p["P2"], p["N3"])
    if subcommand in ("wz-sim", "rd-curve"):
        return WzConfig(p["P"], p["N1"], p["N2"], p["D"], n=p["n"], gamma=p["gamma"],
                        lattice=p["lattice"])
    return CfConfig(p["P1"], p["P2"], p["N2"], p["N3"], p["D"], n=p["n"], B=p["B"],
                    k1=p["k1"], k2=p["k2"], kq=p["kq"], seed=seed, lattice=p["lattice"])


def evaluate_point(subcommand, point, seed, sweep_name=None):
    """One CSV row (as a dict) for one parameter point."""
    built = _build(subcommand, point, seed)
    if subcommand == "rates":
        row = {k: getattr(built, k) for k in COLUMNS["rates"][2:]}
        row["param"] = sweep_name or ""
        row["value"] = point[sweep_name] if sweep_name else ""
        return row
    if subcommand == "cf-sim":
        rep = simulate_cf(built, runs=point["trials"], mode=point["mode"])
        return {k: getattr(rep, k) for k in COLUMNS["cf-sim"]}
    rep = wz_simulate(built, point["trials"], seed=seed)
    row = rep.as_dict()
    if subcommand == "rd-curve":
        row["wz_rd"] = rates.wz_rd(built.P, built.N1, built.N2, built.D)
        row["wz_rd_a1"] = rates.wz_rd_alpha1_fixed(built.P, built.N1, built.N2, built.D)
        row["wz_rd_a2"] = rates.wz_rd_alpha2_fixed(built.N1, built.N2, built.D)
    return {k: row[k] for k in COLUMNS[subcommand]}


def _evaluate_args(args):
    return evaluate_point(*args)


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def render_csv(subcommand, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS[subcommand])
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in COLUMNS[subcommand]])
    return buf.getvalue()


def compute_rows(cfg):
    name = cfg.sweep.name if cfg.sweep else None
    jobs = [(cfg.subcommand, p, cfg.seed, name) for p in sweep_points(cfg)]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, len(jobs))) as pool:
            return list(pool.map(_evaluate_args, jobs))
    return [_evaluate_args(job) for job in jobs]


def _summary(cfg, rows):
    lines = [f"{cfg.subcommand}: {len(rows)} row(s), seed={cfg.seed}"]
    keys = {"rates": ("wz_rd", "cf_rate"), "wz-sim": ("wrap_rate", "distortion_no_wrap"),
            "rd-curve": ("wz_rd", "distortion_no_wrap"), "cf-sim": ("msg_err", "t2_err")}
    for row in rows:
        if cfg.sweep is None:
            label = "  point"
        elif cfg.subcommand == "rates":
            label = f"  {row['param']}={row['value']}"
        else:
            label = f"  {cfg.sweep.name}={row[cfg.sweep.name]}"
        stats = ", ".join(f"{k}={row[k]:.6g}" for k in keys[cfg.subcommand])
        lines.append(f"{label}: {stats}")
    return "\n".join(lines)


def run_experiment(cfg, stdout=None, stderr=None):
    """Compute all rows, write the CSV, print a summary. Returns an exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        rows = compute_rows(cfg)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=stderr)
        return 2
    text = render_csv(cfg.subcommand, rows)
    if cfg.out is None:
        stdout.write(text)
        print(_summary(cfg, rows), file=stderr)
        return 0
    try:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        print(f"error: cannot write {cfg.out}: {exc.strerror}", file=stderr)
        return 3
    print(_summary(cfg, rows), file=stdout)
    print(f"wrote {cfg.out}", file=stdout)
    return 0
