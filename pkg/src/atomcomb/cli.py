"""Batch command-line front end.

Every run writes its tables (CSV with a one-line header carrying units), a
``summary.json`` document, ``effective_config.json`` and a ``manifest.txt``
listing inputs, versions and a SHA-256 checksum per file.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import platform
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .analysis import comb_histogram, linear_fit, repetition_range
from .core import GasParams, TrapConfig
from .field import WeightModel, run_ensemble
from .fugacity import critical_temperature, solve_fugacity
from .spectrum import (
    MAX_DEGREE,
    build_polynomial,
    comb_fit,
    complex_roots,
    default_degree,
    positive_real_root,
    spectrum_from_roots,
)
from .streams import DEFAULT_SEED, stream
from .sweep import ROW_COLUMNS, SweepPlan, draw_particle_number, run_point, temperature_sweep, trap_sweep

__all__ = ["RunConfig", "ConfigError", "parse_config", "effective_config", "run_pipeline", "main",
           "build_parser", "EXIT_OK", "EXIT_CONFIG", "EXIT_NUMERICAL", "EXIT_PARTIAL"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_PARTIAL = 0, 2, 3, 4
COMMANDS = ("tc", "solve", "spectrum", "field", "comb", "sweep-temp", "sweep-trap")
FORMATS = ("table", "summary", "both")
TWO_PI = 2 * math.pi

DEFAULTS = {
    "seed": DEFAULT_SEED,
    "temperature_nk": 10.0,
    "n_mean": 5000.0,
    "n_sigma": None,
    "trap_hz": [125.0, 125.0, 125.0],
    "phi0_rad": math.pi / 20,
    "delta_rad": math.pi / 200,
    "realizations": 10_000,
    "modes_cap": MAX_DEGREE,
    "out": "out",
    "format": "both",
    "temperatures_nk": [10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0],
    "trap_grid_hz": [10.0, 50.0, 100.0, 150.0, 200.0, 250.0],
    "trap_combine": "isotropic",
    "weights": "complex-normal",
    "workers": 1,
    "plots": False,
}
SWEEP_TRAP_TEMPERATURES_NK = [10.0, 25.0, 100.0]


class ConfigError(ValueError):
    """Invalid or unknown configuration entries."""


@dataclass(frozen=True)
class RunConfig:
    command: str
    gas: GasParams
    trap: TrapConfig
    out_dir: Path
    master_seed: int
    formats: str = "both"
    phi0: float = math.pi / 20
    delta: float = math.pi / 200
    realizations: int = 10_000
    modes_cap: int = MAX_DEGREE
    weights: str = "complex-normal"
    workers: int = 1
    plots: bool = False
    plan: SweepPlan | None = None
    settings: tuple = ()  # normalised input values, sorted (key, value) pairs

    @property
    def tables(self) -> bool:
        return self.formats in ("table", "both")

    @property
    def summary(self) -> bool:
        return self.formats in ("summary", "both")


def _floats(value, name: str) -> list[float]:
    if isinstance(value, str):
        parts = [p for p in value.split(",") if p.strip()]
    elif isinstance(value, (int, float)):
        parts = [value]
    else:
        parts = list(value)
    try:
        return [float(p) for p in parts]
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected comma-separated numbers, got {value!r}") from None


def _number(values: dict, key: str, kind=float):
    try:
        v = kind(values[key])
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected a number, got {values[key]!r}") from None
    if isinstance(v, float) and not math.isfinite(v):
        raise ConfigError(f"{key}: must be finite")
    return v


def _positive(values: dict, key: str, kind=float, allow_zero=False):
    v = _number(values, key, kind)
    if v < 0 or (v == 0 and not allow_zero):
        raise ConfigError(f"{key}: must be {'>= 0' if allow_zero else '> 0'}, got {v!r}")
    return v


def _from_values(command: str, values: dict) -> RunConfig:
    if command not in COMMANDS:
        raise ConfigError(f"command: unknown {command!r}; choose from {', '.join(COMMANDS)}")
    seed = _number(values, "seed", int)
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("seed: must be an unsigned 64-bit integer")
    T = _positive(values, "temperature_nk") / 1e9
    n_mean = _number(values, "n_mean")
    if n_mean < 1:
        raise ConfigError(f"n_mean: must be >= 1, got {n_mean!r}")
    n_sigma = values["n_sigma"]
    if n_sigma is not None:
        n_sigma = _positive(values, "n_sigma", allow_zero=True)
    trap_hz = _floats(values["trap_hz"], "trap_hz")
    if len(trap_hz) == 1:
        trap_hz = trap_hz * 3
    if len(trap_hz) != 3 or min(trap_hz) <= 0:
        raise ConfigError(f"trap_hz: need three positive frequencies, got {values['trap_hz']!r}")
    phi0 = _positive(values, "phi0_rad")
    if phi0 > math.pi:
        raise ConfigError("phi0_rad: must be <= pi")
    delta = _positive(values, "delta_rad")
    if delta > phi0 / 2:
        raise ConfigError("delta_rad: must be <= phi0_rad/2")
    realizations = _positive(values, "realizations", int)
    modes_cap = _positive(values, "modes_cap", int)
    if modes_cap < 2:
        raise ConfigError("modes_cap: must be >= 2")
    fmt = values["format"]
    if fmt not in FORMATS:
        raise ConfigError(f"format: choose from {', '.join(FORMATS)}")
    weights = values["weights"]
    if weights not in WeightModel.KINDS:
        raise ConfigError(f"weights: choose from {', '.join(WeightModel.KINDS)}")
    workers = _positive(values, "workers", int)
    if not isinstance(values["plots"], bool):
        raise ConfigError(f"plots: expected true or false, got {values['plots']!r}")
    combine = values["trap_combine"]
    if combine not in ("isotropic", "product"):
        raise ConfigError("trap_combine: choose 'isotropic' or 'product'")

    gas = GasParams(n_mean, T, math.sqrt(n_mean) if n_sigma is None else n_sigma)
    n_sigma = gas.n_sigma
    trap = TrapConfig.from_hz(*trap_hz)
    plan = None
    if command.startswith("sweep"):
        temps = _floats(values["temperatures_nk"], "temperatures_nk")
        if command == "sweep-trap":
            grid = _floats(values["trap_grid_hz"], "trap_grid_hz")
            wx = wy = wz = tuple(TWO_PI * f for f in grid)
        else:
            wx, wy, wz = (TWO_PI * trap_hz[0],), (TWO_PI * trap_hz[1],), (TWO_PI * trap_hz[2],)
        try:
            plan = SweepPlan(
                temperatures=tuple(t / 1e9 for t in temps),
                omega_x=wx, omega_y=wy, omega_z=wz,
                combine="zip" if (command == "sweep-temp" or combine == "isotropic") else "product",
                n_mean=n_mean, n_sigma=n_sigma, realizations=realizations,
                master_seed=seed, phi0=phi0, delta=delta, modes_cap=modes_cap, weights=weights,
            )
        except ValueError as exc:
            raise ConfigError(f"sweep plan: {exc}") from None
    settings = {
        "seed": seed, "temperature_nk": float(values["temperature_nk"]), "n_mean": n_mean,
        "n_sigma": gas.n_sigma, "trap_hz": trap_hz, "phi0_rad": phi0, "delta_rad": delta,
        "realizations": realizations, "modes_cap": modes_cap, "out": str(values["out"]),
        "format": fmt, "weights": weights, "workers": workers, "plots": values["plots"],
    }
    if plan is not None:
        settings["temperatures_nk"] = temps
        if command == "sweep-trap":
            settings["trap_grid_hz"] = grid
            settings["trap_combine"] = combine
    frozen = tuple(sorted((k, tuple(v) if isinstance(v, list) else v) for k, v in settings.items()))
    return RunConfig(command, gas, trap, Path(values["out"]), seed, fmt, phi0, delta,
                     realizations, modes_cap, weights, workers, bool(values["plots"]), plan, frozen)


def _read_config_file(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config: file not found: {p}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: {p} is not valid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be an object")
    return data


def parse_config(source=None, overrides: dict | None = None, command: str | None = None) -> RunConfig:
    """Validated :class:`RunConfig` from a JSON file path or dict plus flag overrides.

    Precedence: built-in defaults < file values < ``overrides``.  Keys use
    underscores (``temperature_nk``); a ``command`` key is allowed in files.

    Raises
    ------
    ConfigError
        Unknown keys (all are listed) or invalid values (the key is named).
    """
    file_values = {}
    if source is not None:
        file_values = dict(source) if isinstance(source, dict) else _read_config_file(source)
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    unknown = sorted(set(file_values) - set(DEFAULTS) - {"command"})
    unknown += sorted(set(overrides) - set(DEFAULTS) - {"command"})
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    values = dict(DEFAULTS)
    values.update({k: v for k, v in file_values.items() if k != "command"})
    values.update({k: v for k, v in overrides.items() if k != "command"})
    cmd = command or overrides.get("command") or file_values.get("command")
    if cmd is None:
        raise ConfigError("command: missing")
    if cmd == "sweep-trap" and "temperatures_nk" not in file_values and "temperatures_nk" not in overrides:
        values["temperatures_nk"] = list(SWEEP_TRAP_TEMPERATURES_NK)
    return _from_values(cmd, values)


def effective_config(cfg: RunConfig) -> dict:
    """Plain-data form of ``cfg`` that :func:`parse_config` maps back to an equal config."""
    return {"command": cfg.command, **json.loads(json.dumps(dict(cfg.settings)))}


# ---------------------------------------------------------------- output helpers

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _write_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _write_manifest(cfg: RunConfig, files: list[Path], status: int) -> Path:
    lines = [
        f"atomcomb {__version__}",
        f"command {cfg.command}",
        f"seed {cfg.master_seed}",
        f"status {status}",
        f"python {platform.python_version()}",
        f"numpy {np.__version__}",
        f"scipy {scipy.__version__}",
        f"inputs {json.dumps(_jsonable(effective_config(cfg)), sort_keys=True)}",
        "files",
    ]
    for p in sorted(files, key=lambda q: q.name):
        lines.append(f"{_sha256(p)}  {p.name}")
    path = cfg.out_dir / "manifest.txt"
    path.write_text("\n".join(lines) + "\n")
    return path


# ---------------------------------------------------------------- commands

def _spectrum_for(cfg: RunConfig, N: float):
    T = cfg.gas.temperature
    M = default_degree(T, cfg.trap, cfg.modes_cap)
    poly = build_polynomial(N, T, cfg.trap, M)
    return spectrum_from_roots(complex_roots(poly, method="aberth"), T), poly


def _cmd_tc(cfg, out):
    tc = critical_temperature(cfg.gas.n_mean, cfg.trap)
    summary = {"n_atoms": cfg.gas.n_mean, "t_c_k": tc, "t_c_nk": tc * 1e9,
               "omega_bar_rad_per_s": cfg.trap.omega_geometric_mean,
               "temperature_over_t_c": cfg.gas.temperature / tc}
    return summary, []


def _cmd_solve(cfg, out):
    res = solve_fugacity(cfg.gas.n_mean, cfg.gas.temperature, cfg.trap)
    summary = {"n_atoms": cfg.gas.n_mean, "z_star": res.z_star, "mu_star_rad_per_s": res.mu_star,
               "beta_hbar_mu": res.log_z, "residual": res.residual, "iterations": res.iterations,
               "series_terms": res.j_max,
               "t_c_k": critical_temperature(cfg.gas.n_mean, cfg.trap)}
    return summary, []


def _cmd_spectrum(cfg, out):
    N = cfg.gas.n_mean
    spec, poly = _spectrum_for(cfg, N)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fit = comb_fit(spec)
    files = []
    if cfg.tables:
        p = out / "spectrum.csv"
        _write_csv(p, ["re_mu_rad_per_s", "im_mu_rad_per_s", "re_z", "im_z", "tooth_m"],
                   zip(spec.mus.real, spec.mus.imag, spec.source_roots.real,
                       spec.source_roots.imag, fit.assignments))
        files.append(p)
    summary = {"n_atoms": N, "degree": poly.degree,
               "positive_root_z": positive_real_root(spec.source_roots),
               "omega_rep_rad_per_s": fit.omega_rep, "omega_0_rad_per_s": fit.omega_0,
               "rms_residual_rad_per_s": fit.rms_residual,
               "spacing_dispersion": fit.spacing_dispersion, "not_a_comb": fit.not_a_comb,
               "imag_sum_rad_per_s": float(np.sum(spec.mus.imag))}
    return summary, files


def _cmd_field(cfg, out):
    N = draw_particle_number(cfg.gas.n_mean, cfg.gas.n_sigma, stream(cfg.master_seed, "atoms"))
    spec, poly = _spectrum_for(cfg, N)
    ens = run_ensemble(spec, WeightModel(cfg.weights), cfg.realizations, cfg.master_seed,
                       workers=cfg.workers)
    files = []
    if cfg.tables:
        p = out / "field.csv"
        _write_csv(p, ["re_psi", "im_psi", "phase_rad", "modulus"],
                   zip(ens.psi.real, ens.psi.imag, ens.phase, ens.modulus))
        files.append(p)
    std = ens.std()
    summary = {"n_atoms": N, "degree": poly.degree, "realizations": ens.n,
               "mean_psi": ens.mean, "abs_mean_psi": abs(ens.mean), "std_psi": std,
               "mean_over_standard_error": abs(ens.mean) / (std / math.sqrt(ens.n)),
               "covariance_re_im": ens.covariance.tolist(), "weights": cfg.weights}
    return summary, files


def _cmd_comb(cfg, out):
    plan = SweepPlan(temperatures=(cfg.gas.temperature,), omega_x=(cfg.trap.omega_x,),
                     omega_y=(cfg.trap.omega_y,), omega_z=(cfg.trap.omega_z,),
                     n_mean=cfg.gas.n_mean, n_sigma=cfg.gas.n_sigma,
                     realizations=cfg.realizations, master_seed=cfg.master_seed, phi0=cfg.phi0,
                     delta=cfg.delta, modes_cap=cfg.modes_cap, weights=cfg.weights)
    res = run_point(plan, cfg.gas.temperature, cfg.trap, cfg.master_seed)
    row = res.row
    if row.error:
        raise _PointFailure(row.error)
    files = []
    w = res.omega_samples
    values, counts = np.unique(w, return_counts=True)
    if cfg.tables:
        hist = comb_histogram(res.filtered_phases, cfg.phi0)
        p = out / "comb_hist.csv"
        _write_csv(p, ["bin_lo_rad", "bin_hi_rad", "count"],
                   zip(hist.edges[:-1], hist.edges[1:], hist.counts))
        files.append(p)
        p = out / "rep_freq.csv"
        _write_csv(p, ["omega_rad_per_s", "freq_hz", "weight"],
                   zip(values, values / TWO_PI, counts / counts.sum()))
        files.append(p)

    class _C:  # repetition_range takes chain-like objects
        omega_samples = w

    rr = repetition_range([_C], cfg.trap)
    summary = {k: getattr(row, k) for k in ROW_COLUMNS}
    summary.update({"repetition_min_rad_per_s": rr.omega_min, "repetition_max_rad_per_s": rr.omega_max,
                    "repetition_min_over_trap": rr.ratio_to_trap, "phi0_rad": cfg.phi0,
                    "delta_rad": cfg.delta})
    return summary, files


class _PointFailure(ArithmeticError):
    pass


def _sweep_tables(cfg, out, results):
    files = []
    if cfg.tables:
        p = out / "sweep.csv"
        _write_csv(p, ROW_COLUMNS, ([getattr(r.row, c) for c in ROW_COLUMNS] for r in results))
        files.append(p)
    return files


def _cmd_sweep_temp(cfg, out):
    results = temperature_sweep(cfg.plan, workers=cfg.workers)
    files = _sweep_tables(cfg, out, results)
    ok = [r.row for r in results if not r.row.error]
    summary = {"points": len(results), "failed": len(results) - len(ok)}
    if len(ok) >= 3 and len({r.temperature_k for r in ok}) > 1:
        lf = linear_fit([r.temperature_k for r in ok], [r.omega_mean for r in ok])
        summary.update({"slope_rad_per_s_per_k": lf.slope, "intercept_rad_per_s": lf.intercept,
                        "r_squared": lf.r_squared})
    return summary, files, results


def _cmd_sweep_trap(cfg, out):
    results = trap_sweep(cfg.plan, workers=cfg.workers)
    files = _sweep_tables(cfg, out, results)
    if cfg.tables:
        p = out / "scatter.csv"
        rows = []
        for r in results:
            if r.row.error:
                continue
            vals, cnt = np.unique(r.omega_samples, return_counts=True)
            for v, c in zip(vals, cnt):
                rows.append((r.row.temperature_k, r.row.omega_x / TWO_PI, r.row.omega_y / TWO_PI,
                             r.row.omega_z / TWO_PI, v, v / TWO_PI, c / cnt.sum()))
        _write_csv(p, ["temperature_k", "trap_x_hz", "trap_y_hz", "trap_z_hz",
                       "omega_rad_per_s", "freq_hz", "weight"], rows)
        files.append(p)
    ok = [r.row for r in results if not r.row.error]
    summary = {"points": len(results), "failed": len(results) - len(ok),
               "energy_bound_violations": sum(not r.within_energy_bound for r in ok)}
    return summary, files, results


_PLOT_SCRIPTS = {
    "field": '''import matplotlib.pyplot as plt
import numpy as np

d = np.genfromtxt("field.csv", delimiter=",", names=True)
plt.figure(figsize=(5, 5))
plt.plot(d["re_psi"], d["im_psi"], ",", alpha=0.3)
plt.xlabel("Re psi")
plt.ylabel("Im psi")
plt.gca().set_aspect("equal")
plt.savefig("field.png", dpi=150)
''',
    "comb": '''import matplotlib.pyplot as plt
import numpy as np

h = np.genfromtxt("comb_hist.csv", delimiter=",", names=True)
r = np.genfromtxt("rep_freq.csv", delimiter=",", names=True)
fig, ax = plt.subplots(1, 2, figsize=(9, 4))
ax[0].bar(0.5 * (h["bin_lo_rad"] + h["bin_hi_rad"]), h["count"], width=h["bin_hi_rad"] - h["bin_lo_rad"])
ax[0].set_xlabel("phase (rad)")
ax[1].hist(r["omega_rad_per_s"], weights=r["weight"], bins=40)
ax[1].set_xlabel("repetition frequency (rad/s)")
fig.savefig("comb.png", dpi=150)
''',
    "sweep-temp": '''import matplotlib.pyplot as plt
import numpy as np

d = np.genfromtxt("sweep.csv", delimiter=",", names=True, dtype=None, encoding=None)
plt.errorbar(d["temperature_k"] * 1e9, d["omega_mean"], yerr=d["omega_std"], fmt="o")
plt.xlabel("T (nK)")
plt.ylabel("repetition frequency (rad/s)")
plt.savefig("sweep_temp.png", dpi=150)
''',
    "sweep-trap": '''import matplotlib.pyplot as plt
import numpy as np

d = np.genfromtxt("scatter.csv", delimiter=",", names=True)
for T in np.unique(d["temperature_k"]):
    s = d[d["temperature_k"] == T]
    plt.scatter(s["trap_x_hz"], s["omega_rad_per_s"], s=4 + 40 * s["weight"], label=f"{T * 1e9:g} nK")
plt.xlabel("trap frequency (Hz)")
plt.ylabel("repetition frequency (rad/s)")
plt.legend()
plt.savefig("sweep_trap.png", dpi=150)
''',
}


def run_pipeline(cfg: RunConfig) -> tuple[int, Path]:
    """Run ``cfg.command``, write its files and manifest; return ``(exit status, manifest path)``."""
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    files: list[Path] = []
    status = EXIT_OK
    summary: dict = {}
    try:
        if cfg.command == "sweep-temp":
            summary, files, results = _cmd_sweep_temp(cfg, out)
        elif cfg.command == "sweep-trap":
            summary, files, results = _cmd_sweep_trap(cfg, out)
        else:
            handler = {"tc": _cmd_tc, "solve": _cmd_solve, "spectrum": _cmd_spectrum,
                       "field": _cmd_field, "comb": _cmd_comb}[cfg.command]
            summary, files = handler(cfg, out)
            results = None
        if results is not None and any(r.row.error for r in results):
            status = EXIT_PARTIAL
            summary["errors"] = [{"index": r.row.index, "error": r.row.error}
                                 for r in results if r.row.error]
    except (ArithmeticError, ValueError) as exc:
        status = EXIT_NUMERICAL
        report = {"status": status, "error": type(exc).__name__, "message": str(exc)}
        p = out / "error.json"
        _write_json(p, report)
        files.append(p)
        print(json.dumps(report), file=sys.stderr)
    if status != EXIT_NUMERICAL and cfg.summary:
        p = out / "summary.json"
        _write_json(p, {"command": cfg.command, "status": status, "results": summary})
        files.append(p)
    p = out / "effective_config.json"
    _write_json(p, effective_config(cfg))
    files.append(p)
    if cfg.plots and cfg.command in _PLOT_SCRIPTS and status != EXIT_NUMERICAL:
        p = out / f"plot_{cfg.command.replace('-', '_')}.py"
        p.write_text(_PLOT_SCRIPTS[cfg.command])
        files.append(p)
    return status, _write_manifest(cfg, files, status)


# ---------------------------------------------------------------- argument parsing

def _formatter(prog):
    return argparse.RawDescriptionHelpFormatter(prog, width=100, max_help_position=34)


def _common(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    d = DEFAULTS
    p.add_argument("--config", metavar="PATH", default=S, help="JSON config file; flags override its values")
    p.add_argument("--seed", metavar="U64", type=int, default=S, help=f"master seed (default: {d['seed']})")
    p.add_argument("--temperature-nk", metavar="F", type=float, default=S,
                   help=f"temperature in nK (default: {d['temperature_nk']:g})")
    p.add_argument("--n-mean", metavar="F", type=float, default=S,
                   help=f"mean atom number (default: {d['n_mean']:g})")
    p.add_argument("--n-sigma", metavar="F", type=float, default=S,
                   help="std. dev. of the Gaussian atom-number draw (default: sqrt(n-mean))")
    p.add_argument("--trap-hz", metavar="FX,FY,FZ", default=S,
                   help="trap frequencies in Hz; one value means isotropic (default: 125,125,125)")
    p.add_argument("--phi0-rad", metavar="F", type=float, default=S,
                   help="unit phase of the comb filter (default: pi/20)")
    p.add_argument("--delta-rad", metavar="F", type=float, default=S,
                   help="half-width of the phase acceptance window (default: pi/200)")
    p.add_argument("--realizations", metavar="U64", type=int, default=S,
                   help=f"field samples and chain length per point (default: {d['realizations']})")
    p.add_argument("--modes-cap", metavar="U32", type=int, default=S,
                   help=f"maximum polynomial degree / retained modes (default: {d['modes_cap']})")
    p.add_argument("--out", metavar="DIR", default=S, help=f"output directory (default: {d['out']})")
    p.add_argument("--format", choices=FORMATS, default=S,
                   help=f"write tables, the summary document, or both (default: {d['format']})")
    p.add_argument("--weights", choices=WeightModel.KINDS, default=S,
                   help=f"distribution of the mode weights (default: {d['weights']})")
    p.add_argument("--workers", metavar="N", type=int, default=S,
                   help=f"worker processes for ensembles and sweeps (default: {d['workers']})")
    p.add_argument("--plots", action="store_true", default=S,
                   help="also write a matplotlib script rendering the tables (default: off)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="atomcomb", formatter_class=_formatter,
        description="Monte-Carlo frequency-comb spectra of a thermal atom laser.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    helps = {
        "tc": "critical temperature of the ideal gas",
        "solve": "solve number conservation for the real fugacity",
        "spectrum": "complex chemical-potential spectrum and comb fit",
        "field": "thermal field realisations in the complex plane",
        "comb": "phase comb and repetition-frequency distribution",
        "sweep-temp": "repetition frequency versus temperature",
        "sweep-trap": "repetition frequency versus trap frequency",
    }
    notes = {
        "sweep-temp": "\n\nThe temperature grid replaces --temperature-nk.",
        "sweep-trap": "\n\nThe temperature grid replaces --temperature-nk and the trap grid replaces --trap-hz.",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name], description=helps[name] + notes.get(name, ""),
                           formatter_class=_formatter)
        _common(p)
        if name.startswith("sweep"):
            grid = "10,25,100" if name == "sweep-trap" else "10,20,...,100"
            p.add_argument("--temperatures-nk", metavar="LIST", default=argparse.SUPPRESS,
                           help=f"comma-separated temperature grid in nK (default: {grid})")
        if name == "sweep-trap":
            p.add_argument("--trap-grid-hz", metavar="LIST", default=argparse.SUPPRESS,
                           help="comma-separated isotropic trap-frequency grid in Hz "
                                "(default: 10,50,100,150,200,250)")
            p.add_argument("--trap-combine", choices=("isotropic", "product"), default=argparse.SUPPRESS,
                           help="isotropic points or the full x*y*z product grid (default: isotropic)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    config_path = args.pop("config", None)
    try:
        cfg = parse_config(config_path, args, command=command)
    except ConfigError as exc:
        print(f"atomcomb: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    status, manifest = run_pipeline(cfg)
    print(manifest)
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
