"""Command-line entry point.

Experiments are described by flat ``key = value`` files::

    regime = case1-fixed
    K = 31
    sigma_lo = 0.05
    sigma_hi = 0.35
    dt = 0.004
    n_steps = 20
    n_paths = 1000000
    seed = 7

Each subcommand writes its CSV tables plus ``manifest.json`` into one run
directory. CSV bytes depend only on the config, never on ``--workers``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import conditional_vol_trajectory, histogram, moments
from .engine import SimConfig, simulate
from .errors import ConfigError, QvolError
from .pde import gaussian_density, mean_square_vol, solve_kbe
from .pricing import surface
from .volstate import max_entropy_state

OUTPUT_ROOT_ENV = "QVOL_OUTPUT_ROOT"
MANIFEST = "manifest.json"

_SIM_KEYS = {
    "regime": str,
    "K": int,
    "sigma_lo": float,
    "sigma_hi": float,
    "nu": float,
    "dt": float,
    "n_steps": int,
    "n_paths": int,
    "epsilon": float,
    "seed": int,
    "record_vol_paths": "bool",
}
_EXTRA_KEYS = {
    "x_nodes": int,
    "t_nodes": int,
    "domain_halfwidth": float,
    "strike": float,
    "threshold": float,
    "bins": int,
}
_EXTRA_DEFAULTS = {"x_nodes": 2001, "bins": 100, "strike": 0.0}
_REQUIRED = ("regime", "K", "sigma_lo", "sigma_hi", "dt", "n_steps", "n_paths")

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}

COLUMNS = {
    "histogram": ("bin_lo", "bin_hi", "count"),
    "moments": ("n", "mean", "variance", "m4", "rel_excess_kurt", "conv_excess_kurt"),
    "trajectory": ("step", "e_above", "e_below"),
    "surface": ("strike", "price", "implied_vol", "status"),
    "pde": ("x", "u"),
    "compare": ("bin_lo", "bin_hi", "count", "mc_density", "gaussian_density"),
    "paths": ("path", "terminal"),
}


def _convert(key, raw, kind):
    raw = raw.strip()
    try:
        if kind == "bool":
            low = raw.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(raw)
        if kind is int:
            return int(raw, 0)
        return kind(raw)
    except ValueError:
        raise ConfigError(key, f"cannot parse {raw!r}") from None


def parse_config_text(text: str, overrides=()) -> dict:
    """Parse key=value lines (``#`` starts a comment) into a typed dict."""
    kinds = {**_SIM_KEYS, **_EXTRA_KEYS}
    values = {}
    lines = [(f"line {i}", ln) for i, ln in enumerate(text.splitlines(), 1)]
    lines += [("--set", o) for o in overrides]
    for where, line in lines:
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(where, f"expected key = value, got {line!r}")
        key, raw = (p.strip() for p in line.split("=", 1))
        if key not in kinds:
            raise ConfigError(key, "unknown key")
        values[key] = _convert(key, raw, kinds[key])
    for key in _REQUIRED:
        if key not in values:
            raise ConfigError(key, "missing required key")
    return values


def build_sim_config(values: dict) -> SimConfig:
    return SimConfig(**{k: v for k, v in values.items() if k in _SIM_KEYS})


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def write_csv(path: Path, kind: str, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS[kind])
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _histogram_rows(h):
    return zip(h.edges[:-1], h.edges[1:], h.counts.tolist())


def _moment_rows(m):
    return [(m.n, m.mean, m.m2, m.m4, m.relative_excess_kurtosis, m.conventional_excess_kurtosis)]


def parse_strikes(spec: str) -> np.ndarray:
    """``lo:step:hi`` inclusive of both ends, or a comma-separated list."""
    try:
        if ":" in spec:
            lo, step, hi = (float(p) for p in spec.split(":"))
            if not step > 0 or hi < lo:
                raise ValueError
            n = int(math.floor((hi - lo) / step + 1e-9)) + 1
            return lo + step * np.arange(n)
        return np.array([float(p) for p in spec.split(",")])
    except ValueError:
        raise ConfigError("strikes", f"cannot parse {spec!r}") from None


def file_digest(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def verify_manifest(run_dir) -> bool:
    """True when every file listed in the manifest exists with its digest."""
    run_dir = Path(run_dir)
    manifest = json.loads((run_dir / MANIFEST).read_text())
    written = {p.name for p in run_dir.iterdir() if p.name != MANIFEST}
    if written != set(manifest["files"]):
        return False
    return all(file_digest(run_dir / n) == d for n, d in manifest["files"].items())


def _cmd_simulate(cfg, extra, args, out):
    ens = simulate(cfg, workers=args.workers)
    write_csv(out / "histogram.csv", "histogram", _histogram_rows(histogram(ens.terminal, extra["bins"])))
    write_csv(out / "moments.csv", "moments", _moment_rows(moments(ens.terminal)))
    if args.paths_csv:
        write_csv(out / "paths.csv", "paths", enumerate(ens.terminal))


def _cmd_compare(cfg, extra, args, out):
    ens = simulate(cfg, workers=args.workers)
    h = histogram(ens.terminal, extra["bins"])
    vbar = mean_square_vol(max_entropy_state(cfg.grid))
    mid = 0.5 * (h.edges[:-1] + h.edges[1:])
    ref = gaussian_density(vbar, cfg.horizon, mid)
    rows = zip(h.edges[:-1], h.edges[1:], h.counts.tolist(), h.density(), ref)
    write_csv(out / "compare.csv", "compare", rows)
    write_csv(out / "moments.csv", "moments", _moment_rows(moments(ens.terminal)))


def _cmd_analyze(cfg, extra, args, out):
    if not cfg.record_vol_paths:
        cfg = SimConfig(**{**cfg.to_dict(), "record_vol_paths": True})
    ens = simulate(cfg, workers=args.workers)
    threshold = extra.get("threshold", float(np.median(cfg.grid.values)))
    steps, above, below = conditional_vol_trajectory(ens.vol_paths, threshold)
    write_csv(out / "trajectory.csv", "trajectory", zip(steps.tolist(), above, below))
    write_csv(out / "moments.csv", "moments", _moment_rows(moments(ens.terminal)))
    write_csv(out / "histogram.csv", "histogram", _histogram_rows(histogram(ens.terminal, extra["bins"])))


def _cmd_surface(cfg, extra, args, out):
    strikes = parse_strikes(args.strikes)
    ens = simulate(cfg, workers=args.workers)
    pts = surface(ens.terminal, strikes, cfg.horizon)
    rows = [(p.strike, p.call_price, p.implied_normal_vol, p.status) for p in pts]
    write_csv(out / "surface.csv", "surface", rows)


def _cmd_pde(cfg, extra, args, out):
    strike = extra["strike"]
    grid = solve_kbe(
        max_entropy_state(cfg.grid),
        lambda x: np.maximum(x - strike, 0.0),
        cfg.horizon,
        x_nodes=extra["x_nodes"],
        t_nodes=extra.get("t_nodes"),
        halfwidth=extra.get("domain_halfwidth"),
        keep_all=False,
    )
    write_csv(out / "pde.csv", "pde", zip(grid.x_nodes, grid.slice_at(0)))


COMMANDS = {
    "simulate": _cmd_simulate,
    "compare": _cmd_compare,
    "analyze": _cmd_analyze,
    "surface": _cmd_surface,
    "pde": _cmd_pde,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qvol", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qvol {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path, help="key=value experiment file")
        p.add_argument("--out", type=Path, help=f"run directory (default: ${OUTPUT_ROOT_ENV}/<command>-<config>)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--force", action="store_true", help="write into a non-empty run directory")
        if name == "simulate":
            p.add_argument("--paths-csv", action="store_true", help="also write per-path terminals")
        if name == "surface":
            p.add_argument("--strikes", help="lo:step:hi or comma list of absolute strikes")
    return parser


def _glue_strikes(argv):
    # "--strikes -0.06:0.005:0.06" would otherwise parse as an unknown flag
    out, it = [], iter(argv)
    for a in it:
        if a == "--strikes":
            nxt = next(it, None)
            out.append(a if nxt is None else f"--strikes={nxt}")
        else:
            out.append(a)
    return out


def run(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_glue_strikes(argv))
    t0 = time.perf_counter()
    try:
        if args.workers < 1:
            raise ConfigError("workers", "must be >= 1")
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError("config", str(exc)) from None
        values = parse_config_text(text, args.set)
        cfg = build_sim_config(values)
        extra = {**_EXTRA_DEFAULTS, **{k: v for k, v in values.items() if k in _EXTRA_KEYS}}
        out = args.out
        if out is None:
            root = Path(os.environ.get(OUTPUT_ROOT_ENV, "runs"))
            out = root / f"{args.command}-{args.config.stem}"
        if args.command == "surface":
            if args.strikes is None:
                raise ConfigError("strikes", "surface needs --strikes lo:step:hi")
            parse_strikes(args.strikes)
        if out.exists() and any(out.iterdir()) and not args.force:
            raise ConfigError("out", f"{out} is not empty; pass --force to overwrite")
    except ConfigError as exc:
        print(f"qvol: config error: {exc}", file=sys.stderr)
        return 2

    try:
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](cfg, extra, args, out)
    except ConfigError as exc:
        print(f"qvol: config error: {exc}", file=sys.stderr)
        return 2
    except (QvolError, OSError, ArithmeticError) as exc:
        print(f"qvol: {args.command} failed: {exc}", file=sys.stderr)
        return 1

    files = {
        p.name: file_digest(p)
        for p in sorted(out.iterdir())
        if p.is_file() and p.name != MANIFEST
    }
    manifest = {
        "command": args.command,
        "config": {**cfg.to_dict(), **extra},
        "seed": cfg.seed,
        "version": __version__,
        "workers": args.workers,
        "files": files,
        "duration_s": round(time.perf_counter() - t0, 6),
    }
    (out / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
