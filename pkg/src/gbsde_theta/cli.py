"""Command-line front end.

    gbsde-theta study  --problem example1 --sigma2 0.25 --theta1 0 --theta2 0 --N 8,16,32,64,128 --out t1.csv
    gbsde-theta single --problem example2 --sigma2 1 --theta1 .5 --theta2 .5 --N 64 --M 16

Settings come from (highest precedence first) command-line flags, a
``--config`` file of ``key = value`` lines (or an emitted JSON manifest),
and built-in defaults. Exit status: 0 ok, 2 configuration error, 3 numeric
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import platform
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .gbsde import NOISE_FLOOR, ConfigurationError, GridSpec, SchemeParams, StepError, solve
from .glattice import InvalidUncertaintyError
from .numerics import fit_rate
from .problems import UnknownProblemError, get_problem

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger(__name__)


@dataclass
class RunConfig:
    problem: str = "example1"
    sigma2: float = 0.25
    theta1: float = 0.0
    theta2: float = 0.0
    N: list = field(default_factory=lambda: [8, 16, 32, 64, 128])
    M: object = "auto"
    dx: object = "auto"
    D: float = 3.0
    tol: float = 1e-12
    depth_tol: float = 1e-5
    picard_max_iter: int = 100
    out: str = "results.csv"
    manifest: str = ""


class ConfigError(ValueError):
    pass


def _parse_int_list(text):
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(v) for v in str(text).replace(" ", "").split(",") if v]


def _auto_or(conv):
    def parse(text):
        if isinstance(text, str) and text.strip().lower() == "auto":
            return "auto"
        return conv(text)
    return parse


CONVERTERS = {
    "problem": str,
    "sigma2": float,
    "theta1": float,
    "theta2": float,
    "N": _parse_int_list,
    "M": _auto_or(int),
    "dx": _auto_or(float),
    "D": float,
    "tol": float,
    "depth_tol": float,
    "picard_max_iter": int,
    "out": str,
    "manifest": str,
}


def read_config_file(path) -> dict:
    """``key = value`` lines with ``#`` comments, or a JSON manifest written by this tool."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"{path}: bad JSON: {err}") from None
        return dict(data.get("config", data))
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        values[key] = val
    return values


def build_config(file_values: dict, overrides: dict) -> RunConfig:
    merged = {**file_values, **{k: v for k, v in overrides.items() if v is not None}}
    unknown = set(merged) - set(CONVERTERS)
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
    kwargs = {}
    for key, val in merged.items():
        try:
            kwargs[key] = CONVERTERS[key](val)
        except (TypeError, ValueError):
            raise ConfigError(f"bad value for {key}: {val!r}") from None
    cfg = RunConfig(**kwargs)
    if not cfg.manifest:
        cfg.manifest = str(Path(cfg.out).with_suffix("")) + "_manifest.json"
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    if not cfg.N or any(n < 1 for n in cfg.N):
        raise ConfigError("N must be a non-empty list of positive integers")
    if any(b <= a for a, b in zip(cfg.N, cfg.N[1:])):
        raise ConfigError("N must be strictly increasing")
    for name in ("sigma2", "theta1", "theta2", "D", "tol", "depth_tol"):
        if not math.isfinite(getattr(cfg, name)):
            raise ConfigError(f"{name} must be finite")
    if cfg.dx != "auto" and not cfg.dx > 0:
        raise ConfigError("dx must be positive or 'auto'")
    if cfg.D <= 0:
        raise ConfigError("D must be positive")
    # raises ConfigurationError on bad theta/M/tolerances
    _scheme(cfg, cfg.N[0])


def _scheme(cfg: RunConfig, n: int) -> SchemeParams:
    return SchemeParams(
        theta1=cfg.theta1, theta2=cfg.theta2, n_steps=n, lattice_depth=cfg.M,
        picard_tol=cfg.tol, picard_max_iter=cfg.picard_max_iter, depth_tol=cfg.depth_tol,
    )


def _grid(cfg: RunConfig) -> GridSpec:
    return GridSpec(half_width=cfg.D, dx=None if cfg.dx == "auto" else cfg.dx)


def _fmt(x: float) -> str:
    return f"{x:.5E}"


def _run_all(cfg: RunConfig):
    entry = get_problem(cfg.problem, cfg.sigma2)
    grid = _grid(cfg)
    rows = []
    for n in cfg.N:
        res = solve(entry.spec, grid, _scheme(cfg, n))
        rows.append((n, res))
        log.info("N=%d M=%d y0=%.12g (%.2fs)", n, res.m_used, res.y0_at_origin, res.wall_time)
    return entry, rows


def _manifest(cfg, entry, rows, rate):
    spec = entry.spec
    return {
        "tool": "gbsde-theta",
        "version": __version__,
        "config": asdict(cfg),
        "resolved": {
            "problem_description": entry.description,
            "horizon": spec.horizon,
            "sigma_lo_sq": spec.uncertainty.sigma_lo_sq,
            "sigma_hi_sq": spec.uncertainty.sigma_hi_sq,
            "exact_y0": spec.exact_y0,
            "lipschitz_bound": spec.lipschitz_bound,
            "depth_start": SchemeParams().depth_start,
            "depth_cap": SchemeParams().depth_cap,
            "runs": [
                {
                    "N": n,
                    "dt": spec.horizon / n,
                    "M": res.m_used,
                    "dx": res.grid.dx,
                    "pad": res.grid.pad,
                    "half_width": res.grid.half_width,
                    "grid_points": int(res.x_grid.size),
                    "picard_iters_max": res.picard_iters_max,
                    "y0": res.y0_at_origin,
                }
                for n, res in rows
            ],
            "rate": rate,
        },
        "environment": {"python": platform.python_version(), "numpy": np.__version__},
    }


def run_study(cfg: RunConfig) -> int:
    entry, rows = _run_all(cfg)
    exact = entry.spec.exact_y0
    out = Path(cfg.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    rate = None
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if exact is None:
            w.writerow(["N", "y0", "runtime_ms"])
            for n, res in rows:
                w.writerow([n, _fmt(res.y0_at_origin), f"{res.wall_time * 1e3:.1f}"])
        else:
            w.writerow(["N", "error", "runtime_ms"])
            errors = [abs(res.y0_at_origin - exact) for _, res in rows]
            for (n, res), err in zip(rows, errors):
                w.writerow([n, _fmt(err), f"{res.wall_time * 1e3:.1f}"])
            if len(rows) >= 2 and min(errors) > 0 and max(errors) > NOISE_FLOOR:
                rate = fit_rate(cfg.N, errors).slope
            rates_path = out.with_name(out.stem + "_rates.csv")
            with rates_path.open("w", newline="") as rh:
                rw = csv.writer(rh, lineterminator="\n")
                rw.writerow(["log2_N", "log10_error"])
                for n, err in zip(cfg.N, errors):
                    rw.writerow([f"{math.log2(n):.6g}", f"{math.log10(err):.6f}" if err > 0 else "-inf"])
    Path(cfg.manifest).write_text(json.dumps(_manifest(cfg, entry, rows, rate), indent=2) + "\n")
    if rate is None:
        print(f"{cfg.problem}: CR not available")
    else:
        print(f"{cfg.problem}: sigma2={cfg.sigma2} theta=({cfg.theta1}, {cfg.theta2}) CR = {rate:.3f}")
    return EXIT_OK


def run_single(cfg: RunConfig) -> int:
    cfg = replace(cfg, N=cfg.N[-1:])
    _, rows = _run_all(cfg)
    print(f"{rows[0][1].y0_at_origin + 0.0:.12f}")
    return EXIT_OK


def _parser():
    p = argparse.ArgumentParser(prog="gbsde-theta", description="theta-scheme solver for G-BSDEs")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (("study", "convergence study over a list of N"), ("single", "one solve, print Y0 at x=0")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--config", help="key=value file or JSON manifest")
        s.add_argument("--problem")
        s.add_argument("--sigma2", help="lower variance bound")
        s.add_argument("--theta1")
        s.add_argument("--theta2")
        s.add_argument("--N", help="comma separated step counts")
        s.add_argument("--M", help="lattice depth or 'auto'")
        s.add_argument("--dx", help="space step or 'auto' (= dt)")
        s.add_argument("--D", help="half width of the domain of interest")
        s.add_argument("--tol", help="Picard tolerance")
        s.add_argument("--depth-tol", dest="depth_tol", help="tolerance of the automatic depth selection")
        s.add_argument("--out", help="results CSV path")
        s.add_argument("--manifest", help="manifest JSON path")
    return p


def main(argv: Optional[list] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    overrides = {k: v for k, v in vars(args).items() if k in CONVERTERS}
    try:
        file_values = read_config_file(args.config) if args.config else {}
        cfg = build_config(file_values, overrides)
        get_problem(cfg.problem, cfg.sigma2)
    except (ConfigError, ConfigurationError, InvalidUncertaintyError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except UnknownProblemError as err:
        print(f"error: {err.args[0]}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run_study(cfg) if args.command == "study" else run_single(cfg)
    except StepError as err:
        print(f"numeric failure at n={err.n}, x={err.x}: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ArithmeticError, FloatingPointError) as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except ConfigurationError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
