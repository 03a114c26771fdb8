"""Command-line entry point: ``lecam simulate | timechange | verify``.

Exit codes: 0 success or PASS, 1 verification FAIL, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from . import __version__
from .errors import ConfigError
from .euler_bridge import DEFAULT_FINE_RATIO, bridges_from_brownian, phi_kernel
from .io import (
    atomic_write,
    canonical_digest,
    csv_text,
    euler_csv,
    json_text,
    load_json,
    map_csv,
    path_csv,
    read_path,
)
from .rate_harness import CSV_COLUMNS, ScanConfig, run_scan, scan_config_from_dict
from .sde_core.models import model_from_dict
from .sde_core.paths import cell_grid, grid_tolerance
from .sde_core.rng import INITIAL_STATE, check_seed, stream
from .sde_core.simulate import euler_from_brownian, sample_brownian, simulate_diffusion
from .time_change import a_clock, forward_timechange, inverse_timechange, rho

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
SEED_ENV = "LECAM_SEED"


def resolve_seed(flag: int | None, config_seed: int | None) -> int:
    """--seed beats $LECAM_SEED beats the config's seed; 0 if none is given."""
    if flag is not None:
        return check_seed(flag)
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return check_seed(int(env))
        except ValueError:
            raise ConfigError(f"{SEED_ENV}={env!r} is not an unsigned 64-bit integer", key=SEED_ENV) from None
    return check_seed(config_seed if config_seed is not None else 0)


def _check_keys(cfg: Mapping[str, Any], allowed: set[str]) -> None:
    if not isinstance(cfg, Mapping):
        raise ConfigError("config must be a JSON object")
    for key in cfg:
        if key not in allowed:
            raise ConfigError(f"unknown config key {key!r}", key=key)


def _require(cfg: Mapping[str, Any], key: str):
    if key not in cfg:
        raise ConfigError(f"missing config key {key!r}", key=key)
    return cfg[key]


def write_manifest(out: Path, command: str, config: Any, seed: int, started: float, outputs: list[Path]) -> Path:
    manifest = {
        "command": command,
        "config_digest": canonical_digest(config),
        "seed": seed,
        "version": __version__,
        "wall_time_s": round(time.perf_counter() - started, 3),
        "outputs": sorted(p.name for p in outputs),
    }
    return atomic_write(out / "manifest.json", json_text(manifest))


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    cfg = load_json(args.config)
    _check_keys(cfg, {"model", "n", "h", "fine_ratio", "seed"})
    model = model_from_dict(_require(cfg, "model"))
    try:
        n, h = int(_require(cfg, "n")), float(_require(cfg, "h"))
    except (TypeError, ValueError):
        raise ConfigError("n and h must be numbers", key="n") from None
    if n < 1 or not h > 0:
        raise ConfigError("need n >= 1 and h > 0", key="n" if n < 1 else "h")
    R = int(args.fine_ratio or cfg.get("fine_ratio", DEFAULT_FINE_RATIO))
    if R < 1:
        raise ConfigError("fine_ratio must be a positive integer", key="fine_ratio")
    seed = resolve_seed(args.seed, cfg.get("seed"))

    w = sample_brownian(cell_grid(h, n, R), seed)
    x0 = float(model.eta.sample(stream(seed, INITIAL_STATE)))
    diffusion = simulate_diffusion(model, w, x0)
    euler = euler_from_brownian(model, w, h, n, x0)
    continuous = phi_kernel(euler, bridges=bridges_from_brownian(w, h, n, R))

    out = Path(args.out)
    files = [
        atomic_write(out / "diffusion.csv", path_csv(diffusion)),
        atomic_write(out / "euler.csv", euler_csv(euler)),
        atomic_write(out / "continuous_euler.csv", path_csv(continuous)),
    ]
    write_manifest(out, "simulate", {**cfg, "fine_ratio": R}, seed, started, files)
    print(f"simulate: n={n} h={h} fine_ratio={R} seed={seed}: {len(diffusion)} fine points, "
          f"{n + 1} Euler points -> {out}")
    return EXIT_OK


def cmd_timechange(args) -> int:
    started = time.perf_counter()
    cfg = load_json(args.config)
    _check_keys(cfg, {"model"})
    model = model_from_dict(_require(cfg, "model"))
    path = read_path(args.input)

    if args.direction == "forward":
        result, tmap = forward_timechange(model, path), rho(model, path)
        back = inverse_timechange(model, result)
    else:
        result, tmap = inverse_timechange(model, path), a_clock(model, path)
        back = forward_timechange(model, result)
    err = float(np.max(np.abs(back.values - path.values))) if len(back) == len(path) else float("inf")
    tol = grid_tolerance(path.values)

    out = Path(args.out)
    files = [
        atomic_write(out / f"{args.direction}.csv", path_csv(result)),
        atomic_write(out / "map.csv", map_csv(tmap)),
    ]
    write_manifest(out, "timechange", {**cfg, "direction": args.direction,
                                       "input_digest": canonical_digest(path_csv(path))}, 0, started, files)
    print(f"timechange {args.direction}: {len(path)} points, horizon {path.horizon!r} -> {result.horizon!r}")
    print(f"roundtrip max error {err:.3e} (tolerance {tol:.3e}): {'ok' if err <= tol else 'exceeded'}")
    return EXIT_OK


def plot_rows(result):
    for r in result.records:
        yield (r.quantity, r.arm, r.n, r.h, r.nh2, r.estimate,
               r.estimate - 1.96 * r.stderr, r.estimate + 1.96 * r.stderr, r.bound)


def summary_lines(result) -> list[str]:
    lines = []
    for c in result.checks:
        status = "PASS" if c["passed"] else "FAIL"
        if c["check"] == "bound":
            if not c["passed"]:
                lines.append(f"{status} bound {c['quantity']} n={c['n']} h={c['h']!r}: "
                             f"estimate {c['estimate']:.6g} +- {c['stderr']:.2g} > bound {c['bound']:.6g}")
        elif c["check"] == "rate":
            detail = f"slope {c['slope']:.4f}" if "slope" in c else c.get("note", "")
            lines.append(f"{status} rate {c['quantity']} vs {c['predictor']} on {c['arm']}: "
                         f"{detail} window {c['window']}")
        else:
            est = ", ".join(f"{e:.4g}" for e in c["estimates"])
            lines.append(f"{status} monotone {c['quantity']} on {c['arm']}: [{est}]")
    n_bound = sum(c["check"] == "bound" for c in result.checks)
    n_bad = sum(c["check"] == "bound" and not c["passed"] for c in result.checks)
    lines.insert(0, f"{'PASS' if n_bad == 0 else 'FAIL'} bounds: {n_bound - n_bad}/{n_bound} records "
                    "satisfy estimate <= bound + 3 stderr")
    lines.append("PASS" if result.passed else "FAIL")
    return lines


def cmd_verify(args) -> int:
    started = time.perf_counter()
    raw = load_json(args.config) if args.config else {}
    overrides = {"fine_ratio": args.fine_ratio}
    cfg = scan_config_from_dict(raw, **overrides)
    seed = resolve_seed(args.seed, raw.get("seed"))
    cfg = ScanConfig(**{**cfg.__dict__, "seed": seed})
    result = run_scan(cfg, jobs=args.jobs)

    out = Path(args.out)
    lines = summary_lines(result)
    files = [
        atomic_write(out / "scan.csv", csv_text(CSV_COLUMNS, (r.row() for r in result.records))),
        atomic_write(out / "rates.json", json_text({"rates": result.rates, "checks": result.checks})),
        atomic_write(out / "plot_data.csv", csv_text(
            ("quantity", "arm", "n", "h", "nh2", "estimate", "ci_low", "ci_high", "bound"), plot_rows(result))),
        atomic_write(out / "summary.txt", "\n".join(lines) + "\n"),
    ]
    write_manifest(out, "verify", cfg.to_dict(), seed, started, files)
    print("\n".join(lines))
    return EXIT_OK if result.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lecam", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help=f"master seed (u64); overrides ${SEED_ENV}")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
        p.add_argument("--fine-ratio", type=int, default=None, help="fine steps per Euler cell (delta = h/R)")

    p = sub.add_parser("simulate", help="diffusion, Euler and continuous-Euler paths from one Brownian path")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("timechange", help="apply the time change or its inverse to a path CSV")
    common(p)
    p.add_argument("--input", required=True, help="time,value CSV")
    p.add_argument("--direction", choices=("forward", "inverse"), default="forward")
    p.set_defaults(func=cmd_timechange)

    p = sub.add_parser("verify", help="run the rate scan and check every bound")
    common(p, config_required=False)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except ConfigError as exc:
        key = f" [{exc.key}]" if exc.key else ""
        print(f"error{key}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
