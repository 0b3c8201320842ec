"""Command-line interface: ``chns-gsav {run,converge,energy,presets}``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import CONFIG_KEYS, RunConfig, parse_config, validate
from .errors import ConfigError, OrderError, StateError

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP, EXIT_IO = 0, 2, 3, 4

# flag -> config attribute
_RUN_FLAGS = {
    "scenario": "scenario",
    "order": "order",
    "n": "n",
    "dt": "dt",
    "tend": "tend",
    "out": "out",
    "seed": "seed",
    "snap_every": "snap_every",
    "diag_every": "diag_every",
    "kappa0": "kappa0",
}


def _config_help():
    d = RunConfig()
    lines = ["config keys (key=value, one per line, '#' comments):"]
    for key, (_, text) in CONFIG_KEYS.items():
        lines.append(f"  {key:<11} {text}")
    lines.append(
        f"defaults: order={d.order} out={d.out} snap_every={d.snap_every} "
        f"diag_every={d.diag_every}; everything else comes from the scenario"
    )
    return "\n".join(lines)


def build_parser():
    p = argparse.ArgumentParser(
        prog="chns-gsav",
        description="Pseudo-spectral Cahn-Hilliard-Navier-Stokes solver with SAV BDF-k stepping.",
    )
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser(
        "run",
        help="simulate a preset or explicit configuration",
        epilog=_config_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    r.add_argument("--config", type=Path, help="key=value config file; flags override it")
    r.add_argument("--scenario", help="preset name")
    r.add_argument("--order", type=int, help="BDF order k (default 2)")
    r.add_argument("--n", type=int, help="modes per axis")
    r.add_argument("--dt", type=float, help="time step")
    r.add_argument("--tend", type=float, help="final time")
    r.add_argument("--out", help="output directory (default: run)")
    r.add_argument("--seed", type=int, help="seed for random initial data")
    r.add_argument("--snap-every", dest="snap_every", type=int, help="snapshot cadence (default 100)")
    r.add_argument("--diag-every", dest="diag_every", type=int, help="diagnostics cadence (default 1)")
    r.add_argument("--kappa0", type=float, help="energy shift")
    r.add_argument("--buoyancy", choices=("on", "off"), help="off sets chi = 0")
    r.add_argument("--debug", action="store_true", help="check the sigma form of each R update")

    c = sub.add_parser("converge", help="temporal convergence study on the manufactured solution")
    c.add_argument("--order", type=int, default=1, help="BDF order k (default 1)")
    c.add_argument(
        "--dt",
        type=float,
        nargs="+",
        default=[1e-2, 5e-3, 2.5e-3, 1.25e-3],
        help="strictly decreasing step ladder (default 1e-2 5e-3 2.5e-3 1.25e-3)",
    )
    c.add_argument("--tend", type=float, default=0.2, help="final time (default 0.2)")
    c.add_argument("--n", type=int, default=50, help="modes per axis (default 50)")
    c.add_argument("--workers", type=int, default=1, help="threads for ladder entries (default 1)")
    c.add_argument("--out", default="converge", help="output directory (default: converge)")

    e = sub.add_parser("energy", help="re-emit energy curves from a diagnostics.csv")
    e.add_argument("diagnostics", type=Path, help="diagnostics.csv or its run directory")
    e.add_argument("--out", type=Path, help="output CSV (default: energy.csv next to the input)")

    sub.add_parser("presets", help="list scenario presets")
    return p


def _load_config(args):
    cfg = parse_config(args.config.read_text()) if args.config else RunConfig()
    changes = {attr: getattr(args, flag) for flag, attr in _RUN_FLAGS.items()
               if getattr(args, flag) is not None}
    if args.buoyancy is not None:
        changes["buoyancy"] = args.buoyancy == "on"
    if args.debug:
        changes["debug"] = True
    return validate(replace(cfg, **changes))


def _cmd_run(args):
    from .runner import run

    cfg = _load_config(args)
    result = run(cfg)
    if result.status != "ok":
        print(f"blow-up after {result.steps} steps: {result.message}", file=sys.stderr)
        return EXIT_BLOWUP
    print(f"{result.steps} steps written to {result.out_dir}")
    return EXIT_OK


def _cmd_converge(args):
    from .runner import converge
    from .verification import ERROR_KEYS

    table, path = converge(args.order, args.dt, args.out, t_end=args.tend, n=args.n,
                           workers=args.workers)
    tag = " (single estimate)" if table.single_estimate else ""
    print(f"k={table.order} observed orders{tag}:")
    for key in ERROR_KEYS:
        vals = " ".join(f"{o[key]:7.3f}" for o in table.orders)
        print(f"  {key:<12} {vals}")
    for note in table.notes:
        print(f"  note: {note}")
    print(f"table written to {path}")
    return EXIT_OK


def _cmd_energy(args):
    from .runner import energy_curves

    src = args.diagnostics
    if src.is_dir():
        src = src / "diagnostics.csv"
    out = args.out or src.with_name("energy.csv")
    s = energy_curves(src, out)
    print(
        f"{s['rows']} rows -> {out}; R nonincreasing: {s['R_nonincreasing']}; "
        f"E {s['E_start']:.6e} -> {s['E_end']:.6e}"
    )
    return EXIT_OK


def _cmd_presets(args):
    from .scenarios import PRESETS

    for name, make in PRESETS.items():
        s = make()
        print(f"{name:<15} dt={s.dt:g} tend={s.t_end:g} n={s.grid.nx}  {s.description}")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {
        "run": _cmd_run,
        "converge": _cmd_converge,
        "energy": _cmd_energy,
        "presets": _cmd_presets,
    }[args.command]
    try:
        return handler(args)
    except (ConfigError, OrderError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StateError as exc:
        print(f"numerical blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # e.g. a non-decreasing ladder
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
