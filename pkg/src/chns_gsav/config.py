"""Flat ``key=value`` run configuration.

One pair per line, ``#`` starts a comment.  A ``scenario`` supplies every
default; the remaining keys override it.  Without a scenario the physical
parameters, ``init``, ``dt`` and ``tend`` must all be given.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

from .errors import ParseError, UnknownScenario, ValidationError
from .model import ModelParams
from .scenarios import PRESETS, Scenario, preset
from .spectral import Grid2

__all__ = ["RunConfig", "parse_config", "resolve", "CONFIG_KEYS"]

INIT_NAMES = ("shape1", "shape2", "separation", "bubble", "droplet")

# key -> (converter, help)
CONFIG_KEYS = {
    "scenario": (str, "preset name (see the presets subcommand)"),
    "order": (int, "BDF order k in 1..5 (default 2)"),
    "n": (int, "modes per axis, overrides the preset grid"),
    "dt": (float, "time step"),
    "tend": (float, "final time"),
    "out": (str, "output directory (default: run)"),
    "snap_every": (int, "snapshot cadence in steps (default 100)"),
    "diag_every": (int, "diagnostics cadence in steps (default 1)"),
    "seed": (int, "seed for random initial data"),
    "kappa0": (float, "energy shift kappa0"),
    "buoyancy": ("bool", "on/off; off sets chi = 0"),
    "debug": ("bool", "on/off; check the sigma representation of the R update"),
    "init": (str, "initial condition for explicit runs: " + ", ".join(INIT_NAMES)),
    "lambda": (float, "mixing coefficient"),
    "M": (float, "mobility"),
    "eps": (float, "interface width"),
    "gamma": (float, "stabilising split constant"),
    "nu": (float, "viscosity"),
    "chi": (float, "buoyancy strength"),
    "gx": (float, "gravity x component"),
    "gy": (float, "gravity y component"),
    "L": (float, "side length of the square domain (explicit runs, default 1)"),
}

_BOOL = {"on": True, "off": False, "true": True, "false": False, "1": True, "0": False,
         "yes": True, "no": False}


@dataclass(frozen=True)
class RunConfig:
    scenario: str | None = None
    order: int = 2
    n: int | None = None
    dt: float | None = None
    tend: float | None = None
    out: str = "run"
    snap_every: int = 100
    diag_every: int = 1
    seed: int | None = None
    kappa0: float | None = None
    buoyancy: bool | None = None
    debug: bool = False
    init: str | None = None
    lam: float | None = None
    M: float | None = None
    eps: float | None = None
    gamma: float | None = None
    nu: float | None = None
    chi: float | None = None
    gx: float | None = None
    gy: float | None = None
    L: float | None = None

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _attr(key):
    return "lam" if key == "lambda" else key


def _convert(key, raw):
    conv = CONFIG_KEYS[key][0]
    if conv == "bool":
        try:
            return _BOOL[raw.lower()]
        except KeyError:
            raise ValidationError(key, f"expected on/off, got {raw!r}") from None
    try:
        return conv(raw)
    except ValueError:
        raise ValidationError(key, f"cannot parse {raw!r}") from None


def parse_config(text):
    """Parse and validate ``key=value`` text into a :class:`RunConfig`."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected key=value, got {line!r}", lineno)
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ParseError(f"unknown key {key!r}", lineno)
        if not raw:
            raise ParseError(f"missing value for {key!r}", lineno)
        values[_attr(key)] = _convert(key, raw)
    return validate(RunConfig(**values))


def validate(cfg):
    """Check a config; returns it unchanged or raises :class:`ValidationError`."""
    for key in ("dt", "tend", "kappa0", "lam", "M", "eps", "nu", "L"):
        v = getattr(cfg, key)
        if v is not None and not (v > 0 and math.isfinite(v)):
            raise ValidationError("lambda" if key == "lam" else key, "must be positive")
    for key in ("gamma", "chi"):
        v = getattr(cfg, key)
        if v is not None and not (v >= 0 and math.isfinite(v)):
            raise ValidationError(key, "must be nonnegative")
    for key in ("snap_every", "diag_every"):
        if getattr(cfg, key) < 1:
            raise ValidationError(key, "cadence must be >= 1")
    if not 1 <= cfg.order <= 5:
        raise ValidationError("order", "must be in 1..5")
    if cfg.n is not None and (cfg.n < 4 or cfg.n % 2):
        raise ValidationError("n", "must be an even integer >= 4")
    if cfg.init is not None and cfg.init not in INIT_NAMES:
        raise ValidationError("init", f"choose from {', '.join(INIT_NAMES)}")
    if cfg.scenario is None:
        missing = [k for k in ("lam", "M", "eps", "nu", "dt", "tend", "init") if getattr(cfg, k) is None]
        if missing:
            name = "lambda" if missing[0] == "lam" else missing[0]
            raise ValidationError(name, "scenario or explicit parameters required")
    elif cfg.scenario not in PRESETS:
        raise ValidationError("scenario", f"unknown preset {cfg.scenario!r}")
    return cfg


def _explicit_init(name):
    from . import scenarios as sc

    if name in ("shape1", "shape2"):
        case = int(name[-1])
        return lambda grid, seed, eps: sc.init_shape_relaxation(case, grid, eps=eps)
    if name == "separation":
        return lambda grid, seed, eps: sc.init_phase_separation(grid, seed)
    if name == "bubble":
        return lambda grid, seed, eps: sc.init_bubble(grid, eps=eps)
    return lambda grid, seed, eps: sc.init_droplet(grid, eps=eps)


def resolve(cfg):
    """Turn a validated config into a concrete :class:`Scenario`."""
    overrides = {
        k: getattr(cfg, k)
        for k in ("lam", "M", "eps", "gamma", "nu", "chi", "kappa0")
        if getattr(cfg, k) is not None
    }
    if cfg.scenario is not None:
        try:
            base = preset(cfg.scenario)
        except UnknownScenario as exc:
            raise ValidationError("scenario", str(exc)) from None
        params = base.params
        gravity = params.gravity
        grid = base.grid
        init = base.init
        eps_for_init = None
    else:
        params = ModelParams(lam=cfg.lam, M=cfg.M, eps=cfg.eps, nu=cfg.nu)
        gravity = (0.0, -1.0)
        L = cfg.L or 1.0
        grid = Grid2(128, 128, L, L)
        init = None
        eps_for_init = cfg.eps
        base = Scenario(
            name=f"explicit:{cfg.init}",
            params=params,
            grid=grid,
            dt=cfg.dt,
            t_end=cfg.tend,
            init=None,
        )
    gravity = (
        cfg.gx if cfg.gx is not None else gravity[0],
        cfg.gy if cfg.gy is not None else gravity[1],
    )
    try:
        params = replace(params, gravity=gravity, **overrides)
        if cfg.buoyancy is False:
            params = replace(params, chi=0.0)
    except ValueError as exc:
        raise ValidationError("params", str(exc)) from None
    if cfg.n is not None:
        grid = Grid2(cfg.n, cfg.n, grid.Lx, grid.Ly, grid.x0, grid.y0)
    if init is None:
        make = _explicit_init(cfg.init)
        init = lambda g, seed: make(g, seed, eps_for_init)  # noqa: E731
    return replace(
        base,
        params=params,
        grid=grid,
        dt=cfg.dt if cfg.dt is not None else base.dt,
        t_end=cfg.tend if cfg.tend is not None else base.t_end,
        init=init,
        seed=cfg.seed if cfg.seed is not None else base.seed,
        buoyancy=params.chi > 0,
    )
