"""Run orchestration: time loop, diagnostics/snapshot output, convergence tables."""

from __future__ import annotations

import json
import logging
import math
import platform
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import resolve
from .errors import StateError
from .model import dissipation_rate
from .output import (
    DIAGNOSTIC_COLUMNS,
    read_csv,
    snapshot_name,
    write_csv,
    write_snapshot,
)
from .spectral import divergence, max_abs, mean
from .stepper import initial_state, step
from .verification import ERROR_KEYS, convergence_study

log = logging.getLogger(__name__)

__all__ = ["RunResult", "run", "converge", "energy_curves", "diagnostics_row"]


@dataclass
class RunResult:
    status: str
    out_dir: Path
    steps: int
    files: list = field(default_factory=list)
    message: str = ""
    final_state: object = None


def diagnostics_row(d):
    return {
        "step": d.step,
        "t": d.t,
        "R": d.R,
        "R_tilde": d.R_tilde,
        "xi": d.xi,
        "eta": d.eta,
        "E_original": d.original_energy,
        "gap": d.gap,
        "dissipation": d.dissipation,
        "mass": d.mass,
        "max_div_u": d.max_div_u,
    }


def _initial_row(state):
    prm = state.params
    return {
        "step": 0,
        "t": state.t,
        "R": state.R,
        "R_tilde": state.R,
        "xi": 1.0,
        "eta": 1.0,
        "E_original": state.energy,
        "gap": abs(state.R - (state.energy + prm.kappa0)),
        "dissipation": dissipation_rate(state.mu[0], state.u[0], prm),
        "mass": mean(state.phi[0]),
        "max_div_u": max_abs(divergence(state.u[0])),
    }


def _snapshot(out, state, step_no, t):
    g = state.grid
    u = state.u[0]
    return [
        write_snapshot(out / snapshot_name("phi", step_no), g, t, [state.phi[0].samples]),
        write_snapshot(out / snapshot_name("u", step_no), g, t, [u.x.samples, u.y.samples]),
        write_snapshot(out / snapshot_name("p", step_no), g, t, [state.p[0].samples]),
    ]


def _manifest(cfg, scenario, status, steps, message):
    return {
        "config": cfg.as_dict(),
        "scenario": scenario.name,
        "seed": scenario.seed,
        "params": asdict(scenario.params),
        "grid": asdict(scenario.grid),
        "dt": scenario.dt,
        "t_end": scenario.t_end,
        "status": status,
        "steps": steps,
        "message": message,
        "versions": {
            "chns_gsav": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }


def run(cfg, out_dir=None):
    """Simulate one configuration and write its outputs.

    Returns a :class:`RunResult`; on blow-up the files written so far are
    kept, the manifest records the failure and ``status == "blow-up"``.
    """
    scenario = resolve(cfg)
    out = Path(out_dir if out_dir is not None else cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    nsteps = round(scenario.t_end / scenario.dt)
    phi0, u0 = scenario.initial_fields()
    state = initial_state(phi0, u0, scenario.params, order=cfg.order)

    files = _snapshot(out, state, 0, 0.0)
    rows = [_initial_row(state)]
    status, message, n = "ok", "", 0
    try:
        for n in range(1, nsteps + 1):
            state, diag = step(state, scenario.dt, debug=cfg.debug)
            t = n * scenario.dt
            if n % cfg.diag_every == 0 or n == nsteps:
                row = diagnostics_row(diag)
                row["t"] = t
                rows.append(row)
            if n % cfg.snap_every == 0:
                files += _snapshot(out, state, n, t)
    except StateError as exc:
        status, message = "blow-up", str(exc)
        log.error("run aborted at step %d: %s", n, exc)
        n -= 1
    files.append(write_csv(out / "diagnostics.csv", DIAGNOSTIC_COLUMNS, rows))
    manifest = out / "run_manifest.json"
    manifest.write_text(
        json.dumps(_manifest(cfg, scenario, status, n, message), indent=2, sort_keys=True) + "\n"
    )
    files.append(manifest)
    return RunResult(status, out, n, files, message, state)


CONVERGENCE_COLUMNS = (
    ("k", "dt")
    + ERROR_KEYS
    + tuple("order_" + k[4:] for k in ERROR_KEYS)
    + ("max_one_minus_xi", "estimate")
)


def converge(k, dt_ladder, out, t_end=0.2, n=50, workers=1):
    """Run the manufactured-solution ladder and write ``convergence.csv`` into ``out``."""
    from .verification import benchmark_grid

    table = convergence_study(k, dt_ladder, t_end=t_end, grid=benchmark_grid(n), workers=workers)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for row, x in zip(table.rows(), table.max_one_minus_xi):
        row["max_one_minus_xi"] = x
        row["estimate"] = "single" if table.single_estimate else "ladder"
        rows.append(row)
    path = write_csv(out / "convergence.csv", CONVERGENCE_COLUMNS, rows)
    return table, path


def energy_curves(diagnostics_path, out_path):
    """Re-emit ``step, t, E_original, R, E_modified_gap`` from a diagnostics file."""
    d = read_csv(diagnostics_path)
    steps = d["step"].astype(int)
    rows = [
        {
            "step": int(s),
            "t": t,
            "E_original": e,
            "R": r,
            "gap": g,
        }
        for s, t, e, r, g in zip(steps, d["t"], d["E_original"], d["R"], d["gap"])
    ]
    write_csv(out_path, ("step", "t", "E_original", "R", "gap"), rows)
    r = d["R"]
    e = d["E_original"]
    summary = {
        "rows": len(rows),
        "R_nonincreasing": bool(np.all(np.diff(r) <= 0)),
        "E_start": float(e[0]) if len(e) else math.nan,
        "E_end": float(e[-1]) if len(e) else math.nan,
    }
    return summary
