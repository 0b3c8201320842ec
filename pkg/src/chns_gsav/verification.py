"""Manufactured-solution forcing, error norms and temporal convergence studies."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import ModelParams, buoyancy_force, chemical_potential
from .spectral import (
    Grid2,
    ScalarField,
    VectorField2,
    dealiased_product_sum,
    gradient,
    h1_seminorm,
    l2_norm,
    laplacian,
)
from .stepper import integrate, seeded_state

log = logging.getLogger(__name__)

__all__ = [
    "ManufacturedSolution",
    "benchmark_solution",
    "benchmark_params",
    "benchmark_grid",
    "sample",
    "forcing_fields",
    "ManufacturedForcing",
    "error_norms",
    "ConvergenceTable",
    "convergence_study",
]


@dataclass(frozen=True)
class ManufacturedSolution:
    """Closed-form ``phi``, ``u = (u1, u2)``, ``p`` and the time derivatives.

    Every callable takes ``(X, Y, t)`` with array coordinates.
    """

    phi: object
    phi_t: object
    u1: object
    u2: object
    u1_t: object
    u2_t: object
    p: object


def benchmark_solution():
    pi = np.pi
    cos, sin = np.cos, np.sin
    return ManufacturedSolution(
        phi=lambda x, y, t: cos(t) * cos(pi * x) * cos(pi * y),
        phi_t=lambda x, y, t: -sin(t) * cos(pi * x) * cos(pi * y),
        u1=lambda x, y, t: pi * sin(t) * sin(pi * x) ** 2 * sin(2 * pi * y),
        u2=lambda x, y, t: -pi * sin(t) * sin(2 * pi * x) * sin(pi * y) ** 2,
        u1_t=lambda x, y, t: pi * cos(t) * sin(pi * x) ** 2 * sin(2 * pi * y),
        u2_t=lambda x, y, t: -pi * cos(t) * sin(2 * pi * x) * sin(pi * y) ** 2,
        p=lambda x, y, t: sin(t) * cos(pi * x) * sin(pi * y),
    )


def benchmark_params(kappa0=1.0):
    return ModelParams(lam=1.0, M=1e-3, eps=1.0, gamma=0.0, nu=0.05, kappa0=kappa0)


def benchmark_grid(n=50):
    return Grid2(n, n, 2.0, 2.0, -1.0, -1.0)


def steady_pure_phase():
    """``phi = 1``, ``u = 0``, ``p = 0``: an exact equilibrium."""
    one = lambda x, y, t: np.ones_like(x)  # noqa: E731
    zero = lambda x, y, t: np.zeros_like(x)  # noqa: E731
    return ManufacturedSolution(one, zero, zero, zero, zero, zero, zero)


def _field(grid, func, t):
    X, Y = grid.mesh()
    return ScalarField(grid, np.broadcast_to(func(X, Y, t), grid.shape))


def sample(ms, t, grid):
    """Collocation samples ``(phi, u, p)`` of the exact solution at time ``t``."""
    return (
        _field(grid, ms.phi, t),
        VectorField2(_field(grid, ms.u1, t), _field(grid, ms.u2, t)),
        _field(grid, ms.p, t),
    )


def forcing_fields(ms, t, params, grid):
    """Right-hand sides making ``ms`` an exact solution of the discrete system.

    Built from the solver's own spectral operators and dealiased products, so
    the spatial residual vanishes on resolved modes.  Buoyancy, when enabled in
    ``params``, is included in the balance.
    """
    phi, u, p = sample(ms, t, grid)
    phi_t = _field(grid, ms.phi_t, t)
    u_t = VectorField2(_field(grid, ms.u1_t, t), _field(grid, ms.u2_t, t))
    mu = chemical_potential(phi, params)
    gphi = gradient(phi)
    adv = dealiased_product_sum([(u.x, gphi.x), (u.y, gphi.y)], 1.5)
    f_phi = phi_t + adv - laplacian(mu) * params.M
    gux, guy = gradient(u.x), gradient(u.y)
    gp = gradient(p)
    w = (1.0, 1.0, -1.0)
    conv_cap_x = dealiased_product_sum([(u.x, gux.x), (u.y, gux.y), (mu, gphi.x)], 1.5, w)
    conv_cap_y = dealiased_product_sum([(u.x, guy.x), (u.y, guy.y), (mu, gphi.y)], 1.5, w)
    buoy = buoyancy_force(phi, params)
    f_u = VectorField2(
        u_t.x + conv_cap_x - laplacian(u.x) * params.nu + gp.x - buoy.x,
        u_t.y + conv_cap_y - laplacian(u.y) * params.nu + gp.y - buoy.y,
    )
    return f_phi, f_u


class ManufacturedForcing:
    """Callable ``t -> (f_phi, f_u)`` for use as a stepper forcing hook."""

    def __init__(self, ms, params, grid):
        self.ms = ms
        self.params = params
        self.grid = grid

    def __call__(self, t):
        return forcing_fields(self.ms, t, self.params, self.grid)


def error_norms(state, ms, t=None):
    """Discrete error norms of the newest relaxed level against ``ms``."""
    t = state.t if t is None else t
    phi_ex, u_ex, p_ex = sample(ms, t, state.grid)
    e_phi = state.phi[0] - phi_ex
    e_u = state.u[0] - u_ex
    e_p = state.p[0] - p_ex
    phi_l2 = l2_norm(e_phi)
    return {
        "err_phi_l2": phi_l2,
        "err_phi_h1": math.hypot(phi_l2, h1_seminorm(e_phi)),
        "err_u_l2": l2_norm(e_u),
        "err_u_h1": h1_seminorm(e_u),
        "err_p": l2_norm(e_p),
        "err_p_grad": h1_seminorm(e_p),
    }


ERROR_KEYS = ("err_phi_l2", "err_phi_h1", "err_u_l2", "err_u_h1", "err_p", "err_p_grad")


@dataclass
class ConvergenceTable:
    """Errors per time step and observed orders between consecutive entries.

    ``orders[i]`` compares ``dts[i]`` with ``dts[i + 1]``.
    """

    order: int
    dts: list
    errors: list
    orders: list
    max_one_minus_xi: list
    monotone: bool = True
    single_estimate: bool = False
    notes: list = field(default_factory=list)

    def final_orders(self):
        return self.orders[-1] if self.orders else {}

    def rows(self):
        for i, dt in enumerate(self.dts):
            row = {"k": self.order, "dt": dt}
            row.update(self.errors[i])
            prev = self.orders[i - 1] if i > 0 else {}
            for key in ERROR_KEYS:
                row["order_" + key[4:]] = prev.get(key, float("nan"))
            yield row


def _run_one(k, dt, t_end, grid, params, ms):
    nsteps_total = round(t_end / dt)
    if not math.isclose(nsteps_total * dt, t_end, rel_tol=1e-9):
        raise ValueError(f"t_end={t_end} is not a multiple of dt={dt}")
    levels = [sample(ms, j * dt, grid) for j in range(k - 1, -1, -1)]
    state = seeded_state(levels, params, k, (k - 1) * dt)
    forcing = ManufacturedForcing(ms, params, grid)
    state, diags = integrate(state, dt, nsteps_total - (k - 1), forcing)
    errs = error_norms(state, ms, t_end)
    return errs, max(abs(1.0 - d.xi) for d in diags)


def convergence_study(k, dt_list, t_end=0.2, grid=None, params=None, ms=None, workers=1):
    """Run the manufactured problem for each time step with exact-seeded history."""
    dts = [float(d) for d in dt_list]
    if len(dts) < 2:
        raise ValueError("need at least two time steps")
    if any(b >= a for a, b in zip(dts, dts[1:])):
        raise ValueError("dt_list must be strictly decreasing")
    grid = grid or benchmark_grid()
    params = params or benchmark_params()
    ms = ms or benchmark_solution()

    def job(dt):
        return _run_one(k, dt, t_end, grid, params, ms)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(job, dts))
    else:
        results = [job(dt) for dt in dts]

    errors = [r[0] for r in results]
    orders = []
    for (d0, e0), (d1, e1) in zip(zip(dts, errors), zip(dts[1:], errors[1:])):
        orders.append(
            {key: math.log(e0[key] / e1[key]) / math.log(d0 / d1) for key in ERROR_KEYS}
        )
    table = ConvergenceTable(
        order=k,
        dts=dts,
        errors=errors,
        orders=orders,
        max_one_minus_xi=[r[1] for r in results],
        single_estimate=len(dts) < 3,
    )
    for key in ERROR_KEYS:
        seq = [e[key] for e in errors]
        if any(b >= a for a, b in zip(seq, seq[1:])):
            table.monotone = False
            table.notes.append(f"non-monotone {key} ladder")
            log.warning("order %d: error ladder for %s is not monotone: %s", k, key, seq)
    return table
