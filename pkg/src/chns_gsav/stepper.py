"""Fully decoupled IMEX BDF-k step with generalized SAV relaxation.

One step of order ``k`` performs, in order:

1. a constant-coefficient fourth-order solve for the intermediate phase
   field ``phi~`` (chemical potential ``mu~`` follows explicitly);
2. one Helmholtz solve per velocity component for ``u~``;
3. the scalar auxiliary variable update giving ``R~`` and the ratio ``xi``;
4. relaxation ``(phi, mu, u) = eta * (phi~, mu~, u~)`` with
   ``eta = 1 - (1 - xi)**k`` (exponent 2 for ``k = 1``);
5. a pressure Poisson solve whose right side carries ``nu*curl curl u~``;
6. ``R = min(R_old, E(phi, u) + kappa0)``.

The backward-difference part ``A_k`` acts on the intermediate histories
``phi~``, ``u~``; the extrapolation ``B_k`` acts on the relaxed histories
``phi``, ``mu``, ``u``, ``p``.  Both are kept in :class:`SolverState`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction as Fr
from types import SimpleNamespace

from .errors import OrderError, StateError
from .model import (
    bounded_quantity,
    buoyancy_force,
    chemical_potential,
    energy_parts,
    nonlinear_potential_term,
)
from .spectral import (
    VectorField2,
    curl_curl,
    dealiased_product_sum,
    divergence,
    gradient,
    h1_seminorm,
    laplacian,
    linear_combination,
    max_abs,
    mean,
    solve_ch_operator,
    solve_helmholtz,
    solve_poisson_zero_mean,
)

__all__ = [
    "BdfScheme",
    "bdf_scheme",
    "SolverState",
    "StepDiagnostics",
    "initial_state",
    "seeded_state",
    "solve_phase",
    "solve_momentum",
    "compute_xi",
    "sav_ratio",
    "relaxation_factor",
    "pressure_update",
    "sav_update",
    "step",
    "warm_up",
    "integrate",
]

_TABLES = {
    1: (Fr(1), (Fr(1),), (Fr(1),)),
    2: (Fr(3, 2), (Fr(2), Fr(-1, 2)), (Fr(2), Fr(-1))),
    3: (Fr(11, 6), (Fr(3), Fr(-3, 2), Fr(1, 3)), (Fr(3), Fr(-3), Fr(1))),
    4: (
        Fr(25, 12),
        (Fr(4), Fr(-3), Fr(4, 3), Fr(-1, 4)),
        (Fr(4), Fr(-6), Fr(4), Fr(-1)),
    ),
    5: (
        Fr(137, 60),
        (Fr(5), Fr(-5), Fr(10, 3), Fr(-5, 4), Fr(1, 5)),
        (Fr(5), Fr(-10), Fr(10), Fr(-5), Fr(1)),
    ),
}


@dataclass(frozen=True)
class BdfScheme:
    """Order-``k`` IMEX BDF coefficients.

    ``a_weights`` and ``b_weights`` multiply history levels ``n, n-1, ...``
    (newest first).  They are exact rationals; use :meth:`A` and :meth:`B`
    to apply them to fields.
    """

    order: int
    alpha: Fr
    a_weights: tuple
    b_weights: tuple

    def A(self, history):
        return linear_combination([float(w) for w in self.a_weights], history[: self.order])

    def B(self, history):
        return linear_combination([float(w) for w in self.b_weights], history[: self.order])


def bdf_scheme(k):
    if isinstance(k, bool) or int(k) != k or k not in _TABLES:
        raise OrderError(f"BDF order must be in 1..5, got {k!r}")
    alpha, a, b = _TABLES[int(k)]
    return BdfScheme(int(k), alpha, a, b)


@dataclass(frozen=True)
class SolverState:
    """Histories of one simulation, newest level first.

    The ring depth grows by one per step until it reaches ``order``; while
    it is shorter the step runs at the lower order the history supports.
    """

    params: object
    order: int
    t: float
    n: int
    R: float
    energy: float
    phi_tilde: tuple
    u_tilde: tuple
    phi: tuple
    mu: tuple
    u: tuple
    p: tuple

    def __post_init__(self):
        bdf_scheme(self.order)
        if not self.R > 0:
            raise StateError(f"auxiliary variable must be positive, got R={self.R!r}")

    @property
    def grid(self):
        return self.phi[0].grid

    @property
    def depth(self):
        return len(self.phi)

    @property
    def effective_order(self):
        return min(self.order, self.depth)

    @property
    def scheme(self):
        return bdf_scheme(self.effective_order)

    @property
    def warm(self):
        return self.depth >= self.order


@dataclass(frozen=True)
class StepDiagnostics:
    step: int
    t: float
    order: int
    xi: float
    eta: float
    R_tilde: float
    R: float
    original_energy: float
    gap: float
    dissipation: float
    mass: float
    max_div_u: float
    bound: float
    decay_condition: bool
    sigma: float | None = field(default=None)


def _momentum_nonlinear(phi, mu, u, gphi=None):
    """Dealiased ``mu*grad(phi) - (u.grad)u`` as a vector field."""
    if gphi is None:
        gphi = gradient(phi)
    gux = gradient(u.x)
    guy = gradient(u.y)
    w = (1.0, -1.0, -1.0)
    return VectorField2(
        dealiased_product_sum([(mu, gphi.x), (u.x, gux.x), (u.y, gux.y)], 1.5, w),
        dealiased_product_sum([(mu, gphi.y), (u.x, guy.x), (u.y, guy.y)], 1.5, w),
    )


def _relaxed_level(params, phi, u, u_tilde, mu=None, f_u=None):
    if mu is None:
        mu = chemical_potential(phi, params)
    p = pressure_update_fields(params, phi, mu, u, u_tilde, f_u)
    return mu, p


def initial_state(phi0, u0, params, order=1, t=0.0, forcing=None):
    """Cold-start state from initial data.

    ``mu0`` follows from the chemical-potential definition and ``p0`` from
    the pressure Poisson problem with ``u~`` replaced by ``u0``.
    """
    f_u = None
    if forcing is not None:
        _, f_u = forcing(t)
    mu0, p0 = _relaxed_level(params, phi0, u0, u0, f_u=f_u)
    E0, _ = energy_parts(phi0, u0, params)
    return SolverState(
        params=params,
        order=int(order),
        t=float(t),
        n=0,
        R=E0 + params.kappa0,
        energy=E0,
        phi_tilde=(phi0,),
        u_tilde=(u0,),
        phi=(phi0,),
        mu=(mu0,),
        u=(u0,),
        p=(p0,),
    )


def seeded_state(levels, params, order, t):
    """State whose history is filled from given ``(phi, u, p)`` levels.

    ``levels`` is ordered newest first and ``t`` is the time of the newest
    level.  Intermediate and relaxed histories coincide, and ``R`` starts at
    the exact modified energy.
    """
    levels = list(levels)[:order]
    phis = tuple(lv[0] for lv in levels)
    us = tuple(lv[1] for lv in levels)
    ps = tuple(lv[2] for lv in levels)
    mus = tuple(chemical_potential(ph, params) for ph in phis)
    E0, _ = energy_parts(phis[0], us[0], params)
    return SolverState(
        params=params,
        order=int(order),
        t=float(t),
        n=0,
        R=E0 + params.kappa0,
        energy=E0,
        phi_tilde=phis,
        u_tilde=us,
        phi=phis,
        mu=mus,
        u=us,
        p=ps,
    )


def _extrapolate(state):
    sch = state.scheme
    Bphi = sch.B(state.phi)
    return SimpleNamespace(
        scheme=sch,
        Bphi=Bphi,
        gBphi=gradient(Bphi),
        Bmu=sch.B(state.mu),
        Bu=sch.B(state.u),
        Bp=sch.B(state.p),
    )


def solve_phase(state, dt, f_phi=None, ext=None):
    """Return ``(phi~, mu~)`` at the new level."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    ext = ext or _extrapolate(state)
    sch = ext.scheme
    prm = state.params
    alpha = float(sch.alpha)
    adv = dealiased_product_sum([(ext.Bu.x, ext.gBphi.x), (ext.Bu.y, ext.gBphi.y)], 1.5)
    nl = nonlinear_potential_term(ext.Bphi, prm)
    rhs = sch.A(state.phi_tilde) / dt - adv + laplacian(nl) * prm.M
    if f_phi is not None:
        rhs = rhs + f_phi
    c1 = prm.M * prm.lam
    phi_t = solve_ch_operator(alpha / dt, c1, c1 * prm.gamma, rhs)
    mu_t = laplacian(phi_t) * -prm.lam + phi_t * (prm.lam * prm.gamma) + nl
    return phi_t, mu_t


def solve_momentum(state, dt, f_u=None, ext=None):
    """Return ``u~`` at the new level (one Helmholtz solve per component)."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    ext = ext or _extrapolate(state)
    sch = ext.scheme
    prm = state.params
    alpha = float(sch.alpha)
    rhs = (
        sch.A(state.u_tilde) / dt
        + _momentum_nonlinear(ext.Bphi, ext.Bmu, ext.Bu, ext.gBphi)
        - gradient(ext.Bp)
        + buoyancy_force(ext.Bphi, prm)
    )
    if f_u is not None:
        rhs = rhs + f_u
    return VectorField2(
        solve_helmholtz(alpha / dt, prm.nu, rhs.x),
        solve_helmholtz(alpha / dt, prm.nu, rhs.y),
    )


def sav_ratio(R_n, modified_energy, dissipation, dt):
    """Closed-form ``(R~, xi)`` of the linear auxiliary-variable equation.

    ``modified_energy`` is ``E(phi~, u~) + kappa0``.
    """
    if not (modified_energy > 0 and math.isfinite(modified_energy)):
        raise StateError(
            f"E + kappa0 = {modified_energy!r} is not positive; increase kappa0"
        )
    R_tilde = R_n / (1.0 + dt * dissipation / modified_energy)
    return R_tilde, R_tilde / modified_energy


def compute_xi(state, mu_t, phi_t, u_t, dt, ext=None):
    """Return ``(R~, xi, dissipation, E(phi~, u~))`` for the new level."""
    ext = ext or _extrapolate(state)
    prm = state.params
    dissipation = prm.M * h1_seminorm(mu_t) ** 2 + prm.nu * h1_seminorm(ext.Bu) ** 2
    E_t, _ = energy_parts(phi_t, u_t, prm)
    R_tilde, xi = sav_ratio(state.R, E_t + prm.kappa0, dissipation, dt)
    return R_tilde, xi, dissipation, E_t


def relaxation_factor(xi, k):
    if k not in _TABLES:
        raise OrderError(f"BDF order must be in 1..5, got {k!r}")
    return 1.0 - (1.0 - xi) ** (2 if k == 1 else k)


def pressure_update_fields(params, phi, mu, u, u_tilde, f_u=None):
    N = _momentum_nonlinear(phi, mu, u) - curl_curl(u_tilde) * params.nu
    N = N + buoyancy_force(phi, params)
    if f_u is not None:
        N = N + f_u
    return solve_poisson_zero_mean(divergence(N))


def pressure_update(state, phi, mu, u, u_tilde, f_u=None):
    """Pressure from ``lap p = div(mu grad phi - (u.grad)u - nu curl curl u~ + forces)``."""
    return pressure_update_fields(state.params, phi, mu, u, u_tilde, f_u)


def sav_update(R_n, E_new, kappa0):
    return min(R_n, E_new + kappa0)


def sigma_weight(R_n, R_tilde, E_new, E_tilde, dissipation, kappa0, dt):
    """Weight ``sigma`` with ``R_new = sigma*R~ + (1 - sigma)*(E_new + kappa0)``."""
    X = E_new + kappa0
    if R_n >= X:
        return 0.0
    return 1.0 - R_tilde * dissipation * dt / ((E_tilde + kappa0) * (X - R_tilde))


def _finite(*fields):
    return all(f.is_finite() for f in fields)


def step(state, dt, forcing=None, debug=False):
    """Advance one step; returns ``(new_state, StepDiagnostics)``.

    ``forcing`` is an optional callable ``t -> (f_phi, f_u)`` (either may be
    ``None``) evaluated at the new time level and added to the phase and
    momentum equations and to the pressure problem.
    """
    prm = state.params
    t_new = state.t + dt
    f_phi = f_u = None
    if forcing is not None:
        f_phi, f_u = forcing(t_new)

    ext = _extrapolate(state)
    k = ext.scheme.order
    phi_t, mu_t = solve_phase(state, dt, f_phi, ext)
    u_t = solve_momentum(state, dt, f_u, ext)
    if not _finite(phi_t, mu_t, u_t):
        raise StateError(f"non-finite intermediate fields at step {state.n + 1}")

    R_tilde, xi, dissipation, E_tilde = compute_xi(state, mu_t, phi_t, u_t, dt, ext)
    if not xi > 0:
        raise StateError(f"xi = {xi!r} is not positive at step {state.n + 1}")
    eta = relaxation_factor(xi, k)

    phi = phi_t * eta
    mu = mu_t * eta
    u = u_t * eta
    p = pressure_update(state, phi, mu, u, u_t, f_u)
    if not _finite(p):
        raise StateError(f"non-finite pressure at step {state.n + 1}")

    E_new, bulk_F = energy_parts(phi, u, prm)
    if not math.isfinite(E_new):
        raise StateError(f"non-finite energy at step {state.n + 1}")
    if not bulk_F + prm.kappa0 > 1.0:
        raise StateError(
            f"int F + kappa0 = {bulk_F + prm.kappa0:.6g} <= 1 at step {state.n + 1}; "
            "increase kappa0"
        )
    R_new = sav_update(state.R, E_new, prm.kappa0)
    if not (0.0 < R_new <= state.R):
        raise StateError(f"auxiliary variable left (0, R_n]: {R_new!r}")

    decay_condition = E_new + prm.kappa0 <= state.R
    if decay_condition:
        slack = 8 * math.ulp(abs(state.energy) + prm.kappa0)
        if E_new > state.energy + slack:
            raise StateError(
                f"original energy increased from {state.energy!r} to {E_new!r} "
                "although E + kappa0 <= R_n"
            )

    sigma = None
    if debug:
        sigma = sigma_weight(state.R, R_tilde, E_new, E_tilde, dissipation, prm.kappa0, dt)
        X = E_new + prm.kappa0
        rebuilt = sigma * R_tilde + (1.0 - sigma) * X
        if not math.isclose(rebuilt, R_new, rel_tol=1e-10, abs_tol=1e-12 * X):
            raise StateError(f"sigma representation mismatch: {rebuilt!r} vs {R_new!r}")

    depth = state.order

    def push(new, hist):
        return ((new,) + hist)[:depth]

    new_state = replace(
        state,
        t=t_new,
        n=state.n + 1,
        R=R_new,
        energy=E_new,
        phi_tilde=push(phi_t, state.phi_tilde),
        u_tilde=push(u_t, state.u_tilde),
        phi=push(phi, state.phi),
        mu=push(mu, state.mu),
        u=push(u, state.u),
        p=push(p, state.p),
    )
    diag = StepDiagnostics(
        step=new_state.n,
        t=t_new,
        order=k,
        xi=xi,
        eta=eta,
        R_tilde=R_tilde,
        R=R_new,
        original_energy=E_new,
        gap=abs(R_new - (E_new + prm.kappa0)),
        dissipation=dissipation,
        mass=mean(phi),
        max_div_u=max_abs(divergence(u)),
        bound=bounded_quantity(phi, u, prm),
        decay_condition=decay_condition,
        sigma=sigma,
    )
    return new_state, diag


def warm_up(state, dt, k=None, forcing=None):
    """Ramp the order 1, 2, ... until the history supports order ``k``."""
    k = state.order if k is None else k
    if k != state.order:
        state = replace(state, order=int(k))
    while not state.warm:
        state, _ = step(state, dt, forcing)
    return state


def integrate(state, dt, nsteps, forcing=None, callback=None, debug=False):
    """Take ``nsteps`` steps; ``callback(state, diag)`` is called after each."""
    diags = []
    for _ in range(nsteps):
        state, diag = step(state, dt, forcing, debug)
        diags.append(diag)
        if callback is not None:
            callback(state, diag)
    return state, diags
