"""Physical parameters, double-well potential and energy functionals."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spectral import (
    ScalarField,
    VectorField2,
    dealiased_map,
    h1_seminorm,
    l2_norm,
    laplacian,
    padded_mean,
)

__all__ = [
    "ModelParams",
    "potential_G",
    "potential_G_prime",
    "potential_F",
    "potential_F_prime",
    "chemical_potential",
    "nonlinear_potential_term",
    "energy",
    "energy_parts",
    "bulk_F_integral",
    "bounded_quantity",
    "dissipation_rate",
    "buoyancy_force",
]


@dataclass(frozen=True)
class ModelParams:
    """Constants of the Cahn-Hilliard-Navier-Stokes model.

    ``gamma`` is the stabilising quadratic split of the double well and
    ``kappa0`` the shift keeping the auxiliary energy variable positive.
    A zero ``chi`` disables buoyancy.
    """

    lam: float
    M: float
    eps: float
    nu: float
    gamma: float = 0.0
    kappa0: float = 1.0
    chi: float = 0.0
    gravity: tuple = field(default=(0.0, -1.0))

    def __post_init__(self):
        for name in ("lam", "M", "eps", "nu", "kappa0"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
        for name in ("gamma", "chi"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be nonnegative, got {v!r}")
        g = tuple(float(c) for c in self.gravity)
        if len(g) != 2:
            raise ValueError("gravity must be a 2-vector")
        object.__setattr__(self, "gravity", g)


def potential_G(phi, eps):
    return (1.0 - phi**2) ** 2 / (4.0 * eps**2)


def potential_G_prime(phi, eps):
    return (phi**3 - phi) / eps**2


def potential_F(phi, eps, gamma):
    return potential_G(phi, eps) - 0.5 * gamma * phi**2


def potential_F_prime(phi, eps, gamma):
    return potential_G_prime(phi, eps) - gamma * phi


def nonlinear_potential_term(phi, params):
    """Dealiased ``lam * F'(phi)`` (cubic, padded by a factor 2)."""
    lam, eps, gamma = params.lam, params.eps, params.gamma
    return dealiased_map(phi, lambda s: lam * potential_F_prime(s, eps, gamma), 2.0)


def chemical_potential(phi, params):
    """``mu = -lam*lap(phi) + lam*gamma*phi + lam*F'(phi)``, i.e. ``-lam*lap(phi) + lam*G'(phi)``."""
    return (
        laplacian(phi) * -params.lam
        + phi * (params.lam * params.gamma)
        + nonlinear_potential_term(phi, params)
    )


def bulk_F_integral(phi, params):
    """``int F(phi) dx`` evaluated by quadrature on the 2x padded grid."""
    eps, gamma = params.eps, params.gamma
    return phi.grid.area * padded_mean(phi, lambda s: potential_F(s, eps, gamma), 2.0)


def energy(phi, u, params):
    """Original total energy ``int 1/2|u|^2 + lam/2|grad phi|^2 + lam*G(phi)``.

    Evaluated through the split form ``lam*gamma/2 phi^2 + lam*F(phi)``; the
    two forms agree to rounding.
    """
    return energy_parts(phi, u, params)[0]


def energy_parts(phi, u, params):
    """Return ``(energy, int F(phi) dx)``; both potential terms share one padded quadrature."""
    eps, gamma = params.eps, params.gamma
    shape = phi.grid.padded_shape(2.0)
    s = phi.padded(shape)
    area = phi.grid.area
    bulk_F = area * float(np.mean(potential_F(s, eps, gamma)))
    quadratic = area * float(np.mean(s * s)) * 0.5 * gamma
    kinetic = 0.5 * l2_norm(u) ** 2
    interfacial = 0.5 * params.lam * h1_seminorm(phi) ** 2
    return kinetic + interfacial + params.lam * (quadratic + bulk_F), bulk_F


def bounded_quantity(phi, u, params):
    """``||u||^2 + lam*||grad phi||^2 + lam*gamma*||phi||^2``, uniformly bounded in time."""
    return (
        l2_norm(u) ** 2
        + params.lam * h1_seminorm(phi) ** 2
        + params.lam * params.gamma * l2_norm(phi) ** 2
    )


def dissipation_rate(mu, u, params):
    """Magnitude ``M*||grad mu||^2 + nu*||grad u||^2`` of the energy decay rate."""
    return params.M * h1_seminorm(mu) ** 2 + params.nu * h1_seminorm(u) ** 2


def buoyancy_force(phi, params):
    """Boussinesq force ``chi*(phi - mean(phi))*g``; zero when ``chi == 0``."""
    grid = phi.grid
    if params.chi == 0.0:
        return VectorField2.zeros(grid)
    c = phi.coeffs.copy()
    c[0, 0] = 0.0
    rho = ScalarField(grid, coeffs=c)
    gx, gy = params.gravity
    return VectorField2(rho * (params.chi * gx), rho * (params.chi * gy))

