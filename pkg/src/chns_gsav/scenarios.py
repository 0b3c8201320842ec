"""Initial conditions and run presets for the benchmark simulations.

Bubbles and droplets are the ``phi = -1`` phase embedded in a ``phi = +1``
background.  With the Boussinesq force ``chi*(phi - mean(phi))*g`` this is
the sign under which the preset gravity vectors make the bubble rise
(``g = (0, -1)``) and the droplet fall (``g = (0, 1)``).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

from .errors import UnknownScenario
from .model import ModelParams
from .spectral import Grid2, ScalarField, VectorField2

__all__ = [
    "Scenario",
    "PRESETS",
    "preset",
    "preset_names",
    "init_shape_relaxation",
    "init_phase_separation",
    "init_bubble",
    "init_droplet",
    "inclusion_mask",
    "periodic_centroid",
    "count_components",
]

SQRT2 = np.sqrt(2.0)


def _periodic_delta(a, center, length):
    d = a - center
    return d - length * np.round(d / length)


def _profile(grid, signed_distance, eps):
    """Tanh profile ``+1`` where ``signed_distance > 0``, Nyquist modes removed."""
    return ScalarField(grid, np.tanh(signed_distance / (SQRT2 * eps))).without_nyquist()


def init_shape_relaxation(case, grid, eps=1e-2, r0=0.25, amplitude=0.25, center=(0.5, 0.5)):
    """Star-shaped drop: ``m = 4`` lobes for case 1, ``m = 6`` for case 2."""
    if case not in (1, 2):
        raise ValueError("shape relaxation case must be 1 or 2")
    m = 4 if case == 1 else 6
    X, Y = grid.mesh()
    dx = _periodic_delta(X, center[0], grid.Lx)
    dy = _periodic_delta(Y, center[1], grid.Ly)
    r = np.hypot(dx, dy)
    theta = np.arctan2(dy, dx)
    return _profile(grid, r0 * (1.0 + amplitude * np.cos(m * theta)) - r, eps)


def init_phase_separation(grid, seed=20240601, noise=0.01):
    """``2*y - 1`` on the unit-height domain plus uniform noise in ``[-noise, noise]``."""
    rng = np.random.Generator(np.random.PCG64(seed))
    X, Y = grid.mesh()
    s = (Y - grid.y0) / grid.Ly
    samples = 2.0 * s - 1.0 + noise * rng.uniform(-1.0, 1.0, grid.shape)
    return ScalarField(grid, samples).without_nyquist()


def init_bubble(grid, eps=1e-2, r0=0.15, center=(0.5, 0.25)):
    """Circular bubble (``phi = -1`` inside) in a ``phi = +1`` background."""
    X, Y = grid.mesh()
    r = np.hypot(_periodic_delta(X, center[0], grid.Lx), _periodic_delta(Y, center[1], grid.Ly))
    return _profile(grid, r - r0, eps)


def init_droplet(grid, eps=1e-2, r0=0.2, center=(0.5, 1.0), film=0.06):
    """Semicircular droplet hanging from the top edge (``phi = -1`` inside).

    The periodic domain has no wall, so the droplet hangs from a film of the
    same phase of thickness ``film`` centred on the periodic top edge; the
    film is what the droplet pinches off from.  Only the half disk below
    ``center`` is kept.
    """
    X, Y = grid.mesh()
    top = grid.y0 + grid.Ly
    dx = _periodic_delta(X, center[0], grid.Lx)
    dy = _periodic_delta(Y, center[1], grid.Ly)
    half_disk = np.minimum(r0 - np.hypot(dx, dy), -dy)
    band = 0.5 * film - np.abs(_periodic_delta(Y, top, grid.Ly))
    inside = np.maximum(half_disk, band)
    return _profile(grid, -inside, eps)


@dataclass(frozen=True)
class Scenario:
    name: str
    params: ModelParams
    grid: Grid2
    dt: float
    t_end: float
    init: object  # callable (grid, seed) -> ScalarField
    seed: int = 20240601
    buoyancy: bool = False
    description: str = ""
    extra: dict = field(default_factory=dict)

    def initial_fields(self, seed=None):
        phi = self.init(self.grid, self.seed if seed is None else seed)
        return phi, VectorField2.zeros(self.grid)

    def with_params(self, **changes):
        return replace(self, params=replace(self.params, **changes))


def _unit_grid(n=128):
    return Grid2(n, n, 1.0, 1.0)


def _shape(case):
    return Scenario(
        name=f"shape{case}",
        params=ModelParams(lam=1e-2, M=1e-3, eps=1e-2, gamma=2e4, nu=1.0, kappa0=1e5),
        grid=_unit_grid(),
        dt=5e-4,
        t_end=1.5,
        init=lambda grid, seed: init_shape_relaxation(case, grid),
        description=f"shape relaxation of a {4 if case == 1 else 6}-lobed drop",
    )


def _separation():
    return Scenario(
        name="separation",
        params=ModelParams(lam=1e-5, M=1e-1, eps=1e-2, gamma=2e4, nu=1.0, kappa0=1e5),
        grid=_unit_grid(),
        dt=1e-3,
        t_end=4.0,
        init=lambda grid, seed: init_phase_separation(grid, seed),
        description="flow-coupled phase separation from a noisy linear profile",
    )


def _bubble():
    return Scenario(
        name="bubble",
        params=ModelParams(
            lam=1e-3, M=1e-2, eps=1e-2, gamma=2e4, nu=1.0, kappa0=1e5, chi=50.0, gravity=(0.0, -1.0)
        ),
        grid=_unit_grid(),
        dt=5e-4,
        t_end=4.0,
        init=lambda grid, seed: init_bubble(grid),
        buoyancy=True,
        description="buoyancy-driven rising bubble",
    )


def _droplet(name, nu, t_end):
    return Scenario(
        name=name,
        params=ModelParams(
            lam=1e-3, M=1e-2, eps=1e-2, gamma=2e4, nu=nu, kappa0=1e5, chi=10.0, gravity=(0.0, 1.0)
        ),
        grid=_unit_grid(),
        dt=1e-3,
        t_end=t_end,
        init=lambda grid, seed: init_droplet(grid),
        buoyancy=True,
        description=f"dripping droplet, nu = {nu:g}",
    )


def _droplet_spike():
    eps = 7.5e-3
    return Scenario(
        name="droplet_spike",
        params=ModelParams(
            lam=1e-5,
            M=1e-1,
            eps=eps,
            gamma=2.0 / eps**2,
            nu=5e-2,
            kappa0=1e5,
            chi=10.0,
            gravity=(0.0, 1.0),
        ),
        grid=_unit_grid(),
        dt=1e-3,
        t_end=0.9,
        init=lambda grid, seed: init_droplet(grid, eps=eps),
        buoyancy=True,
        description="elongated dripping filament with spike formation",
    )


PRESETS = {
    "shape1": lambda: _shape(1),
    "shape2": lambda: _shape(2),
    "separation": _separation,
    "bubble": _bubble,
    "droplet_re10": lambda: _droplet("droplet_re10", 1 / 10, 2.0),
    "droplet_re50": lambda: _droplet("droplet_re50", 1 / 50, 1.0),
    "droplet_re100": lambda: _droplet("droplet_re100", 1 / 100, 1.0),
    "droplet_spike": _droplet_spike,
}


def preset_names():
    return list(PRESETS)


def preset(name):
    try:
        return PRESETS[name]()
    except KeyError:
        raise UnknownScenario(
            f"unknown scenario {name!r}; choose from {', '.join(PRESETS)}"
        ) from None


# analysis helpers ---------------------------------------------------------------
def inclusion_mask(phi):
    """Cells occupied by the embedded (``phi < 0``) phase."""
    return phi.samples < 0.0


def periodic_centroid(mask, grid):
    """Centroid of ``mask`` using circular means along each periodic axis."""
    if not mask.any():
        raise ValueError("empty mask has no centroid")
    X, Y = grid.mesh()
    out = []
    for coord, origin, length in ((X, grid.x0, grid.Lx), (Y, grid.y0, grid.Ly)):
        ang = 2 * np.pi * (coord[mask] - origin) / length
        a = np.arctan2(np.sin(ang).sum(), np.cos(ang).sum()) % (2 * np.pi)
        out.append(origin + length * a / (2 * np.pi))
    return tuple(out)


def unwrap_periodic(values, length):
    """Lift a sequence of periodic coordinates to a continuous path."""
    values = np.asarray(values, dtype=float)
    return np.unwrap(values * (2 * np.pi / length)) * (length / (2 * np.pi))


def count_components(mask, min_size=1):
    """Number of 4-connected components of ``mask`` on the doubly periodic grid."""
    labels, n = ndimage.label(mask)
    if n == 0:
        return 0
    parent = list(range(n + 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union_edges(a, b):
        for la, lb in zip(a, b):
            if la and lb:
                ra, rb = find(la), find(lb)
                if ra != rb:
                    parent[rb] = ra

    union_edges(labels[0, :], labels[-1, :])
    union_edges(labels[:, 0], labels[:, -1])
    sizes = {}
    for lab, cnt in zip(*np.unique(labels[labels > 0], return_counts=True)):
        root = find(int(lab))
        sizes[root] = sizes.get(root, 0) + int(cnt)
    return sum(1 for s in sizes.values() if s >= min_size)
