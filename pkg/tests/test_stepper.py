import math
from fractions import Fraction

import numpy as np
import pytest

from chns_gsav.errors import OrderError, StateError
from chns_gsav.model import ModelParams, energy
from chns_gsav.spectral import Grid2, ScalarField, VectorField2, l2_norm
from chns_gsav.stepper import (
    SolverState,
    bdf_scheme,
    initial_state,
    integrate,
    relaxation_factor,
    sav_ratio,
    sav_update,
    seeded_state,
    solve_momentum,
    solve_phase,
    step,
    warm_up,
)
from chns_gsav.stepper import pressure_update_fields
from chns_gsav.verification import (
    ManufacturedForcing,
    error_norms,
    benchmark_grid,
    benchmark_params,
    benchmark_solution,
    sample,
)
from dense_oracle import DenseGrid, DenseStep, bdf_coefficients

PI = np.pi


# BDF tables -------------------------------------------------------------------------
@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_bdf_tables_match_polynomial_exactness(k):
    s = bdf_scheme(k)
    alpha, a, b = bdf_coefficients(k)
    assert s.alpha == alpha
    assert list(s.a_weights) == a
    assert list(s.b_weights) == b


def test_bdf_examples():
    s2 = bdf_scheme(2)
    assert s2.alpha == Fraction(3, 2)
    assert s2.a_weights == (2, Fraction(-1, 2)) and s2.b_weights == (2, -1)
    assert bdf_scheme(4).b_weights == (4, -6, 4, -1)


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_bdf_constant_history(k):
    g = Grid2(8, 8)
    c = ScalarField.constant(g, 2.5)
    s = bdf_scheme(k)
    np.testing.assert_allclose(s.A([c] * k).samples, float(s.alpha) * 2.5, rtol=1e-14)
    np.testing.assert_allclose(s.B([c] * k).samples, 2.5, rtol=1e-14)


@pytest.mark.parametrize("bad", [0, 6, 2.5, True, -1])
def test_bdf_order_range(bad):
    with pytest.raises(OrderError):
        bdf_scheme(bad)
    with pytest.raises(ValueError):  # OrderError is a ValueError
        bdf_scheme(bad)


# helpers --------------------------------------------------------------------------
def _params(**kw):
    base = dict(lam=0.1, M=0.02, eps=0.6, gamma=1.5, nu=0.05, kappa0=2.0)
    base.update(kw)
    return ModelParams(**base)


def _const_state(grid, params, phi_value, order=1):
    phi = ScalarField.constant(grid, phi_value)
    return initial_state(phi, VectorField2.zeros(grid), params, order=order)


# sub-steps ------------------------------------------------------------------------
def test_solve_phase_zero_history():
    g = Grid2(16, 16)
    st = _const_state(g, _params(), 0.0)
    phi_t, mu_t = solve_phase(st, 1e-2)
    assert np.max(np.abs(phi_t.samples)) == 0 and np.max(np.abs(mu_t.samples)) == 0


def test_solve_phase_pure_phase_equilibrium():
    g = Grid2(16, 16)
    st = _const_state(g, _params(gamma=0.0), 1.0)
    phi_t, mu_t = solve_phase(st, 1e-2)
    np.testing.assert_allclose(phi_t.samples, 1.0, atol=1e-14)
    np.testing.assert_allclose(mu_t.samples, 0.0, atol=1e-13)


def test_solve_momentum_trivial():
    g = Grid2(16, 16)
    for value in (0.0, 0.4):
        u_t = solve_momentum(_const_state(g, _params(chi=3.0), value), 1e-2)
        assert np.max(np.abs(u_t.x.samples)) < 1e-15 and np.max(np.abs(u_t.y.samples)) < 1e-15


def test_sub_steps_reject_bad_dt():
    g = Grid2(8, 8)
    st = _const_state(g, _params(), 0.0)
    with pytest.raises(ValueError):
        solve_phase(st, 0.0)
    with pytest.raises(ValueError):
        solve_momentum(st, -1.0)


def test_sav_ratio_examples():
    R_t, xi = sav_ratio(3.0, 7.0, 0.0, 0.1)
    assert R_t == 3.0 and xi == pytest.approx(3 / 7)
    R_t, xi = sav_ratio(7.0, 7.0, 0.0, 0.1)
    assert xi == 1.0
    # dt * D / (E + kappa0) = 0.25
    R_t, xi = sav_ratio(5.0, 4.0, 10.0, 0.1)
    assert R_t == pytest.approx(4.0) and xi == pytest.approx(1.0)
    with pytest.raises(StateError):
        sav_ratio(1.0, -0.5, 0.0, 0.1)


def test_relaxation_factor_examples():
    for k in range(1, 6):
        assert relaxation_factor(1.0, k) == 1.0
    assert relaxation_factor(0.0, 1) == 0.0
    assert relaxation_factor(0.9, 3) == pytest.approx(0.999)
    assert relaxation_factor(0.9, 1) == pytest.approx(0.99)
    with pytest.raises(OrderError):
        relaxation_factor(0.5, 7)


def test_sav_update_examples():
    assert sav_update(5.0, 3.0, 1.0) == 4.0
    assert sav_update(3.0, 3.0, 1.0) == 3.0
    assert sav_update(4.0, 3.0, 1.0) == 4.0


def test_pressure_zero_fields():
    g = Grid2(16, 16)
    z = ScalarField.zeros(g)
    p = pressure_update_fields(_params(), z, z, VectorField2.zeros(g), VectorField2.zeros(g))
    assert np.max(np.abs(p.samples)) == 0


def test_pressure_inverts_gradient_right_side():
    # mu = 1 makes mu grad(phi) = grad(h) with h = phi
    g = Grid2(32, 32, 2.0, 2.0, -1.0, -1.0)
    h = ScalarField.from_function(g, lambda x, y: 0.3 + np.sin(PI * x) * np.cos(2 * PI * y))
    one = ScalarField.constant(g, 1.0)
    zero_u = VectorField2.zeros(g)
    p = pressure_update_fields(_params(), h, one, zero_u, zero_u)
    np.testing.assert_allclose(p.samples, h.samples - 0.3, atol=1e-12)


# dense oracle -----------------------------------------------------------------------
def _random_state(k, grid, params, rng):
    def rnd(a):
        return ScalarField(grid, a * rng.standard_normal(grid.shape))

    def vec(a):
        return VectorField2(rnd(a), rnd(a))

    phi_t = tuple(rnd(0.5) for _ in range(k))
    u_t = tuple(vec(0.1) for _ in range(k))
    phi = tuple(rnd(0.5) for _ in range(k))
    mu = tuple(rnd(0.3) for _ in range(k))
    u = tuple(vec(0.1) for _ in range(k))
    p = tuple(rnd(0.2) for _ in range(k))
    E = energy(phi[0], u[0], params)
    return SolverState(params, k, 0.0, 7, E + params.kappa0 + 0.01, E, phi_t, u_t, phi, mu, u, p)


def dense_reference(state, dt):
    g = state.grid
    prm = state.params
    D = DenseGrid(g.nx, g.ny, g.Lx, g.Ly)
    ref = DenseStep(D, prm.lam, prm.M, prm.eps, prm.gamma, prm.nu, prm.kappa0, prm.chi, prm.gravity)

    def f(s):
        return s.samples.ravel()

    def fv(v):
        return (f(v.x), f(v.y))

    return ref.step(
        state.order,
        dt,
        state.R,
        [f(x) for x in state.phi_tilde],
        [fv(x) for x in state.u_tilde],
        [f(x) for x in state.phi],
        [f(x) for x in state.mu],
        [fv(x) for x in state.u],
        [f(x) for x in state.p],
    )


@pytest.mark.parametrize("k", [1, 2, 3])
def test_step_matches_dense_oracle(k):
    g = Grid2(8, 8, 2 * PI, 3.0)
    prm = _params(chi=2.0, gravity=(0.3, -1.0))
    st = _random_state(k, g, prm, np.random.default_rng(100 + k))
    dt = 1e-2
    new, d = step(st, dt)
    ref = dense_reference(st, dt)
    tol = 1e-10
    pairs = [
        (new.phi_tilde[0], ref["phi_tilde"]),
        (new.phi[0], ref["phi"]),
        (new.mu[0], ref["mu"]),
        (new.u_tilde[0].x, ref["u_tilde"][0]),
        (new.u_tilde[0].y, ref["u_tilde"][1]),
        (new.u[0].x, ref["u"][0]),
        (new.u[0].y, ref["u"][1]),
        (new.p[0], ref["p"]),
    ]
    for got, want in pairs:
        assert np.max(np.abs(got.samples.ravel() - want)) < tol
    for key, val in (("xi", d.xi), ("eta", d.eta), ("R_tilde", d.R_tilde), ("R", d.R)):
        assert abs(val - ref[key]) < tol * max(1.0, abs(ref[key])), key
    assert abs(d.original_energy - ref["E"]) < tol * max(1.0, ref["E"])


def test_sub_steps_match_dense_oracle():
    g = Grid2(8, 8, 2 * PI, 3.0)
    prm = _params(chi=1.0)
    st = _random_state(1, g, prm, np.random.default_rng(7))
    ref = dense_reference(st, 0.05)
    phi_t, mu_t = solve_phase(st, 0.05)
    u_t = solve_momentum(st, 0.05)
    assert np.max(np.abs(phi_t.samples.ravel() - ref["phi_tilde"])) < 1e-10
    assert np.max(np.abs(mu_t.samples.ravel() - ref["mu_tilde"])) < 1e-10
    assert np.max(np.abs(u_t.x.samples.ravel() - ref["u_tilde"][0])) < 1e-10
    assert np.max(np.abs(u_t.y.samples.ravel() - ref["u_tilde"][1])) < 1e-10


# whole steps -----------------------------------------------------------------------
def test_zero_state_is_fixed_point():
    g = Grid2(16, 16)
    prm = _params()
    st = _const_state(g, prm, 0.0, order=2)
    assert st.R == pytest.approx(energy(st.phi[0], st.u[0], prm) + prm.kappa0)
    for _ in range(3):
        st, d = step(st, 1e-2)
        assert d.xi == 1.0 and d.eta == 1.0
        assert np.max(np.abs(st.phi[0].samples)) == 0
        assert np.max(np.abs(st.u[0].x.samples)) == 0
        assert d.R == st.R


def test_order_ramp_and_warm_up():
    g = Grid2(16, 16)
    prm = _params()
    phi0 = ScalarField(g, 0.1 * np.random.default_rng(1).standard_normal(g.shape))
    st = initial_state(phi0, VectorField2.zeros(g), prm, order=3)
    assert not st.warm and st.effective_order == 1
    orders = []
    for _ in range(4):
        st, d = step(st, 1e-3)
        orders.append(d.order)
    assert orders == [1, 2, 3, 3]
    assert st.depth == 3

    st1 = initial_state(phi0, VectorField2.zeros(g), prm, order=1)
    assert st1.warm and warm_up(st1, 1e-3) is st1
    st3 = warm_up(initial_state(phi0, VectorField2.zeros(g), prm), 1e-3, k=3)
    assert st3.warm and st3.n == 2 and st3.t == pytest.approx(2e-3)


def test_seeded_history_levels():
    ms = benchmark_solution()
    g = benchmark_grid(16)
    prm = benchmark_params()
    dt = 0.01
    levels = [sample(ms, j * dt, g) for j in (2, 1, 0)]
    st = seeded_state(levels, prm, 3, 2 * dt)
    assert st.warm and st.depth == 3
    for j, phi in enumerate(st.phi):
        np.testing.assert_array_equal(phi.samples, sample(ms, (2 - j) * dt, g)[0].samples)


def test_both_min_branches_and_debug_sigma():
    g = Grid2(8, 8, 2 * PI, 3.0)
    prm = _params()
    rng = np.random.default_rng(21)
    st = _random_state(1, g, prm, rng)

    # R_n far above E + kappa0: the energy branch is taken and sigma is 0
    high = SolverState(**{**st.__dict__, "R": st.R + 5.0})
    new, d = step(high, 1e-3, debug=True)
    assert d.R == pytest.approx(d.original_energy + prm.kappa0, rel=0, abs=0)
    assert d.sigma == 0.0 and d.decay_condition

    # R_n below E + kappa0: R is carried over
    low = SolverState(**{**st.__dict__, "R": st.R - 0.5})
    new, d = step(low, 1e-3, debug=True)
    assert d.R == low.R
    assert d.sigma is not None and not d.decay_condition
    assert math.isfinite(d.sigma)


def test_step_rejects_non_finite_state():
    g = Grid2(8, 8)
    prm = _params()
    bad = np.zeros(g.shape)
    bad[2, 3] = np.nan
    st = initial_state(ScalarField(g, np.zeros(g.shape)), VectorField2.zeros(g), prm)
    st = SolverState(**{**st.__dict__, "phi_tilde": (ScalarField(g, bad),)})
    with pytest.raises(StateError):
        step(st, 1e-3)


def test_step_rejects_small_kappa0():
    # phi = 1 with gamma > 0 gives int F = -gamma/2 |Omega| < 0
    g = Grid2(8, 8)
    st = _const_state(g, _params(gamma=10.0, kappa0=1.0), 1.0)
    with pytest.raises(StateError, match="kappa0"):
        step(st, 1e-3)


def test_state_requires_positive_R():
    g = Grid2(8, 8)
    st = _const_state(g, _params(), 0.0)
    with pytest.raises(StateError):
        SolverState(**{**st.__dict__, "R": 0.0})


def test_monotone_R_and_bounded_quantity():
    g = Grid2(32, 32)
    prm = ModelParams(lam=1e-2, M=1e-2, eps=0.05, gamma=400.0, nu=0.1, kappa0=1e3)
    rng = np.random.default_rng(31)
    phi0 = ScalarField(g, 0.2 * rng.standard_normal(g.shape)).without_nyquist()
    st = initial_state(phi0, VectorField2.zeros(g), prm, order=2)
    R = [st.R]
    st, diags = integrate(st, 1e-3, 200)
    R += [d.R for d in diags]
    assert all(d.xi > 0 for d in diags)
    assert all(0 < b <= a for a, b in zip(R, R[1:]))
    bounds = [d.bound for d in diags]
    assert max(bounds) <= 10 * max(bounds[:20])


def test_integrate_callback():
    g = Grid2(8, 8)
    seen = []
    st = _const_state(g, _params(), 0.0)
    integrate(st, 1e-3, 4, callback=lambda s, d: seen.append(d.step))
    assert seen == [1, 2, 3, 4]


# manufactured local / global accuracy -------------------------------------------------
def _one_step_error(dt, t0=0.1, n=24):
    ms = benchmark_solution()
    g = benchmark_grid(n)
    prm = benchmark_params()
    st = seeded_state([sample(ms, t0, g)], prm, 1, t0)
    new, _ = step(st, dt, ManufacturedForcing(ms, prm, g))
    e = error_norms(new, ms, t0 + dt)
    return e["err_phi_l2"], e["err_u_l2"]


def test_local_error_is_second_order():
    e1 = _one_step_error(1e-2)
    e2 = _one_step_error(5e-3)
    for a, b in zip(e1, e2):
        assert a / b == pytest.approx(4.0, abs=0.5)


def _global_error(dt, cold, n=24, t_end=0.2):
    ms = benchmark_solution()
    g = benchmark_grid(n)
    prm = benchmark_params()
    forcing = ManufacturedForcing(ms, prm, g)
    if cold:
        phi0, u0, _ = sample(ms, 0.0, g)
        st = initial_state(phi0, u0, prm, order=2, forcing=forcing)
        steps = round(t_end / dt)
    else:
        st = seeded_state([sample(ms, dt, g), sample(ms, 0.0, g)], prm, 2, dt)
        steps = round(t_end / dt) - 1
    st, _ = integrate(st, dt, steps, forcing)
    e = error_norms(st, ms, t_end)
    return e["err_phi_l2"], e["err_u_l2"]


@pytest.mark.parametrize("cold", [False, True], ids=["seeded", "cold"])
def test_second_order_global_cold_and_seeded(cold):
    a = _global_error(1e-2, cold)
    b = _global_error(5e-3, cold)
    c = _global_error(2.5e-3, cold)
    for i in range(2):
        order = math.log2(b[i] / c[i])
        assert order == pytest.approx(2.0, abs=0.25)
        assert a[i] > b[i] > c[i]


def test_initial_pressure_from_forcing_balance():
    # the cold-start pressure solves the same Poisson problem as a regular step
    ms = benchmark_solution()
    g = benchmark_grid(24)
    prm = benchmark_params()
    forcing = ManufacturedForcing(ms, prm, g)
    phi0, u0, p0 = sample(ms, 0.3, g)
    st = initial_state(phi0, u0, prm, t=0.3, forcing=forcing)
    assert l2_norm(st.p[0] - p0) < 1e-10
