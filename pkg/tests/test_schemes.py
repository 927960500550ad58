import numpy as np
import pytest

from bbmb_ttcd import ops
from bbmb_ttcd.compact import CompactOperator
from bbmb_ttcd.diagnostics import energy_series
from bbmb_ttcd.errors import Diverged, NonConvergence
from bbmb_ttcd.mesh import make_space_grid
from bbmb_ttcd.problems import builtin_problems, manufactured_exact, soliton_phi
from bbmb_ttcd.schemes import (
    IterationPolicy,
    PdeParams,
    StateLevel,
    initial_level,
    linearized_step,
    ncd_residual,
    ncd_step,
    picard_iterate,
    solve_ncd,
    source_term,
)

ZERO = lambda x: 0.0 * x  # noqa: E731


def smooth_setup(M=16, mu=1.0, lam=0.5):
    grid = make_space_grid(0.0, 2.0, M)
    params = PdeParams(mu, lam, lambda x: 0.8 * np.sin(np.pi * x) + 0.3 * np.cos(2 * np.pi * x))
    return grid, params, initial_level(grid, params)


def picard_equation(prev, guess, new, p, tau, f, h):
    """Defect of one fixed-point iterate, written with the plain operators."""
    U, W, u0, w0, um = new.u, new.w, prev.u, prev.w, guess.u
    conv = 0.25 * (ops.psi(U, um, h) + ops.psi(U, u0, h) + ops.psi(u0, U, h) + ops.psi(u0, u0, h))
    corr = 0.25 * (ops.psi(W, um, h) + ops.psi(W, u0, h) + ops.psi(w0, U, h) + ops.psi(w0, u0, h))
    return ((U - u0) / tau - p.mu * (W - w0) / tau + conv - 0.5 * h * h * corr
            + ops.delta_x_central(0.5 * (U + u0), h) - h * h / 6 * ops.delta_x_central(0.5 * (W + w0), h)
            - p.lam * 0.5 * (W + w0) - f)


def linear_equation(prev, a, b, new, p, tau, f, h):
    uh, wh = 0.5 * (new.u + prev.u), 0.5 * (new.w + prev.w)
    return ((new.u - prev.u) / tau - p.mu * (new.w - prev.w) / tau + ops.psi(a, uh, h)
            - 0.5 * h * h * ops.psi(b, uh, h) + ops.delta_x_central(uh, h)
            - h * h / 6 * ops.delta_x_central(wh, h) - p.lam * wh - f)


def test_params_validation():
    with pytest.raises(ValueError):
        PdeParams(0.0, 1.0, ZERO)
    with pytest.raises(ValueError):
        PdeParams(1.0, -1.0, ZERO)
    p = PdeParams(1.0, 1.0, np.sin).perturbed(lambda x: 0 * x + 2.0)
    assert p.phi(0.0) == 2.0


def test_policy_validation():
    with pytest.raises(ValueError):
        IterationPolicy(tol=0)
    with pytest.raises(ValueError):
        IterationPolicy(max_iter=0)
    assert IterationPolicy().tol == 1e-12 and IterationPolicy().max_iter == 200


def test_source_rules():
    grid = make_space_grid(0, 1, 4)
    p = PdeParams(1, 1, ZERO, source=lambda x, t: x * t * t)
    np.testing.assert_allclose(source_term(grid, p, 0.0, 1.0, "midpoint"), grid.x * 0.25)
    np.testing.assert_allclose(source_term(grid, p, 0.0, 1.0, "average"), grid.x * 0.5)
    np.testing.assert_array_equal(source_term(grid, PdeParams(1, 1, ZERO), 0, 1), 0)
    with pytest.raises(ValueError):
        source_term(grid, p, 0, 1, "left")


def test_initial_level():
    grid = make_space_grid(0, 2, 8)
    lvl = initial_level(grid, PdeParams(1, 1, ZERO))
    assert np.all(lvl.u == 0) and np.all(lvl.w == 0) and lvl.t == 0
    with pytest.raises(ValueError):
        initial_level(grid, PdeParams(1, 1, lambda x: np.where(x > 1.0, np.nan, x)))


def test_initial_level_fourth_order():
    errs = []
    for M in (48, 96, 192):
        grid = make_space_grid(0, 2, M)
        lvl = initial_level(grid, PdeParams(1, 1, lambda x: np.sin(np.pi * x)))
        errs.append(np.max(np.abs(lvl.w + np.pi ** 2 * lvl.u)))
    assert all(14 < a / b < 18 for a, b in zip(errs, errs[1:]))


def test_picard_fixed_points():
    grid = make_space_grid(0, 2, 10)
    p = PdeParams(1, 1, ZERO)
    zero = StateLevel(np.zeros(10), np.zeros(10), 0.0)
    out = picard_iterate(zero, zero, p, 0.1, np.zeros(10), grid)
    np.testing.assert_array_equal(out.u, 0)
    c = StateLevel(np.full(10, 1.7), np.zeros(10), 0.0)
    out = picard_iterate(c, c, p, 0.1, np.zeros(10), grid)
    np.testing.assert_allclose(out.u, 1.7, atol=1e-13)
    np.testing.assert_allclose(out.w, 0, atol=1e-12)


def test_picard_solves_its_linear_equation():
    grid, p, lvl0 = smooth_setup()
    f = np.sin(grid.x)
    guess = StateLevel(lvl0.u * 1.1, lvl0.w * 1.1, 0.0)
    new = picard_iterate(lvl0, guess, p, 0.05, f, grid)
    assert np.max(np.abs(picard_equation(lvl0, guess, new, p, 0.05, f, grid.h))) <= 1e-11
    assert CompactOperator(grid).residual(new.u, new.w) <= 1e-11


def test_picard_reduces_nonlinear_residual():
    grid, p, lvl0 = smooth_setup()
    f = np.zeros(grid.M)
    before = ncd_residual(lvl0, lvl0, p, 0.1, f, grid)
    one = picard_iterate(lvl0, lvl0, p, 0.1, f, grid)
    after = ncd_residual(lvl0, one, p, 0.1, f, grid)
    assert after < 0.1 * before


def test_ncd_step_zero_state():
    grid = make_space_grid(0, 2, 8)
    zero = StateLevel(np.zeros(8), np.zeros(8), 0.0)
    lvl, m = ncd_step(zero, PdeParams(1, 1, ZERO), 0.1, IterationPolicy(), np.zeros(8), grid)
    assert m == 1 and np.all(lvl.u == 0)


def test_ncd_step_residual_small():
    grid, p, lvl0 = smooth_setup(M=64)
    policy = IterationPolicy()
    tau = 0.05
    f = np.cos(np.pi * grid.x)
    lvl, m = ncd_step(lvl0, p, tau, policy, f, grid)
    assert 1 < m <= 60
    assert ncd_residual(lvl0, lvl, p, tau, f, grid) <= 10 * policy.tol / tau


def test_ncd_step_nonconvergence():
    grid, p, lvl0 = smooth_setup()
    with pytest.raises(NonConvergence) as info:
        ncd_step(lvl0, p, 0.1, IterationPolicy(max_iter=2), np.zeros(grid.M), grid)
    assert info.value.iterations == 2 and info.value.change > 1e-12


def test_ncd_step_guard():
    grid, p, lvl0 = smooth_setup()
    with pytest.raises(Diverged):
        ncd_step(lvl0, p, 0.1, IterationPolicy(guard=1e-3), np.zeros(grid.M), grid)


def test_ncd_step_soliton_conserves_coarse_invariant():
    grid = make_space_grid(-30, 60, 600)
    p = PdeParams(1, 1, soliton_phi)
    tau = 1 / 1024
    lvl0 = initial_level(grid, p)
    lvl1, _ = ncd_step(lvl0, p, tau, IterationPolicy(), np.zeros(grid.M), grid)
    E = energy_series(np.stack([lvl0.u, lvl1.u]), np.stack([lvl0.w, lvl1.w]), grid.h, 1, 1, tau)
    assert abs(E.values[1] - E.values[0]) <= 1e-10 * E.values[0]


def test_ncd_single_step_third_order_locally():
    prob = builtin_problems()["manufactured"]
    p = prob.make(1.0, 1.0)
    grid = make_space_grid(0, 2, 400)
    lvl0 = initial_level(grid, p)
    errs = []
    for tau in (0.1, 0.05, 0.025):
        f = source_term(grid, p, 0.0, tau)
        lvl, _ = ncd_step(lvl0, p, tau, IterationPolicy(), f, grid)
        errs.append(np.max(np.abs(lvl.u - manufactured_exact(grid.x, tau))))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all((ratios > 6.5) & (ratios < 9.5)), ratios


def test_linearized_step_zero():
    grid = make_space_grid(0, 2, 8)
    z = np.zeros(8)
    out = linearized_step(StateLevel(z, z, 0.0), z, z, PdeParams(1, 1, ZERO), 0.1, z, grid)
    np.testing.assert_array_equal(out.u, 0)


def test_linearized_step_solves_its_equation():
    grid, p, lvl0 = smooth_setup(M=20)
    a, b = 1.3 * lvl0.u, 0.7 * lvl0.w
    f = np.sin(3 * grid.x)
    new = linearized_step(lvl0, a, b, p, 0.02, f, grid)
    assert np.max(np.abs(linear_equation(lvl0, a, b, new, p, 0.02, f, grid.h))) <= 1e-11
    assert CompactOperator(grid).residual(new.u, new.w) <= 1e-11


def test_linearized_step_matches_ncd_when_frozen_at_solution():
    grid, p, lvl0 = smooth_setup()
    tau = 0.05
    f = np.zeros(grid.M)
    ncd, _ = ncd_step(lvl0, p, tau, IterationPolicy(), f, grid)
    lin = linearized_step(lvl0, 0.5 * (ncd.u + lvl0.u), 0.5 * (ncd.w + lvl0.w), p, tau, f, grid)
    assert np.max(np.abs(lin.u - ncd.u)) <= 1e-10


def test_linearized_step_conserves_energy():
    grid, p, lvl0 = smooth_setup(M=32)
    tau = 0.01
    a, b = 2 * lvl0.u, -lvl0.w
    new = linearized_step(lvl0, a, b, p, tau, np.zeros(grid.M), grid)
    E = energy_series(np.stack([lvl0.u, new.u]), np.stack([lvl0.w, new.w]), grid.h, p.mu, p.lam, tau)
    assert abs(E.values[1] - E.values[0]) <= 1e-11 * E.values[0]


def test_solve_ncd_zero_steps():
    grid, p, _ = smooth_setup()
    traj = solve_ncd(grid, p, 0, 0.1)
    assert traj.u.shape == (1, grid.M) and traj.N == 0 and traj.max_iterations == 0


def test_solve_ncd_trajectory_invariants():
    grid = make_space_grid(-30, 60, 300)
    p = PdeParams(0.5, 0.2, soliton_phi)
    traj = solve_ncd(grid, p, 40, 1 / 40)
    comp = CompactOperator(grid)
    for k in range(traj.N + 1):
        assert comp.residual(traj.u[k], traj.w[k]) <= 1e-11 * max(1.0, np.max(np.abs(ops.delta_xx(traj.u[k], grid.h))))
    np.testing.assert_allclose(traj.t, np.arange(41) / 40)
    np.testing.assert_array_equal(traj.u[0], soliton_phi(grid.x))
    E = energy_series(traj.u, traj.w, grid.h, p.mu, p.lam, traj.tau)
    assert E.max_rel_drift <= 1e-8
    norms = np.sqrt(grid.h * np.sum(traj.u ** 2, axis=1))
    assert np.all(norms <= norms[0] * (1 + 1e-6) + 1e-12)
    assert traj.iterations.shape == (40,) and traj.wall_time > 0


def test_constant_preserved():
    grid = make_space_grid(0, 2, 12)
    traj = solve_ncd(grid, PdeParams(1, 1, lambda x: 0 * x + 0.6), 10, 0.1)
    np.testing.assert_allclose(traj.u, 0.6, atol=1e-12)


def test_errors_carry_level():
    grid, p, _ = smooth_setup()
    with pytest.raises(NonConvergence) as info:
        solve_ncd(grid, p, 3, 0.1, IterationPolicy(max_iter=1))
    assert info.value.context["level"] == 1 and info.value.context["scheme"] == "ncd"
