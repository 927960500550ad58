import numpy as np
import pytest

from bbmb_ttcd import ops
from bbmb_ttcd.compact import CompactOperator
from bbmb_ttcd.diagnostics import energy_fine, max_error_vs_exact
from bbmb_ttcd.errors import NonConvergence
from bbmb_ttcd.mesh import make_space_grid
from bbmb_ttcd.problems import builtin_problems
from bbmb_ttcd.schemes import IterationPolicy, PdeParams, Trajectory
from bbmb_ttcd.twogrid import interpolate_in_time, lift_w, run_ttcd


def test_interpolate_midpoint():
    out = interpolate_in_time(np.array([[1.0], [3.0]]), 2)
    np.testing.assert_array_equal(out[:, 0], [1, 2, 3])


def test_interpolate_identity():
    u = np.random.default_rng(1).standard_normal((5, 7))
    np.testing.assert_array_equal(interpolate_in_time(u, 1), u)


def test_interpolate_exact_on_lines():
    t_c = np.linspace(0, 1, 6)
    alpha = np.array([0.3, -1.7, 2.0])
    fine = interpolate_in_time(t_c[:, None] * alpha, 4)
    t_f = np.linspace(0, 1, 21)
    np.testing.assert_allclose(fine, t_f[:, None] * alpha, atol=1e-15)


def test_interpolate_copies_coarse_bitwise():
    rng = np.random.default_rng(2)
    u = rng.standard_normal((9, 11))
    for beta in (2, 3, 5):
        np.testing.assert_array_equal(interpolate_in_time(u, beta)[::beta], u)


def test_interpolate_accepts_trajectory():
    grid = make_space_grid(0, 1, 3)
    u = np.arange(6.0).reshape(2, 3)
    traj = Trajectory(grid, 1.0, np.array([0.0, 1.0]), u, u)
    np.testing.assert_array_equal(interpolate_in_time(traj, 2)[1], [1.5, 2.5, 3.5])


@pytest.mark.parametrize("beta", [0, -1, 1.5])
def test_interpolate_bad_ratio(beta):
    with pytest.raises(ValueError):
        interpolate_in_time(np.zeros((3, 4)), beta)


def test_lift_w():
    grid = make_space_grid(0, 2, 16)
    comp = CompactOperator(grid)
    np.testing.assert_array_equal(lift_w(np.zeros((3, 16)), comp), 0)
    np.testing.assert_allclose(lift_w(np.ones((3, 16)) * [[1], [2], [3]], comp), 0, atol=1e-12)
    j = 3
    mode = np.cos(2 * np.pi * j * np.arange(1, 17) / 16)
    ratio = -(4 / grid.h ** 2) * np.sin(np.pi * j / 16) ** 2 / (1 - np.sin(np.pi * j / 16) ** 2 / 3)
    np.testing.assert_allclose(lift_w(np.stack([mode, 2 * mode]), comp), np.stack([ratio * mode, 2 * ratio * mode]),
                               atol=1e-11)


def test_zero_run():
    grid = make_space_grid(0, 2, 10)
    run = run_ttcd(grid, PdeParams(1, 1, lambda x: 0 * x), 1.0, 4, 3)
    assert np.all(run.fine.u == 0) and np.all(run.coarse.u == 0)
    assert run.fine.N == 12 and run.coarse.N == 4
    assert set(run.timings) == {"step1", "step2", "step3", "total"}


def test_run_structure_and_invariants():
    grid = make_space_grid(-30, 60, 300)
    p = builtin_problems()["soliton"].make(1.0, 0.1)
    run = run_ttcd(grid, p, 1.0, 16, 4)
    np.testing.assert_array_equal(run.interpolated_u[::4], run.coarse.u)
    comp = CompactOperator(grid)
    for k in range(run.fine.N + 1):
        scale = max(1.0, np.max(np.abs(ops.delta_xx(run.interpolated_u[k], grid.h))))
        assert comp.residual(run.interpolated_u[k], run.interpolated_w[k]) <= 1e-11 * scale
        assert comp.residual(run.fine.u[k], run.fine.w[k]) <= 1e-11 * scale
    assert energy_fine(run.fine, 1.0, 0.1).max_rel_drift <= 1e-10
    np.testing.assert_allclose(run.fine.t, np.arange(65) / 64)


def test_beta_one_isolates_correction():
    grid = make_space_grid(0, 2, 100)
    p = builtin_problems()["manufactured"].make(1.0, 1.0)
    run = run_ttcd(grid, p, 1.0, 10, 1)
    assert max_error_vs_exact(run.fine, p.exact) < 2 * max_error_vs_exact(run.coarse, p.exact)


def test_phase_label_on_failure():
    grid = make_space_grid(-30, 60, 60)
    p = builtin_problems()["soliton"].make(1.0, 1.0)
    with pytest.raises(NonConvergence) as info:
        run_ttcd(grid, p, 1.0, 4, 2, IterationPolicy(max_iter=1))
    assert info.value.context["phase"] == "step1"
