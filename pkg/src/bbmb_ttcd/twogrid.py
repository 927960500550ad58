"""Temporal two-grid pipeline.

1. nonlinear compact Crank-Nicolson run on the coarse step ``tau_c``;
2. linear-in-time interpolation onto the fine step ``tau_f = tau_c/beta``,
   with ``w`` recomputed from the interpolated ``u`` by the compact relation;
3. one linear correction sweep on the fine step whose convection
   coefficients are frozen at the interpolated half-step averages.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .compact import CompactOperator
from .errors import SolverError
from .mesh import make_time_grids
from .schemes import (
    IterationPolicy,
    Trajectory,
    initial_level,
    linearized_step,
    solve_ncd,
    source_term,
)


@dataclass
class TtcdRun:
    coarse: Trajectory
    interpolated_u: np.ndarray
    interpolated_w: np.ndarray
    fine: Trajectory
    beta_tau: int
    timings: dict = field(default_factory=dict)

    @property
    def max_iterations(self):
        return self.coarse.max_iterations


def interpolate_in_time(coarse, beta_tau):
    """Piecewise-linear interpolation of coarse levels onto the fine step.

    ``coarse`` is a :class:`Trajectory` or an ``(N_c + 1, M)`` array. Fine
    index ``(q-1)*beta + r`` gets ``(1 - r/beta) u^{q-1} + (r/beta) u^q``;
    indices ``q*beta`` are copies of the coarse levels.
    """
    u_c = coarse.u if isinstance(coarse, Trajectory) else np.asarray(coarse, dtype=float)
    if int(beta_tau) != beta_tau or beta_tau < 1:
        raise ValueError(f"beta_tau must be a positive integer, got {beta_tau}")
    if u_c.ndim != 2 or u_c.shape[0] < 1:
        raise ValueError(f"expected (N_c + 1, M) coarse data, got shape {u_c.shape}")
    N_c = u_c.shape[0] - 1
    out = np.empty((N_c * beta_tau + 1, u_c.shape[1]))
    out[::beta_tau] = u_c
    for r in range(1, beta_tau):
        theta = r / beta_tau
        out[r::beta_tau] = (1.0 - theta) * u_c[:-1] + theta * u_c[1:]
    return out


def lift_w(u_f, compact):
    """``w`` for every level of ``u_f`` via the compact relation."""
    return compact.second_derivative(u_f)


def run_ttcd(grid, params, T, N_c, beta_tau, policy=IterationPolicy(), source_rule="average",
             compact=None):
    times = make_time_grids(T, N_c, beta_tau)
    compact = compact or CompactOperator(grid)
    start = initial_level(grid, params, compact)
    t0 = time.perf_counter()

    try:
        coarse = solve_ncd(grid, params, times.N_c, times.tau_c, policy, source_rule,
                           compact=compact, start=start)
    except SolverError as exc:
        raise exc.with_context(phase="step1")
    t1 = time.perf_counter()

    u_f = interpolate_in_time(coarse, beta_tau)
    w_f = lift_w(u_f, compact)
    t2 = time.perf_counter()

    N_f, tau_f = times.N_f, times.tau_f
    t = tau_f * np.arange(N_f + 1)
    u = np.empty_like(u_f)
    w = np.empty_like(w_f)
    u[0], w[0] = start.u, start.w
    level = start
    for k in range(1, N_f + 1):
        u_mid = 0.5 * (u_f[k] + u_f[k - 1])
        w_mid = 0.5 * (w_f[k] + w_f[k - 1])
        f_mid = source_term(grid, params, t[k - 1], t[k], source_rule)
        try:
            level = linearized_step(level, u_mid, w_mid, params, tau_f, f_mid, grid, policy.guard)
        except SolverError as exc:
            raise exc.with_context(phase="step3", level=k, t=float(t[k]), scheme="ttcd")
        level.t = float(t[k])
        u[k], w[k] = level.u, level.w
    t3 = time.perf_counter()

    fine = Trajectory(grid, tau_f, t, u, w, np.ones(N_f, dtype=int), t3 - t2)
    timings = {"step1": t1 - t0, "step2": t2 - t1, "step3": t3 - t2, "total": t3 - t0}
    return TtcdRun(coarse, u_f, w_f, fine, beta_tau, timings)
