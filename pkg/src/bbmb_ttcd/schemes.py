"""Crank-Nicolson compact time steppers for the periodic BBM-Burgers equation

    u_t - mu u_xxt + u u_x + u_x - lam u_xx = f,   w = u_xx.

Each step solves one coupled linear system in ``(u, w)``: the discretised
PDE rows plus the compact rows ``A w - dxx u = 0``. The nonlinear step
(:func:`ncd_step`) wraps that in a fixed-point loop; the linearised step
(:func:`linearized_step`) freezes the convection coefficients at given
half-step data and needs a single solve.
"""

import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import ops
from .compact import CompactOperator
from .errors import Diverged, NonConvergence, SolverError
from .linsolve import BlockCyclicSystem


@dataclass(frozen=True)
class PdeParams:
    mu: float
    lam: float
    phi: Callable
    source: Optional[Callable] = None
    exact: Optional[Callable] = None

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")

    def perturbed(self, zeta):
        """Same problem with initial data ``phi + zeta``."""
        phi = self.phi
        return replace(self, phi=lambda x: phi(x) + zeta(x), exact=None)


@dataclass
class StateLevel:
    u: np.ndarray
    w: np.ndarray
    t: float


@dataclass(frozen=True)
class IterationPolicy:
    tol: float = 1e-12
    max_iter: int = 200
    guard: float = 1e8

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass
class Trajectory:
    """Levels ``0..N`` of one run at constant step ``tau``.

    ``u`` and ``w`` have shape ``(N + 1, M)``; ``iterations[l - 1]`` is the
    number of fixed-point iterations taken for level ``l`` (1 for linear steps).
    """

    grid: object
    tau: float
    t: np.ndarray
    u: np.ndarray
    w: np.ndarray
    iterations: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    wall_time: float = 0.0

    @property
    def N(self):
        return len(self.t) - 1

    def level(self, k):
        return StateLevel(self.u[k], self.w[k], float(self.t[k]))

    @property
    def max_iterations(self):
        return int(self.iterations.max()) if len(self.iterations) else 0


SOURCE_RULES = ("midpoint", "average")


def source_term(grid, params, t0, t1, rule="average"):
    """Source sampled at the nodes for the step ``t0 -> t1``.

    ``midpoint`` evaluates ``f(x, (t0+t1)/2)``; ``average`` takes
    ``(f(x, t0) + f(x, t1))/2``.
    """
    if params.source is None:
        return np.zeros(grid.M)
    x = grid.x
    if rule == "midpoint":
        return np.asarray(params.source(x, 0.5 * (t0 + t1)), dtype=float)
    if rule == "average":
        return 0.5 * (np.asarray(params.source(x, t0)) + np.asarray(params.source(x, t1)))
    raise ValueError(f"unknown source rule {rule!r}; expected one of {SOURCE_RULES}")


def initial_level(grid, params, compact=None):
    compact = compact or CompactOperator(grid)
    u0 = np.asarray(params.phi(grid.x), dtype=float) * np.ones(grid.M)
    if not np.all(np.isfinite(u0)):
        raise ValueError("initial condition has non-finite samples")
    return StateLevel(u0, compact.second_derivative(u0), 0.0)


# -- system assembly ---------------------------------------------------------

def _identity(M, c=1.0):
    s = np.zeros((3, M))
    s[1] = c
    return s


def _stencil(triple):
    return np.asarray(triple)


def _compact_rows(blocks, M, h):
    c = 1.0 / (h * h)
    blocks[1, 0] = np.array([-c, 2.0 * c, -c])[:, None]
    blocks[1, 1] = np.array([1.0 / 12.0, 5.0 / 6.0, 1.0 / 12.0])[:, None]


def _rhs_common(prev, params, tau, f_mid, h):
    """Terms of the PDE row that involve only the previous level and ``f``."""
    u0, w0 = prev.u, prev.w
    return (
        f_mid
        + u0 / tau
        - params.mu * w0 / tau
        - 0.5 * ops.delta_x_central(u0, h)
        + (h * h / 12.0) * ops.delta_x_central(w0, h)
        + 0.5 * params.lam * w0
    )


def _check_new_state(u, guard):
    if not np.all(np.isfinite(u)):
        raise Diverged("non-finite values in the solution", norm=float("inf"))
    norm = ops.norm_max(u)
    if norm > guard:
        raise Diverged(f"max-norm {norm:.3e} exceeds guard {guard:.1e}", norm=norm)


def picard_system(prev, guess, params, tau, f_mid, grid):
    """Linear system of one fixed-point iteration.

    The nonlinear half-step terms are split as

        psi(u_mid, u_mid) ~ 1/4 [psi(U, u_m) + psi(U, u0) + psi(u0, U) + psi(u0, u0)]
        psi(w_mid, u_mid) ~ 1/4 [psi(W, u_m) + psi(W, u0) + psi(w0, U) + psi(w0, u0)]

    with ``(U, W)`` the new unknowns, ``u_m`` the current iterate and
    ``(u0, w0)`` the previous level.
    """
    h, M = grid.h, grid.M
    mu, lam = params.mu, params.lam
    u0, w0, um = prev.u, prev.w, guess.u
    dx = _stencil(ops.stencil_delta_x_central(M, h))
    p_um = _stencil(ops.stencil_psi_first(um, h))
    p_u0 = _stencil(ops.stencil_psi_first(u0, h))
    q_u0 = _stencil(ops.stencil_psi_second(u0, h))
    q_w0 = _stencil(ops.stencil_psi_second(w0, h))
    h2 = h * h

    blocks = np.empty((2, 2, 3, M))
    blocks[0, 0] = _identity(M, 1.0 / tau) + 0.25 * (p_um + p_u0 + q_u0) - (h2 / 8.0) * q_w0 + 0.5 * dx
    blocks[0, 1] = _identity(M, -(mu / tau + 0.5 * lam)) - (h2 / 8.0) * (p_um + p_u0) - (h2 / 12.0) * dx
    _compact_rows(blocks, M, h)
    rhs = np.empty((2, M))
    rhs[0] = _rhs_common(prev, params, tau, f_mid, h) - 0.25 * ops.psi(u0, u0, h) + (h2 / 8.0) * ops.psi(w0, u0, h)
    rhs[1] = 0.0
    return BlockCyclicSystem(blocks, rhs)


def picard_iterate(prev, guess, params, tau, f_mid, grid):
    x = picard_system(prev, guess, params, tau, f_mid, grid).solve_from(np.stack([guess.u, guess.w]))
    return StateLevel(x[0], x[1], prev.t + tau)


def ncd_residual(prev, new, params, tau, f_mid, grid):
    """Max-norm defect of the nonlinear Crank-Nicolson compact PDE row."""
    h = grid.h
    uh = 0.5 * (new.u + prev.u)
    wh = 0.5 * (new.w + prev.w)
    r = (
        (new.u - prev.u) / tau
        - params.mu * (new.w - prev.w) / tau
        + ops.psi(uh, uh, h)
        - 0.5 * h * h * ops.psi(wh, uh, h)
        + ops.delta_x_central(uh, h)
        - (h * h / 6.0) * ops.delta_x_central(wh, h)
        - params.lam * wh
        - f_mid
    )
    return float(np.max(np.abs(r)))


def ncd_step(prev, params, tau, policy, f_mid, grid):
    """One nonlinear step by fixed-point iteration from ``u^{l,0} = u^{l-1}``.

    Returns ``(level, iterations)``. Raises :class:`NonConvergence` when
    ``max_iter`` iterations leave the max-norm update above ``tol``.
    """
    guess = prev
    change = np.inf
    for m in range(1, policy.max_iter + 1):
        new = picard_iterate(prev, guess, params, tau, f_mid, grid)
        _check_new_state(new.u, policy.guard)
        change = float(np.max(np.abs(new.u - guess.u)))
        if change <= policy.tol:
            return new, m
        guess = new
    raise NonConvergence(
        f"fixed-point iteration stalled at update {change:.3e} > tol {policy.tol:.1e}",
        change=change,
        iterations=policy.max_iter,
    )


def linearized_system(prev, u_mid, w_mid, params, tau, f_mid, grid):
    """Linear system of the correction step with frozen ``psi`` coefficients."""
    h, M = grid.h, grid.M
    mu, lam = params.mu, params.lam
    u0 = prev.u
    dx = _stencil(ops.stencil_delta_x_central(M, h))
    q_a = _stencil(ops.stencil_psi_second(u_mid, h))
    q_b = _stencil(ops.stencil_psi_second(w_mid, h))
    h2 = h * h

    blocks = np.empty((2, 2, 3, M))
    blocks[0, 0] = _identity(M, 1.0 / tau) + 0.5 * q_a - (h2 / 4.0) * q_b + 0.5 * dx
    blocks[0, 1] = _identity(M, -(mu / tau + 0.5 * lam)) - (h2 / 12.0) * dx
    _compact_rows(blocks, M, h)
    rhs = np.empty((2, M))
    rhs[0] = _rhs_common(prev, params, tau, f_mid, h) - 0.5 * ops.psi(u_mid, u0, h) + (h2 / 4.0) * ops.psi(w_mid, u0, h)
    rhs[1] = 0.0
    return BlockCyclicSystem(blocks, rhs)


def linearized_step(prev, u_mid, w_mid, params, tau, f_mid, grid, guard=np.inf):
    x = linearized_system(prev, u_mid, w_mid, params, tau, f_mid, grid).solve_from(
        np.stack([prev.u, prev.w])
    )
    _check_new_state(x[0], guard)
    return StateLevel(x[0], x[1], prev.t + tau)


def solve_ncd(grid, params, N, tau, policy=IterationPolicy(), source_rule="average",
              compact=None, start=None):
    """Run the nonlinear scheme for ``N`` steps of size ``tau``."""
    t_start = time.perf_counter()
    compact = compact or CompactOperator(grid)
    level = start if start is not None else initial_level(grid, params, compact)
    u = np.empty((N + 1, grid.M))
    w = np.empty((N + 1, grid.M))
    t = tau * np.arange(N + 1)
    u[0], w[0] = level.u, level.w
    iterations = np.zeros(N, dtype=int)
    for l in range(1, N + 1):
        f_mid = source_term(grid, params, t[l - 1], t[l], source_rule)
        try:
            level, iterations[l - 1] = ncd_step(level, params, tau, policy, f_mid, grid)
        except SolverError as exc:
            raise exc.with_context(level=l, t=float(t[l]), scheme="ncd")
        level.t = float(t[l])
        u[l], w[l] = level.u, level.w
    return Trajectory(grid, tau, t, u, w, iterations, time.perf_counter() - t_start)
