"""Discrete energies, error metrics, convergence rates and perturbation response."""

from dataclasses import dataclass

import numpy as np

from . import ops


@dataclass
class EnergySeries:
    """Invariant ``E^k`` per level and the accumulated viscous term inside it."""

    values: np.ndarray
    dissipation: np.ndarray

    @property
    def max_abs_drift(self):
        return float(np.max(np.abs(self.values - self.values[0])))

    @property
    def max_rel_drift(self):
        scale = abs(self.values[0])
        return self.max_abs_drift / scale if scale > 0 else self.max_abs_drift


def _h1_rows(a, h):
    return h * np.sum(ops.delta_x_half(a, h) ** 2, axis=-1)


def _l2_rows(a, h):
    return h * np.sum(a * a, axis=-1)


def compact_seminorm_sq(u, w, h):
    """``|u|_1^2 + h^2/12 ||w||^2 - h^4/144 |w|_1^2`` row by row.

    For ``(u, w)`` tied by the compact relation this is ``-<w, u>`` and
    bounded below by ``|u|_1^2 + h^2/18 ||w||^2``.
    """
    return _h1_rows(u, h) + h * h / 12.0 * _l2_rows(w, h) - h ** 4 / 144.0 * _h1_rows(w, h)


def energy_series(u, w, h, mu, lam, tau):
    """Invariant of the Crank-Nicolson compact schemes for levels ``u, w`` of shape ``(N+1, M)``.

    ``E^k = ||u^k||^2 + mu S(u^k, w^k) + 2 lam tau sum_{n<=k} S(u^{n-1/2}, w^{n-1/2})``
    with ``S`` from :func:`compact_seminorm_sq`; the sum is accumulated as a
    running total.
    """
    u = np.atleast_2d(u)
    w = np.atleast_2d(w)
    level = _l2_rows(u, h) + mu * compact_seminorm_sq(u, w, h)
    dissipation = np.zeros(len(u))
    if len(u) > 1:
        half = compact_seminorm_sq(0.5 * (u[1:] + u[:-1]), 0.5 * (w[1:] + w[:-1]), h)
        dissipation[1:] = np.cumsum(2.0 * lam * tau * half)
    return EnergySeries(level + dissipation, dissipation)


def energy_fine(traj, mu, lam, tau_f=None):
    return energy_series(traj.u, traj.w, traj.grid.h, mu, lam, traj.tau if tau_f is None else tau_f)


def energy_coarse(traj, mu, lam, tau_c=None):
    return energy_series(traj.u, traj.w, traj.grid.h, mu, lam, traj.tau if tau_c is None else tau_c)


def max_error_vs_exact(traj, exact):
    """``max_{p,k} |u_p^k - U(x_p, t_k)|`` over every stored level, including ``k = 0``."""
    U = exact(traj.grid.x[None, :], traj.t[:, None])
    return float(np.max(np.abs(traj.u - U)))


def max_difference(traj_a, traj_b):
    """``max_{p,k}`` of the pointwise difference of two runs on identical grids."""
    if traj_a.u.shape != traj_b.u.shape:
        raise ValueError(f"incompatible shapes {traj_a.u.shape} and {traj_b.u.shape}")
    return float(np.max(np.abs(traj_a.u - traj_b.u)))


def self_error_time(coarse_run, refined_run):
    """Compare level ``k`` at step ``tau`` with level ``2k`` at step ``tau/2``."""
    a, b = coarse_run.u, refined_run.u
    if b.shape[0] != 2 * (a.shape[0] - 1) + 1 or a.shape[1] != b.shape[1]:
        raise ValueError(
            f"refined run must have twice the steps on the same grid: {a.shape} vs {b.shape}"
        )
    return float(np.max(np.abs(a - b[::2])))


def self_error_space(run_h, run_h_half):
    """Compare node ``p`` at mesh ``h`` with node ``2p`` at mesh ``h/2``."""
    a, b = run_h.u, run_h_half.u
    if a.shape[0] != b.shape[0] or b.shape[1] != 2 * a.shape[1]:
        raise ValueError(
            f"refined run must have the same levels and twice the nodes: {a.shape} vs {b.shape}"
        )
    # array index i is node i+1; node 2p of the refined grid is index 2p-1
    return float(np.max(np.abs(a - b[:, 1::2])))


def rates(errors):
    """``log2(E_i / E_{i+1})`` for a 2:1 refinement ladder."""
    errors = np.asarray(errors, dtype=float)
    if np.any(~(errors > 0)):
        raise ValueError(f"rates need positive errors, got {errors.tolist()}")
    return np.log2(errors[:-1] / errors[1:])


def perturbation_response(base, perturbed):
    """``max_k ||u_pert^k - u_base^k||`` in the discrete L2 norm."""
    if base.u.shape != perturbed.u.shape:
        raise ValueError(f"shape mismatch {base.u.shape} vs {perturbed.u.shape}")
    h = base.grid.h
    return float(np.max(np.sqrt(_l2_rows(perturbed.u - base.u, h))))
