"""Periodic spatial mesh and the coarse/fine temporal mesh pair."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SpaceGrid:
    """Uniform periodic mesh over ``(a, a + L]`` with ``M`` nodes.

    Node ``p`` (1-based, ``p = 1..M``) sits at ``x_p = a + p*h``, so the last
    node is the periodic image of the left endpoint. Arrays holding grid
    functions are 0-based: array index ``i`` is node ``p = i + 1``.
    """

    a: float
    L: float
    M: int

    @property
    def h(self):
        return self.L / self.M

    @property
    def x(self):
        return self.a + np.arange(1, self.M + 1) * self.h

    def coord(self, p):
        """Coordinate of node ``p`` (any integer; not wrapped)."""
        return self.a + p * self.h

    def wrap(self, p):
        """Map any integer node label onto ``1..M``."""
        return (p - 1) % self.M + 1

    def value(self, w, p):
        """Read ``w_p`` with periodic wrap (``w_p = w_{p+M}``)."""
        return w[(p - 1) % self.M]

    def refined(self):
        """The grid with ``2M`` nodes; node ``p`` here is node ``2p`` there."""
        return SpaceGrid(self.a, self.L, 2 * self.M)


def make_space_grid(a, L, M):
    if not L > 0:
        raise ValueError(f"period length L must be positive, got {L}")
    if int(M) != M or M < 3:
        raise ValueError(f"M must be an integer >= 3 (three-point stencils), got {M}")
    return SpaceGrid(float(a), float(L), int(M))


@dataclass(frozen=True)
class TimeGridPair:
    T: float
    N_c: int
    beta_tau: int

    @property
    def N_f(self):
        return self.beta_tau * self.N_c

    @property
    def tau_c(self):
        return self.T / self.N_c

    @property
    def tau_f(self):
        return self.T / self.N_f

    @property
    def t_coarse(self):
        return self.T * np.arange(self.N_c + 1) / self.N_c

    @property
    def t_fine(self):
        return self.T * np.arange(self.N_f + 1) / self.N_f


def make_time_grids(T, N_c, beta_tau):
    if not T > 0:
        raise ValueError(f"T must be positive, got {T}")
    for name, val in (("N_c", N_c), ("beta_tau", beta_tau)):
        if int(val) != val or val < 1:
            raise ValueError(f"{name} must be a positive integer, got {val}")
    return TimeGridPair(float(T), int(N_c), int(beta_tau))
