"""Fourth-order compact second derivative: ``(I + h^2/12 dxx) w = dxx u``."""

import numpy as np

from . import ops
from .linsolve import CyclicTridiagonal


def compact_eigenvalues(M):
    """Eigenvalues ``1 - (1/3) sin^2(j*pi/M)`` of ``I + h^2/12 dxx``, ``j = 0..M-1``."""
    return 1.0 - np.sin(np.pi * np.arange(M) / M) ** 2 / 3.0


class CompactOperator:
    """Holds the cached factorisation of ``A = I + (h^2/12) dxx`` for one grid.

    ``A`` has stencil ``(1/12, 5/6, 1/12)`` independent of ``h``.
    """

    def __init__(self, grid):
        self.grid = grid
        self.matrix = CyclicTridiagonal.circulant(1.0 / 12.0, 5.0 / 6.0, 1.0 / 12.0, grid.M)
        self._factor = self.matrix.factor()

    @property
    def h(self):
        return self.grid.h

    def _check(self, w):
        if np.shape(w)[-1] != self.grid.M:
            raise ValueError(f"grid mismatch: expected {self.grid.M} nodes, got {np.shape(w)[-1]}")

    def apply_A(self, w):
        self._check(w)
        return w + (self.h ** 2 / 12.0) * ops.delta_xx(w, self.h)

    def solve_A(self, rhs):
        """``A^{-1} rhs``; ``rhs`` is ``(M,)`` or ``(K, M)`` (one row per level)."""
        self._check(rhs)
        rhs = np.asarray(rhs, dtype=float)
        if rhs.ndim == 1:
            return self._factor.solve(rhs)
        return self._factor.solve(rhs.T).T

    def second_derivative(self, u):
        """The ``w`` tied to ``u`` by the compact relation (works per row for 2-D input)."""
        return self.solve_A(ops.delta_xx(np.asarray(u, dtype=float), self.h))

    def residual(self, u, w):
        """Max-norm defect of ``A w = dxx u``."""
        return float(np.max(np.abs(self.apply_A(w) - ops.delta_xx(u, self.h))))
