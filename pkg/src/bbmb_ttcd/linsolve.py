"""Linear solvers: cyclic tridiagonal (Thomas + Sherman-Morrison), the coupled
``(u, w)`` step systems, and a dense LU used as an oracle.

The hot kernels come from the compiled ``_kernels`` extension when it is
importable and from ``_kernels_py`` otherwise. Set ``BBMB_TTCD_PURE_PYTHON=1``
to force the fallback.
"""

import os
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import _kernels_py
from .errors import SingularMatrix

if os.environ.get("BBMB_TTCD_PURE_PYTHON"):
    _backend = _kernels_py
else:
    try:
        from . import _kernels as _backend
    except ImportError:  # extension not built
        _backend = _kernels_py

BACKEND = "cython" if _backend is not _kernels_py else "python"


def available_backends():
    """Name -> kernel module for every backend importable here."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        out["cython"] = _kernels
    return out


@dataclass(frozen=True)
class CyclicTridiagonal:
    """Periodic tridiagonal matrix; row ``i`` is ``sub[i], diag[i], sup[i]``
    at columns ``i-1, i, i+1`` (mod ``M``)."""

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray

    @classmethod
    def circulant(cls, lo, mid, hi, M):
        return cls(np.full(M, float(lo)), np.full(M, float(mid)), np.full(M, float(hi)))

    @property
    def size(self):
        return len(self.diag)

    def matvec(self, x):
        return self.sub * np.roll(x, 1) + self.diag * x + self.sup * np.roll(x, -1)

    def to_dense(self):
        M = self.size
        A = np.zeros((M, M))
        i = np.arange(M)
        A[i, (i - 1) % M] += self.sub
        A[i, i] += self.diag
        A[i, (i + 1) % M] += self.sup
        return A

    def factor(self, backend=None):
        return CyclicFactor(self, backend)


class CyclicFactor:
    """Reusable factorisation of a :class:`CyclicTridiagonal`."""

    def __init__(self, matrix, backend=None):
        self._k = backend or _backend
        self.size = matrix.size
        self._data = self._k.cyclic_factor(matrix.sub, matrix.diag, matrix.sup)

    def solve(self, rhs):
        """``rhs`` of shape ``(M,)`` or ``(M, K)``; returns the same shape."""
        return self._k.cyclic_solve(self._data, rhs)


def solve_cyclic_tridiagonal(A, rhs):
    if A.size < 3:
        raise ValueError("cyclic tridiagonal systems need M >= 3")
    return A.factor().solve(rhs)


def solve_circulant_fft(lo, mid, hi, rhs):
    """Fast path for constant-coefficient stencils: divide by the symbol.

    Only valid for circulant matrices; must agree with the general path.
    """
    rhs = np.asarray(rhs, dtype=float)
    M = rhs.shape[0]
    j = np.arange(M)
    symbol = mid + lo * np.exp(-2j * np.pi * j / M) + hi * np.exp(2j * np.pi * j / M)
    if np.min(np.abs(symbol)) <= 64 * np.finfo(float).eps * (abs(lo) + abs(mid) + abs(hi)):
        raise SingularMatrix("circulant symbol vanishes")
    shape = (M,) + (1,) * (rhs.ndim - 1)
    return np.real(np.fft.ifft(np.fft.fft(rhs, axis=0) / symbol.reshape(shape), axis=0))


@dataclass
class BlockCyclicSystem:
    """Periodic tridiagonal system with 2x2 blocks (unknowns ``u`` and ``w``).

    ``blocks[i, j, k, p]`` is the coefficient of unknown ``j`` at node
    ``p + k - 1`` in equation ``i`` at node ``p``; ``rhs`` is ``(2, M)``.
    """

    blocks: np.ndarray
    rhs: np.ndarray

    @property
    def M(self):
        return self.blocks.shape[-1]

    def matvec(self, x):
        x = np.asarray(x, dtype=float)
        shifted = np.stack([np.roll(x, 1, axis=1), x, np.roll(x, -1, axis=1)], axis=1)
        return np.einsum("ijkp,jkp->ip", self.blocks, shifted)

    def to_dense(self):
        """Dense ``2M x 2M`` matrix in ``[u; w]`` ordering."""
        M = self.M
        A = np.zeros((2 * M, 2 * M))
        p = np.arange(M)
        for i in range(2):
            for j in range(2):
                for k in range(3):
                    A[i * M + p, j * M + (p + k - 1) % M] += self.blocks[i, j, k]
        return A

    def solve(self, backend=None):
        return (backend or _backend).block_cyclic_solve(self.blocks, self.rhs)

    def solve_from(self, base, backend=None):
        """Solve as ``base + correction``.

        The correction is small when ``base`` is close to the solution, so
        its rounding error is small in absolute terms; this removes the
        rounding-level limit cycles a plain re-solve can show inside a
        fixed-point loop.
        """
        base = np.asarray(base, dtype=float)
        residual = self.rhs - self.matvec(base)
        return base + (backend or _backend).block_cyclic_solve(self.blocks, residual)


def solve_dense_lu(A, rhs):
    """Partial-pivoting LU solve; ``A`` is an array or anything with ``to_dense()``."""
    if hasattr(A, "to_dense"):
        A = A.to_dense()
    A = np.asarray(A, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"dense solve needs a square matrix, got {A.shape}")
    with warnings.catch_warnings():
        # an exactly zero pivot warns; it is reported below as SingularMatrix
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
    d = np.abs(np.diag(lu))
    if np.any(d <= A.shape[0] * np.finfo(float).eps * max(np.max(np.abs(A)), 1e-300)):
        raise SingularMatrix("zero pivot after partial pivoting in dense LU")
    return scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)
