"""Reference (numpy/scipy) implementation of the hot linear-algebra kernels.

Same contract as the compiled ``_kernels`` extension; :mod:`bbmb_ttcd.linsolve`
picks whichever is importable.

Cyclic tridiagonal convention: row ``i`` reads
``sub[i]*x[i-1] + diag[i]*x[i] + sup[i]*x[i+1]`` with indices mod ``M``, so
``sub[0]`` is the (0, M-1) corner and ``sup[M-1]`` the (M-1, 0) corner.
"""

from functools import lru_cache

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from .errors import SingularMatrix

_EPS = np.finfo(float).eps
_BAND = 5  # half-bandwidth of the zigzag-ordered 2x2-block system


def _core_factor(sub, b, sup):
    M = b.shape[0]
    lower = np.zeros(M)
    piv = np.empty(M)
    piv[0] = b[0]
    scale = np.abs(sub) + np.abs(b) + np.abs(sup)
    if not abs(piv[0]) > 64 * _EPS * scale[0]:
        raise SingularMatrix("zero pivot in cyclic tridiagonal elimination", row=0)
    for i in range(1, M):
        lower[i] = sub[i] / piv[i - 1]
        piv[i] = b[i] - lower[i] * sup[i - 1]
        if not abs(piv[i]) > 64 * _EPS * scale[i]:
            raise SingularMatrix("zero pivot in cyclic tridiagonal elimination", row=i)
    return lower, piv


def _core_solve(lower, piv, sup, rhs):
    M = piv.shape[0]
    y = np.array(rhs, dtype=float, copy=True)
    for i in range(1, M):
        y[i] -= lower[i] * y[i - 1]
    y[M - 1] /= piv[M - 1]
    for i in range(M - 2, -1, -1):
        y[i] = (y[i] - sup[i] * y[i + 1]) / piv[i]
    return y


def cyclic_factor(sub, diag, sup):
    """Thomas factorisation of the core plus the Sherman-Morrison wrap data.

    Returns ``(lower, piv, sup, z, vlast, denom)``; see :func:`cyclic_solve`.
    """
    sub = np.ascontiguousarray(sub, dtype=float)
    diag = np.ascontiguousarray(diag, dtype=float)
    sup = np.ascontiguousarray(sup, dtype=float)
    M = diag.shape[0]
    alpha = sup[M - 1]
    beta = sub[0]
    gamma = -diag[0] if diag[0] != 0.0 else -1.0
    b = diag.copy()
    b[0] -= gamma
    b[M - 1] -= alpha * beta / gamma
    core_sub = sub.copy()
    core_sub[0] = 0.0
    core_sup = sup.copy()
    core_sup[M - 1] = 0.0
    lower, piv = _core_factor(core_sub, b, core_sup)
    u = np.zeros(M)
    u[0] = gamma
    u[M - 1] = alpha
    z = _core_solve(lower, piv, core_sup, u)
    vlast = beta / gamma
    denom = 1.0 + z[0] + vlast * z[M - 1]
    if not abs(denom) > 64 * _EPS * (1.0 + abs(z[0]) + abs(vlast * z[M - 1])):
        raise SingularMatrix("singular Sherman-Morrison correction", row=M - 1)
    return lower, piv, core_sup, z, float(vlast), float(denom)


def cyclic_solve(factor, rhs):
    """Solve with a factor from :func:`cyclic_factor`; ``rhs`` is ``(M,)`` or ``(M, K)``."""
    lower, piv, sup, z, vlast, denom = factor
    y = _core_solve(lower, piv, sup, rhs)
    coef = (y[0] + vlast * y[-1]) / denom
    if y.ndim == 1:
        return y - coef * z
    return y - z[:, None] * coef[None, :]


@lru_cache(maxsize=64)
def zigzag_positions(M):
    """Position of each node in the ordering ``0, M-1, 1, M-2, ...``.

    Periodic neighbours (including ``0`` and ``M-1``) end up at most two
    positions apart, so a cyclic 3-point stencil becomes a plain band.
    """
    order = np.empty(M, dtype=np.intp)
    order[0::2] = np.arange((M + 1) // 2)
    order[1::2] = M - 1 - np.arange(M // 2)
    pos = np.empty(M, dtype=np.intp)
    pos[order] = np.arange(M)
    return pos


@lru_cache(maxsize=64)
def _block_layout(M):
    pos = zigzag_positions(M)
    p = np.arange(M)
    rows, cols = [], []
    for i in range(2):
        for j in range(2):
            for k in range(3):
                rows.append(2 * pos[p] + i)
                cols.append(2 * pos[(p + k - 1) % M] + j)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    unknown = np.stack([2 * pos, 2 * pos + 1])
    return _BAND + rows - cols, cols, unknown


def block_cyclic_solve(blocks, rhs):
    """Solve a periodic tridiagonal system with 2x2 blocks.

    ``blocks[i, j, k, p]`` multiplies unknown ``j`` at node ``p + k - 1``
    in equation ``i`` at node ``p``; ``rhs`` has shape ``(2, M)``. Partial
    pivoting is done by LAPACK ``gbsv`` on the zigzag-ordered band.
    """
    blocks = np.asarray(blocks, dtype=float)
    M = blocks.shape[-1]
    band_rows, cols, unknown = _block_layout(M)
    ab = np.zeros((2 * _BAND + 1, 2 * M))
    ab[band_rows, cols] = blocks.reshape(-1)
    b = np.empty(2 * M)
    b[unknown] = rhs
    try:
        x = solve_banded((_BAND, _BAND), ab, b, check_finite=False)
    except LinAlgError as exc:
        raise SingularMatrix(f"singular coupled step matrix ({exc})") from None
    if not np.all(np.isfinite(x)):
        raise SingularMatrix("non-finite solution of coupled step system")
    return x[unknown]
