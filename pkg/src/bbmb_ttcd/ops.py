"""Periodic difference operators, the skew convection operator and discrete norms.

Every operator maps a length-``M`` array to a length-``M`` array; the periodic
wrap is done with :func:`numpy.roll`, never with ghost cells. ``h`` is the
mesh width of the :class:`~bbmb_ttcd.mesh.SpaceGrid` the data lives on.
"""

import numpy as np


def _check_pair(v, w):
    if np.shape(v) != np.shape(w):
        raise ValueError(f"grid mismatch: shapes {np.shape(v)} and {np.shape(w)}")


def shift_back(w):
    """``w_{p-1}`` at every node (works along the last axis)."""
    return np.roll(w, 1, axis=-1)


def shift_fwd(w):
    """``w_{p+1}`` at every node."""
    return np.roll(w, -1, axis=-1)


def delta_x_half(w, h):
    """Backward staggered difference; entry ``p`` holds ``(w_p - w_{p-1})/h``."""
    return (w - shift_back(w)) / h


def delta_xx(w, h):
    return (shift_fwd(w) - 2.0 * w + shift_back(w)) / (h * h)


def delta_x_central(w, h):
    return (shift_fwd(w) - shift_back(w)) / (2.0 * h)


def psi(v, w, h):
    """Skew-symmetric convection form ``(1/3)[v * Dx w + Dx(v*w)]``.

    ``<psi(v, w), w> = 0`` for every periodic ``v, w``.
    """
    _check_pair(v, w)
    return (v * delta_x_central(w, h) + delta_x_central(v * w, h)) / 3.0


def inner(v, w, h):
    _check_pair(v, w)
    return h * float(np.dot(v, w))


def inner_h1(v, w, h):
    _check_pair(v, w)
    return h * float(np.dot(delta_x_half(v, h), delta_x_half(w, h)))


def norm_l2(w, h):
    return np.sqrt(inner(w, w, h))


def seminorm_h1(w, h):
    return np.sqrt(inner_h1(w, w, h))


def norm_max(w):
    return float(np.max(np.abs(w)))


# Row stencils ``(sub, diag, sup)`` of the linear maps above: row ``p`` reads
# ``sub[p]*x_{p-1} + diag[p]*x_p + sup[p]*x_{p+1}``.

def stencil_delta_x_central(M, h):
    c = 1.0 / (2.0 * h)
    return np.full(M, -c), np.zeros(M), np.full(M, c)


def stencil_delta_xx(M, h):
    c = 1.0 / (h * h)
    return np.full(M, c), np.full(M, -2.0 * c), np.full(M, c)


def stencil_psi_first(b, h):
    """Stencil of ``v -> psi(v, b)`` for fixed ``b``."""
    c = 1.0 / (6.0 * h)
    return -c * shift_back(b), delta_x_central(b, h) / 3.0, c * shift_fwd(b)


def stencil_psi_second(a, h):
    """Stencil of ``w -> psi(a, w)`` for fixed ``a``; the diagonal is zero."""
    c = 1.0 / (6.0 * h)
    return -c * (a + shift_back(a)), np.zeros_like(a), c * (a + shift_fwd(a))


def apply_stencil(stencil, x):
    sub, diag, sup = stencil
    return sub * shift_back(x) + diag * x + sup * shift_fwd(x)
