"""Built-in test problems: a manufactured solution and a soliton pulse."""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .schemes import PdeParams


def manufactured_exact(x, t):
    return np.exp(t) * np.sin(np.pi * x)


def manufactured_source(mu, lam):
    """Source that makes ``u = e^t sin(pi x)`` an exact solution."""

    def f(x, t):
        et = np.exp(t)
        return (
            (1.0 + (mu + lam) * np.pi ** 2) * et * np.sin(np.pi * x)
            + 0.5 * np.pi * et * et * np.sin(2.0 * np.pi * x)
            + np.pi * et * np.cos(np.pi * x)
        )

    return f


def soliton_phi(x):
    return np.sqrt(6.0) / 3.0 / np.cosh(x / 3.0) ** 2


@dataclass(frozen=True)
class Problem:
    name: str
    a: float
    L: float
    T: float
    make: Callable  # (mu, lam, **options) -> PdeParams
    has_exact: bool


def _manufactured(mu, lam):
    return PdeParams(mu, lam, lambda x: manufactured_exact(x, 0.0),
                     manufactured_source(mu, lam), manufactured_exact)


def _soliton(mu, lam):
    return PdeParams(mu, lam, soliton_phi)


def _custom(mu, lam, amplitude=0.0, mode=1, a=0.0, L=2.0):
    k = 2.0 * np.pi * mode / L

    def phi(x):
        return amplitude * np.sin(k * (np.asarray(x) - a))

    return PdeParams(mu, lam, phi)


def builtin_problems():
    return {
        "manufactured": Problem("manufactured", 0.0, 2.0, 1.0, _manufactured, True),
        "soliton": Problem("soliton", -30.0, 60.0, 1.0, _soliton, False),
        "custom": Problem("custom", 0.0, 2.0, 1.0, _custom, False),
    }
