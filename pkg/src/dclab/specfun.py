"""Gamma, Kummer and Tricomi functions for real parameters.

The parameter ranges of interest are a in {-B, 1-B}, b in {1-2B, 2-2B}
with 0 < B < 1/2, but the routines accept any real (a, b) with b not a
non-positive integer.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

__all__ = [
    "HypergeometricParams",
    "PoleError",
    "PrecisionWarning",
    "gamma_fn",
    "kummer_m",
    "tricomi_u",
]

# below this argument U is assembled from two Kummer functions, above it
# from the Laplace integral by generalised Gauss-Laguerre quadrature
_U_SWITCH = 2.0
_LAGUERRE_NODES = 100
# exp(x) overflows double precision slightly above this
_EXP_LIMIT = 700.0


class PoleError(ValueError):
    """Raised when Gamma is evaluated at a non-positive integer."""


class PrecisionWarning(RuntimeWarning):
    """Signals that a result lost significant digits to cancellation."""


@dataclass(frozen=True)
class HypergeometricParams:
    """Parameters (a, b) of the confluent hypergeometric equation."""

    a: float
    b: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise ValueError("hypergeometric parameters must be finite")
        if self.b <= 0 and float(self.b).is_integer():
            raise ValueError(f"b = {self.b} is a non-positive integer")

    def shifted(self, da=0.0, db=0.0) -> "HypergeometricParams":
        return HypergeometricParams(self.a + da, self.b + db)


def _is_pole(x):
    return (x <= 0) & (np.floor(x) == x)


def gamma_fn(x):
    """Gamma function on the real line.

    Negative arguments go through the reflection formula
    Gamma(x) = pi / (sin(pi x) Gamma(1 - x)).

    Raises
    ------
    PoleError
        If any entry of `x` is a non-positive integer.
    """
    xa = np.asarray(x, dtype=float)
    if np.any(_is_pole(xa)):
        raise PoleError(f"Gamma has a pole at {x!r}")
    neg = xa < 0.5
    out = np.empty_like(xa)
    out[~neg] = special.gamma(xa[~neg])
    xn = xa[neg]
    out[neg] = np.pi / (np.sin(np.pi * xn) * special.gamma(1.0 - xn))
    return out if out.ndim else float(out)


def _as_params(p, b=None):
    if isinstance(p, HypergeometricParams):
        return p
    return HypergeometricParams(float(p), float(b))


def kummer_m(p: HypergeometricParams, x):
    """Kummer's function M(a, b, x) for x >= 0.

    Raises
    ------
    OverflowError
        When x is beyond the range where e^x is representable.
    """
    p = _as_params(p)
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise ValueError("kummer_m requires x >= 0")
    if np.any(xa > _EXP_LIMIT):
        raise OverflowError(f"M({p.a}, {p.b}, x) overflows for x > {_EXP_LIMIT}")
    out = special.hyp1f1(p.a, p.b, xa)
    return out if np.ndim(out) else float(out)


@lru_cache(maxsize=32)
def _laguerre(n: int, alpha: float):
    nodes, weights = special.roots_genlaguerre(n, alpha)
    return nodes, weights


def _u_laplace(a, b, x):
    # U(a,b,x) = x^-a / Gamma(a) * int_0^inf e^-s s^(a-1) (1 + s/x)^(b-a-1) ds
    s, w = _laguerre(_LAGUERRE_NODES, float(a - 1.0))
    kernel = (1.0 + s[None, :] / x[:, None]) ** (b - a - 1.0)
    return x ** (-a) * (kernel @ w) / special.gamma(a)


def _u_laplace_any(a, b, x):
    if a > 0:
        return _u_laplace(a, b, x)
    # Kummer transformation moves a into the positive half line
    a2, b2 = a - b + 1.0, 2.0 - b
    if a2 <= 0:
        raise ValueError(f"no positive-a representation for U({a}, {b}, x)")
    return x ** (1.0 - b) * _u_laplace(a2, b2, x)


def _u_connection(a, b, x):
    first = gamma_fn(1.0 - b) / gamma_fn(a - b + 1.0) * special.hyp1f1(a, b, x)
    second = (gamma_fn(b - 1.0) / gamma_fn(a) * x ** (1.0 - b)
              * special.hyp1f1(a - b + 1.0, 2.0 - b, x))
    total = first + second
    scale = np.abs(first) + np.abs(second)
    with np.errstate(divide="ignore", invalid="ignore"):
        lost = scale > 1e6 * np.abs(total)
    if np.any(lost):
        warnings.warn(f"connection formula for U({a}, {b}, x) lost more than six digits",
                      PrecisionWarning, stacklevel=3)
    return total


def tricomi_u(p: HypergeometricParams, x):
    """Tricomi's function U(a, b, x) for x > 0.

    Small arguments use the connection formula with two Kummer functions,
    larger arguments the Laplace integral evaluated by generalised
    Gauss-Laguerre quadrature, which has no cancellation.
    """
    p = _as_params(p)
    if float(p.b).is_integer():
        raise ValueError("integer b is a limiting case and is not supported")
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xa <= 0):
        raise ValueError("tricomi_u requires x > 0")
    out = np.empty_like(xa)
    small = xa < _U_SWITCH
    if np.any(small):
        out[small] = _u_connection(p.a, p.b, xa[small])
    if np.any(~small):
        out[~small] = _u_laplace_any(p.a, p.b, xa[~small])
    if np.ndim(x) == 0:
        return float(out[0])
    return out.reshape(np.shape(x))
