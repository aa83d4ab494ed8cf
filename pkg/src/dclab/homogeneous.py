"""Fundamental solutions of S~u = 0 in the critical regime.

For kappa = +1 the solutions are explicit combinations of Kummer and
Tricomi functions:

    u_inf = e^-r r^-B [ (+-(1+nu)+B)/(1+nu) U(-B,1-2B,2r) - 2rB/(1+nu) U(1-B,2-2B,2r) ]
    u_0   = e^-r r^-B [ (+-(1+nu)+B)/(1+nu) M(-B,1-2B,2r) + 2rB/((1+nu)(1-2B)) M(1-B,2-2B,2r) ]

and the rebased pair is v_inf = u_inf, v_0 = u_inf - Gamma(2B)/Gamma(B) u_0.
The difference defining v_0 cancels its r^-B parts; we evaluate it through
the equivalent cancellation-free form

    v_0 = 4^B delta e^-r r^B [ (+-(1+nu)+B)/(1+nu) M(B,1+2B,2r) - 2B/(1+nu) M(B,2B,2r) ]

with delta = Gamma(-2B)/Gamma(-B).

The kappa = -1 channel follows from the exact symmetry
S~(nu, -1) = -sigma_1 S~(-nu, +1) sigma_1: its kernel is sigma_1 times the
kappa = +1 kernel at coupling -nu.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .specfun import HypergeometricParams, gamma_fn, kummer_m, tricomi_u

__all__ = [
    "Coupling",
    "FundamentalSystem",
    "build_u_pair",
    "build_fundamental_system",
    "wronskian_at",
    "frobenius_solution",
    "frobenius_pair",
]

CRITICAL_LOW = math.sqrt(3.0) / 2.0


@dataclass(frozen=True)
class Coupling:
    """Coulomb coupling nu and spin-orbit number kappa of one partial wave.

    `B = sqrt(1 - nu^2)` is stored alongside. Plain construction accepts any
    |nu| < 1; `Coupling.critical` additionally enforces sqrt(3)/2 < |nu| < 1.
    """

    nu: float
    kappa: int = 1
    B: float = field(init=False)

    def __post_init__(self):
        nu = float(self.nu)
        if not abs(nu) < 1.0:
            raise ValueError(f"|nu| must be below 1, got {nu}")
        if self.kappa not in (1, -1):
            raise ValueError(f"kappa must be +1 or -1, got {self.kappa}")
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "kappa", int(self.kappa))
        object.__setattr__(self, "B", math.sqrt((1.0 - nu) * (1.0 + nu)))

    @classmethod
    def critical(cls, nu: float, kappa: int = 1) -> "Coupling":
        if not CRITICAL_LOW < abs(nu) < 1.0:
            raise ValueError(
                f"|nu| = {abs(nu)} is outside the critical regime (sqrt(3)/2, 1)")
        return cls(nu, kappa)

    @property
    def is_critical(self) -> bool:
        return CRITICAL_LOW < abs(self.nu) < 1.0

    def mirrored(self) -> "Coupling":
        """The kappa = +1 coupling whose kernel maps onto this one."""
        return Coupling(-self.nu, 1) if self.kappa == -1 else self


def _swap(v):
    v = np.asarray(v)
    return v[::-1].copy()


def _require_critical(c: Coupling):
    if not c.is_critical:
        raise ValueError(f"closed forms need the critical regime, got nu = {c.nu}")


def _plus_channel_forms(nu: float):
    """Closed-form evaluators (u0, u_inf, v0) for kappa = +1."""
    B = math.sqrt((1.0 - nu) * (1.0 + nu))
    n1 = 1.0 + nu
    sgn = np.array([1.0, -1.0])[:, None]
    lead = (sgn * n1 + B) / n1           # (+-(1+nu)+B)/(1+nu)
    pU1 = HypergeometricParams(-B, 1.0 - 2.0 * B)
    pU2 = HypergeometricParams(1.0 - B, 2.0 - 2.0 * B)
    pM1, pM2 = pU1, pU2
    pV1 = HypergeometricParams(B, 1.0 + 2.0 * B)
    pV2 = HypergeometricParams(B, 2.0 * B)
    delta = gamma_fn(-2.0 * B) / gamma_fn(-B)

    def u_inf(r):
        r = np.asarray(r, dtype=float)
        x = 2.0 * r
        pre = np.exp(-r) * r ** (-B)
        t1 = tricomi_u(pU1, x)
        t2 = x * B / n1 * tricomi_u(pU2, x)
        return pre * (lead * t1 - t2)

    def u_zero(r):
        r = np.asarray(r, dtype=float)
        x = 2.0 * r
        pre = np.exp(-r) * r ** (-B)
        t1 = kummer_m(pM1, x)
        t2 = x * B / (n1 * (1.0 - 2.0 * B)) * kummer_m(pM2, x)
        return pre * (lead * t1 + t2)

    def v_zero(r):
        r = np.asarray(r, dtype=float)
        x = 2.0 * r
        pre = 4.0 ** B * delta * np.exp(-r) * r ** B
        return pre * (lead * kummer_m(pV1, x) - 2.0 * B / n1 * kummer_m(pV2, x))

    return u_zero, u_inf, v_zero


def _mirror(func):
    def wrapped(r):
        return func(r)[::-1]
    return wrapped


def _squeeze(func):
    def wrapped(r):
        out = func(r)
        return out if np.ndim(r) else out.reshape(2)
    wrapped.__doc__ = func.__doc__
    return wrapped


def build_u_pair(c: Coupling) -> tuple[Callable, Callable]:
    """Closed-form evaluators (u0, u_inf), each mapping r to a (2, ...) array."""
    _require_critical(c)
    u0, uinf, _ = _plus_channel_forms(c.mirrored().nu)
    if c.kappa == -1:
        u0, uinf = _mirror(u0), _mirror(uinf)
    return _squeeze(u0), _squeeze(uinf)


@dataclass(frozen=True, eq=False)
class FundamentalSystem:
    """The pair (v0, v_inf) with its asymptotic data.

    Attributes
    ----------
    eval_v0, eval_v_inf : callable
        r -> (2, ...) array.
    w0_inf : float
        The constant Wronskian det[v0, v_inf].
    q_plus, q_minus : float
        Coefficient of r^B in v0 (and in v_inf).
    c_inf : ndarray
        Coefficient of r^-B in v_inf.
    """

    coupling: Coupling
    eval_v0: Callable
    eval_v_inf: Callable
    eval_u0: Callable
    w0_inf: float
    q_plus: float
    q_minus: float
    c_inf: np.ndarray
    gamma_ratio: float

    @property
    def q(self) -> np.ndarray:
        return np.array([self.q_plus, self.q_minus])

    def wronskian(self, r) -> np.ndarray:
        return wronskian_at(self.eval_v0(r), self.eval_v_inf(r))


def build_fundamental_system(c: Coupling) -> FundamentalSystem:
    _require_critical(c)
    m = c.mirrored()
    nu, B = m.nu, m.B
    n1 = 1.0 + nu
    u0, uinf, v0 = _plus_channel_forms(nu)
    delta = gamma_fn(-2.0 * B) / gamma_fn(-B)
    gamma_ratio = gamma_fn(2.0 * B) / gamma_fn(B)
    q = 4.0 ** B * (np.array([1.0, -1.0]) * n1 - B) * delta / n1
    c_inf = gamma_ratio * np.array([n1 + B, -(n1 - B)]) / n1
    w = 4.0 ** B * B / (n1 * math.cos(B * math.pi))
    if c.kappa == -1:
        u0, uinf, v0 = _mirror(u0), _mirror(uinf), _mirror(v0)
        q, c_inf, w = _swap(q), _swap(c_inf), -w
    return FundamentalSystem(c, _squeeze(v0), _squeeze(uinf), _squeeze(u0), float(w),
                             float(q[0]), float(q[1]), c_inf, float(gamma_ratio))


def wronskian_at(f, g):
    """det [[f+, g+], [f-, g-]] for values (or arrays of values) f, g."""
    f = np.asarray(f)
    g = np.asarray(g)
    return f[0] * g[1] - f[1] * g[0]


def frobenius_solution(c: Coupling, E: float, s: float, leading, r, terms: int = 200):
    """Local solution r^s sum_k (x_k, y_k) r^k of S~u = E u.

    `s` must be one of the indicial exponents +-sqrt(kappa^2 - nu^2) and
    `leading` the corresponding null vector of [[s+kappa, nu], [-nu, s-kappa]].
    The series has infinite radius of convergence; terms are summed until
    they stop contributing.
    """
    nu, kappa = c.nu, c.kappa
    r = np.atleast_1d(np.asarray(r, dtype=float))
    x, y = float(leading[0]), float(leading[1])
    sx = np.full_like(r, x)
    sy = np.full_like(r, y)
    rk = np.ones_like(r)
    for k in range(1, terms):
        rhs1, rhs2 = (E + 1.0) * y, (1.0 - E) * x
        a11, a12, a21, a22 = s + k + kappa, nu, -nu, s + k - kappa
        det = a11 * a22 - a12 * a21
        x, y = (a22 * rhs1 - a12 * rhs2) / det, (a11 * rhs2 - a21 * rhs1) / det
        rk = rk * r
        tx, ty = x * rk, y * rk
        sx += tx
        sy += ty
        if np.all(np.abs(tx) + np.abs(ty) <= 1e-18 * (np.abs(sx) + np.abs(sy))) and k > 4:
            break
    pre = r ** s
    return np.array([pre * sx, pre * sy])


def indicial_exponent(c: Coupling) -> float:
    return math.sqrt(c.kappa ** 2 - c.nu ** 2)


def leading_directions(c: Coupling):
    """Leading vectors (alpha, beta) of the r^-s and r^+s local solutions.

    In the critical regime they are normalised as the r^-B coefficient of
    v_inf and the r^B coefficient q of v0, so that at E = 0 the local pair
    reproduces v_inf = phi_sing + phi_reg and v0 = phi_reg. Elsewhere they
    are unit-normalised null vectors with positive upper entry.
    """
    if c.is_critical:
        fs = build_fundamental_system(c)
        return np.array(fs.c_inf, float), fs.q
    s = indicial_exponent(c)
    dirs = []
    for e in (-s, s):
        v = np.array([c.nu, -(e + c.kappa)])
        if abs(v[0]) + abs(v[1]) == 0:
            v = np.array([e - c.kappa, c.nu])
        v = v / np.hypot(*v)
        dirs.append(v if v[0] >= 0 else -v)
    return dirs[0], dirs[1]


def frobenius_pair(c: Coupling, E: float, r):
    """Singular and regular local solutions (phi_sing, phi_reg) at energy E."""
    s = indicial_exponent(c)
    alpha, beta = leading_directions(c)
    return (frobenius_solution(c, E, -s, alpha, r),
            frobenius_solution(c, E, s, beta, r))
