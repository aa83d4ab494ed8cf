"""Self-adjoint realisations of one critical partial wave.

Every g in the adjoint domain behaves as g0 r^-B + g1 r^B + o(r^1/2) at
the origin. The realisation S_beta keeps the g with

    g1+ / g0+ = c_nu beta + d_nu,   c_nu = p+ / C+,  d_nu = q+ / C+,

where C is the r^-B coefficient of Phi = v_inf, q its r^B coefficient and
p the r^B coefficient of S_D^-1 Phi. beta = inf is S_D itself (g0 = 0).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .greenop import GreenOperator, build_green_operator, p_pm, vinf_norm_sq
from .homogeneous import Coupling, FundamentalSystem, wronskian_at
from .radial import (SpinorFunction, cumulative_integral, inner_product,
                     origin_tail_integral)

__all__ = [
    "ExtensionSpec",
    "BoundaryData",
    "AdjointDecomposition",
    "ClosureCertificate",
    "UnreliableFitError",
    "DegenerateDataError",
    "NonConvergentLimitError",
    "RouteDisagreementError",
    "deficiency_index",
    "channel_census",
    "cd_constants",
    "extract_boundary_data",
    "boundary_residual",
    "decompose_adjoint",
    "closure_membership",
    "singular_coefficient",
    "regular_singular_split",
]

DEFAULT_WINDOW = (1e-6, 1e-3)
FIT_TOL = 1e-4


class UnreliableFitError(ValueError):
    """Short-distance coefficients could not be fitted reliably."""


class DegenerateDataError(ValueError):
    """Both g0+ and g1+ vanish: the boundary condition carries no information."""


class NonConvergentLimitError(RuntimeError):
    """Wronskian limits did not settle across the sampled radii."""


class RouteDisagreementError(RuntimeError):
    """Two independent evaluations of the same coefficient disagree."""


def deficiency_index(nu: float, kappa: int) -> int:
    """0 for an essentially self-adjoint channel, 1 otherwise."""
    if kappa == 0 or int(kappa) != kappa:
        raise ValueError("kappa must be a non-zero integer")
    return 0 if nu * nu <= kappa * kappa - 0.25 else 1


def channel_census(nu: float, j_max: float) -> list[tuple[float, float, int, int]]:
    """All partial waves (j, m_j, kappa_j, deficiency index) with j <= j_max."""
    if not abs(nu) < 1:
        raise ValueError("|nu| must be below 1")
    if 2 * j_max != int(2 * j_max) or int(2 * j_max) % 2 != 1:
        raise ValueError("j_max must be a positive half-odd integer")
    out = []
    twice_j = 1
    while twice_j <= 2 * j_max:
        j = twice_j / 2
        for twice_m in range(-twice_j, twice_j + 1, 2):
            for kappa in (int(j + 0.5), -int(j + 0.5)):
                out.append((j, twice_m / 2, kappa, deficiency_index(nu, kappa)))
        twice_j += 2
    return out


def cd_constants(c: Coupling, G: GreenOperator) -> tuple[float, float]:
    """(c_nu, d_nu) of the boundary condition."""
    if not c.is_critical:
        raise ValueError("boundary constants exist only in the critical regime")
    p_plus, _ = p_pm(G)
    lead = G.system.c_inf[0]
    return p_plus / lead, G.system.q_plus / lead


@dataclass(frozen=True)
class ExtensionSpec:
    """Extension parameter beta (math.inf for S_D) and the boundary ratio."""

    beta: float
    ratio_target: complex | None

    @classmethod
    def make(cls, beta: float, constants: tuple[float, float]) -> "ExtensionSpec":
        beta = float(beta)
        if math.isnan(beta):
            raise ValueError("beta must be a real number or inf")
        if math.isinf(beta):
            return cls(math.inf, None)
        c_nu, d_nu = constants
        return cls(beta, c_nu * beta + d_nu)

    @property
    def is_distinguished(self) -> bool:
        return math.isinf(self.beta)


@dataclass(frozen=True, eq=False)
class BoundaryData:
    """Coefficients of r^-B (g0) and r^B (g1) at the origin."""

    g0: np.ndarray
    g1: np.ndarray
    fit_residual: float
    subwindow_mismatch: float
    window: tuple[float, float]
    reliable: bool

    def as_dict(self) -> dict:
        def cpx(v):
            return [[float(x.real), float(x.imag)] for x in v]
        return {"g0": cpx(self.g0), "g1": cpx(self.g1), "fit_residual": self.fit_residual,
                "subwindow_mismatch": self.subwindow_mismatch,
                "window": list(self.window), "reliable": self.reliable}


def _fit_exponents(B: float) -> list[float]:
    # r^-B, r^B and the o(r^1/2) corrections that matter above r ~ 1e-8
    return [-B, B, 1 - B, 1 + B, 2 - B]


def _fit(r, values, ex):
    A = (r[:, None] / r[-1]) ** np.asarray(ex)[None, :]
    coef, *_ = np.linalg.lstsq(A, values, rcond=None)
    resid = values - A @ coef
    scale = np.sqrt(np.mean(np.abs(values) ** 2))
    rel = float(np.sqrt(np.mean(np.abs(resid) ** 2)) / scale) if scale > 0 else 0.0
    return coef * r[-1] ** (-np.asarray(ex))[:, None], rel


def extract_boundary_data(c: Coupling, g: SpinorFunction,
                          window: tuple[float, float] = DEFAULT_WINDOW,
                          *, strict: bool = True) -> BoundaryData:
    """Least-squares fit of g near the origin.

    Each component is fitted on the window nodes against r^-B, r^B and the
    next correction powers r^(1-B), r^(1+B), r^(2-B); g0 and g1 are the
    first two coefficients. The fit is repeated on the two halves (in log r)
    of the window and the results compared.

    Raises
    ------
    UnreliableFitError
        If `strict` and the relative fit residual exceeds 1e-4.
    """
    r_lo, r_hi = window
    if not 0 < r_lo < r_hi <= 1e-2:
        raise ValueError("window must satisfy 0 < r_lo < r_hi <= 1e-2")
    r = g.r
    mask = (r >= r_lo) & (r <= r_hi)
    ex = _fit_exponents(c.B)
    if mask.sum() < 2 * len(ex):
        raise UnreliableFitError("window holds too few grid nodes")
    vals = np.vstack([g.upper[mask], g.lower[mask]]).T
    coef, rel = _fit(r[mask], vals, ex)
    mid = math.sqrt(r_lo * r_hi)
    halves = []
    for lo, hi in ((r_lo, mid), (mid, r_hi)):
        m = (r >= lo) & (r <= hi)
        if m.sum() >= 2 * len(ex):
            halves.append(_fit(r[m], np.vstack([g.upper[m], g.lower[m]]).T, ex)[0][:2])
    mismatch = 0.0
    if len(halves) == 2:
        scale = max(np.abs(coef[:2]).max(), 1e-300)
        mismatch = float(np.abs(halves[0] - halves[1]).max() / scale)
    reliable = rel <= FIT_TOL and mismatch <= 1e-3
    if strict and rel > FIT_TOL:
        raise UnreliableFitError(f"fit residual {rel:.2e} exceeds {FIT_TOL:g}")
    return BoundaryData(np.asarray(coef[0], complex), np.asarray(coef[1], complex),
                        rel, mismatch, (r_lo, r_hi), reliable)


def boundary_residual(spec: ExtensionSpec, bd: BoundaryData, *, atol: float = 1e-12) -> float:
    """Scale-free violation of the boundary condition of `spec` by `bd`.

    Raises
    ------
    DegenerateDataError
        If |g0+| and |g1+| are both below `atol`.
    """
    g0, g1 = complex(bd.g0[0]), complex(bd.g1[0])
    denom = abs(g0) + abs(g1)
    if denom <= atol:
        raise DegenerateDataError("g0+ and g1+ both vanish; the condition is vacuous")
    if spec.is_distinguished:
        return abs(g0) / denom
    return abs(g1 - spec.ratio_target * g0) / denom


@dataclass(frozen=True, eq=False)
class AdjointDecomposition:
    """g = a0 v0 + a_inf v_inf + b_inf(r) v0 + b0(r) v_inf.

    `b0_fn` and `b_inf_fn` hold the cumulative functions on the grid nodes;
    `spread` is the variation of the constants across the sampled radii.
    """

    a0: complex
    a_inf: complex
    b0_fn: np.ndarray
    b_inf_fn: np.ndarray
    spread: float
    radii: np.ndarray

    def reconstruct(self, F: FundamentalSystem, grid) -> SpinorFunction:
        r = grid.nodes
        v0, vi = F.eval_v0(r), F.eval_v_inf(r)
        vals = (self.a0 + self.b_inf_fn) * v0 + (self.a_inf + self.b0_fn) * vi
        return SpinorFunction(grid, vals[0], vals[1])


def decompose_adjoint(c: Coupling, F: FundamentalSystem, g: SpinorFunction,
                      Sg: SpinorFunction, *, radii=(1e-4, 1.0), tol: float = 1e-6
                      ) -> AdjointDecomposition:
    """Split g in the adjoint domain along v0 and v_inf.

    With h = S~g the cumulative functions are

        b0(r) = -(1/W) int_0^r v0 . h,   b_inf(r) = (1/W) int_0^r v_inf . h,

    and Cramer's rule on g(r) gives, at every radius,

        a_inf = W_r(v0, g)/W - b0(r),    a0 = -W_r(v_inf, g)/W - b_inf(r).

    These are the Wronskian functionals at the origin carried to finite r,
    where they are well conditioned; the constants are taken as medians
    over grid nodes in `radii` and their spread is the convergence check.

    Raises
    ------
    NonConvergentLimitError
        If the spread exceeds `tol` relative to max(1, |a0|, |a_inf|).
    """
    W = F.w0_inf
    grid = g.grid
    r = grid.nodes
    v0, vi = F.eval_v0(r), F.eval_v_inf(r)
    h = Sg.values
    B = c.B
    i0 = v0[0] * h[0] + v0[1] * h[1]
    ii = vi[0] * h[0] + vi[1] * h[1]
    # near the origin v0 ~ r^B, v_inf ~ r^-B and h = S~g behaves like a
    # combination of r^-B (singular part of g) and regular terms
    tail_exp0 = [0.0, B]
    tail_expi = [-2 * B, -B]
    b0 = -(_cumulative(grid, i0) + _safe_tail(grid, i0, tail_exp0)) / W
    binf = (_cumulative(grid, ii) + _safe_tail(grid, ii, tail_expi)) / W
    gv = g.values
    a_inf_r = wronskian_at(v0, gv) / W - b0
    a0_r = -wronskian_at(vi, gv) / W - binf
    sel = (r >= radii[0]) & (r <= radii[1])
    if not np.any(sel):
        raise ValueError("no grid nodes inside the evaluation radii")
    a_inf = _cmedian(a_inf_r[sel])
    a0 = _cmedian(a0_r[sel])
    spread = max(np.abs(a_inf_r[sel] - a_inf).max(), np.abs(a0_r[sel] - a0).max())
    scale = max(1.0, abs(a0), abs(a_inf))
    if spread > tol * scale:
        raise NonConvergentLimitError(
            f"Wronskian constants vary by {spread:.2e} across r in {radii}")
    return AdjointDecomposition(a0, a_inf, b0, binf, float(spread), r[sel])


def _cumulative(grid, values):
    return (cumulative_integral(grid, values.real)
            + 1j * cumulative_integral(grid, values.imag))


def _safe_tail(grid, values, exponents):
    if not np.any(values[: grid.order]):
        return 0.0
    return origin_tail_integral(grid, values, exponents, panels=4)


def _cmedian(x):
    return complex(np.median(x.real), np.median(x.imag))


@dataclass(frozen=True)
class ClosureCertificate:
    member: bool
    abs_a0: float
    abs_a_inf: float
    tol: float

    def __bool__(self):
        return self.member


def closure_membership(dec: AdjointDecomposition, tol: float = 1e-8) -> ClosureCertificate:
    """Membership in the operator closure: both Wronskian functionals vanish."""
    a0, ai = abs(dec.a0), abs(dec.a_inf)
    return ClosureCertificate(bool(a0 <= tol and ai <= tol), a0, ai, tol)


@dataclass(frozen=True)
class SingularCoefficient:
    value: complex
    limit_route: complex
    integral_route: complex
    relative_gap: float


def singular_coefficient(c: Coupling, g: SpinorFunction, beta: float, Sg: SpinorFunction,
                         G: GreenOperator | None = None, *, tol: float = 1e-3,
                         window: tuple[float, float] = DEFAULT_WINDOW) -> SingularCoefficient:
    """Coefficient of Phi in g = f + c (beta S_D^-1 Phi + Phi), by two routes.

    Limit route: c = g0+ / C+ from the fitted short-distance data.
    Integral route: c = <Phi, S~g> / (beta ||Phi||^2), using that the range
    of the closure is orthogonal to Phi.

    Raises
    ------
    RouteDisagreementError
        If the routes differ by more than `tol` relative.
    """
    if beta == 0 or math.isinf(beta):
        raise ValueError("the integral route needs a finite non-zero beta")
    if G is None:
        G = build_green_operator(c, g.grid)
    bd = extract_boundary_data(c, g, window)
    limit = complex(bd.g0[0]) / G.system.c_inf[0]
    phi = G.phi
    dens = phi.upper * Sg.upper + phi.lower * Sg.lower
    B = c.B
    total = inner_product(phi, Sg) + origin_tail_integral(g.grid, dens, [-2 * B, -B], panels=4)
    integral = total / (beta * vinf_norm_sq(G))
    gap = abs(limit - integral) / max(abs(limit), abs(integral), 1e-300)
    if gap > tol and max(abs(limit), abs(integral)) > 1e-8:
        raise RouteDisagreementError(
            f"limit route {limit:.6g} and integral route {integral:.6g} differ by {gap:.2e}")
    return SingularCoefficient(0.5 * (limit + integral), limit, integral, float(gap))


def regular_singular_split(c: Coupling, g: SpinorFunction, dec: AdjointDecomposition,
                           F: FundamentalSystem | None = None):
    """(g_reg, g_sing) with g_sing = a_inf v_inf in ker S* and g_reg in D(S_D)."""
    if F is None:
        from .homogeneous import build_fundamental_system
        F = build_fundamental_system(c)
    vi = F.eval_v_inf(g.r)
    sing = SpinorFunction(g.grid, dec.a_inf * vi[0], dec.a_inf * vi[1])
    return g - sing, sing
