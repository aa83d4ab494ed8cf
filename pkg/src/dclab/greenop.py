"""The distinguished realisation S_D through its Green kernel.

For kappa = +-1 in the critical regime S_D^-1 is the integral operator with
kernel

    G(r, rho) = -(1/W) v_inf(r) v0(rho)^T   for rho < r
    G(r, rho) = -(1/W) v0(r) v_inf(rho)^T   for r < rho

where W = det[v0, v_inf]. The overall minus sign is what makes
S~ (S_D^-1 g) = g; with the opposite sign the operator inverts -S~.
Application uses the cumulative form

    S_D^-1 g = -(Theta_inf v0 + Theta_0 v_inf),
    Theta_0(r) = (1/W) int_0^r v0 . g,  Theta_inf(r) = (1/W) int_r^inf v_inf . g.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .homogeneous import Coupling, FundamentalSystem, build_fundamental_system
from .radial import (RadialGrid, SpinorFunction, apply_dirac, cumulative_integral,
                     default_grid, inner_product, norm, origin_tail_integral)

__all__ = [
    "GreenOperator",
    "QuadratureWarning",
    "build_green_operator",
    "green_kernel",
    "apply_sd_inverse",
    "vinf_norm_sq",
    "vinf_norm_sq_substitution",
    "dense_kernel_apply",
    "rayleigh_lower_bound",
    "p_pm",
    "estimate_sd_inverse_norm",
    "NormEstimate",
]

POWER_SEED = 20240617


class QuadratureWarning(RuntimeWarning):
    """The inverse failed its own residual check."""


@dataclass(frozen=True, eq=False)
class GreenOperator:
    """S_D^-1 discretised on a grid.

    The fundamental solutions are sampled once; `cached_vinf_norm_sq`
    holds ||v_inf||^2 including the analytic r < r_min tail.
    """

    system: FundamentalSystem
    grid: RadialGrid
    cached_vinf_norm_sq: float = field(init=False)
    v0: np.ndarray = field(init=False, repr=False)
    v_inf: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        r = self.grid.nodes
        object.__setattr__(self, "v0", np.asarray(self.system.eval_v0(r), float))
        object.__setattr__(self, "v_inf", np.asarray(self.system.eval_v_inf(r), float))
        object.__setattr__(self, "cached_vinf_norm_sq", _vinf_norm_sq_tail(self))

    @property
    def coupling(self) -> Coupling:
        return self.system.coupling

    @property
    def phi(self) -> SpinorFunction:
        """The spanning element Phi = v_inf of ker S*, sampled."""
        return SpinorFunction(self.grid, self.v_inf[0], self.v_inf[1])

    @property
    def v0_function(self) -> SpinorFunction:
        return SpinorFunction(self.grid, self.v0[0], self.v0[1])


def build_green_operator(c: Coupling, grid: RadialGrid | None = None) -> GreenOperator:
    return GreenOperator(build_fundamental_system(c), grid or default_grid())


def green_kernel(c: Coupling | FundamentalSystem, r: float, rho: float) -> np.ndarray:
    """2x2 kernel matrix G(r, rho) of S_D^-1."""
    fs = c if isinstance(c, FundamentalSystem) else build_fundamental_system(c)
    if r <= 0 or rho <= 0:
        raise ValueError("kernel arguments must be positive")
    if rho < r:
        left, right = fs.eval_v_inf(r), fs.eval_v0(rho)
    else:
        left, right = fs.eval_v0(r), fs.eval_v_inf(rho)
    return -np.outer(left, right) / fs.w0_inf


def _vinf_norm_sq_tail(G: GreenOperator) -> float:
    vi = G.v_inf
    body = float(G.grid.integrate(vi[0] ** 2 + vi[1] ** 2))
    B = G.coupling.B
    c_inf = G.system.c_inf
    # below r_min v_inf ~ c_inf r^-B + q r^B
    rm = G.grid.r_min
    tail = (float(c_inf @ c_inf) * rm ** (1 - 2 * B) / (1 - 2 * B)
            + 2.0 * float(c_inf @ G.system.q) * rm)
    return body + tail


def vinf_norm_sq(G: GreenOperator) -> float:
    """||v_inf||^2 over the half line."""
    return G.cached_vinf_norm_sq


def vinf_norm_sq_substitution(c: Coupling, nodes: int = 200) -> float:
    """||v_inf||^2 by an independent route: Gauss-Jacobi quadrature in
    s = r^(1-2B) on (0, 1], where the integrand is smooth, plus
    Gauss-Laguerre quadrature of the e^(-2r) tail on (1, inf)."""
    from scipy.special import roots_laguerre, roots_legendre

    fs = build_fundamental_system(c)
    B = c.B
    p = 1.0 - 2.0 * B
    # r = s^(1/p), dr = (1/p) s^(1/p - 1) ds; |v|^2 r^(2B) is smooth in r
    x, w = roots_legendre(nodes)
    s = 0.5 * (x + 1.0)
    r = s ** (1.0 / p)
    v = fs.eval_v_inf(r)
    dens = (v[0] ** 2 + v[1] ** 2) * r ** (2 * B)
    inner = 0.5 * np.sum(w * dens / p)
    xl, wl = roots_laguerre(60)
    rl = 1.0 + xl / 2.0
    vl = fs.eval_v_inf(rl)
    outer = 0.5 * np.sum(wl * (vl[0] ** 2 + vl[1] ** 2) * np.exp(xl))
    return float(inner + outer)


def p_pm(G: GreenOperator) -> tuple[float, float]:
    """Coefficients of r^B in S_D^-1 Phi at small r.

    They equal -q^{+-} ||v_inf||^2 / W: the minus sign is that of the
    kernel (see the module docstring).
    """
    fac = -vinf_norm_sq(G) / G.system.w0_inf
    return G.system.q_plus * fac, G.system.q_minus * fac


def _origin_tail(G: GreenOperator, h) -> float:
    # for g in the adjoint domain v0 . g is a combination of rho^0, rho^B
    # and rho^2B near the origin (g ~ g0 rho^-B + g1 rho^B, or regular)
    B = G.coupling.B
    return origin_tail_integral(G.grid, h, [0.0, B, 2 * B]).real


def apply_sd_inverse(G: GreenOperator, g: SpinorFunction, *, check: float | None = None
                     ) -> SpinorFunction:
    """S_D^-1 g by cumulative quadrature of the Theta functions.

    With `check` set, a QuadratureWarning is issued when the relative L^2
    residual of S~ f = g exceeds it.
    """
    if not g.grid.same_as(G.grid):
        raise ValueError("g must be sampled on the operator's grid")
    W = G.system.w0_inf
    B = G.coupling.B
    v0, vi = G.v0, G.v_inf
    out = []
    for part in (np.real, np.imag):
        gu, gl = part(g.upper), part(g.lower)
        if not (np.any(gu) or np.any(gl)):
            out.append(np.zeros((2, G.grid.size)))
            continue
        h0 = v0[0] * gu + v0[1] * gl
        th0 = cumulative_integral(G.grid, h0) + _origin_tail(G, h0)
        thi = cumulative_integral(G.grid, vi[0] * gu + vi[1] * gl, from_right=True)
        out.append(-(thi * v0 + th0 * vi) / W)
    re, im = out
    f = SpinorFunction(G.grid, re[0] + 1j * im[0], re[1] + 1j * im[1])
    if check is not None:
        res = norm(apply_dirac(G.coupling, 0.0, f) - g) / max(norm(g), 1e-300)
        if res > check:
            warnings.warn(f"S_D^-1 residual {res:.2e} exceeds {check:.1e}",
                          QuadratureWarning, stacklevel=2)
    return f


def dense_kernel_apply(G: GreenOperator, g: SpinorFunction) -> SpinorFunction:
    """O(N^2) application by direct quadrature of the kernel (test path).

    The kernel jumps across r = rho, so the panel holding r is split at r
    and each half integrated with fresh Gauss nodes, g being interpolated
    from its panel values and the kernel evaluated from the closed forms.
    """
    from scipy.interpolate import BarycentricInterpolator

    fs = G.system
    W = fs.w0_inf
    grid = G.grid
    r, w = grid.nodes, grid.weights
    v0, vi = G.v0, G.v_inf
    gv = g.values
    n, m = grid.panels, grid.order
    panel = np.repeat(np.arange(n), m)
    own = panel[:, None] == panel[None, :]
    lower = r[None, :] < r[:, None]
    out = np.empty((2, r.size), complex)
    pv0 = v0[0][None, :] * gv[0] + v0[1][None, :] * gv[1]
    pvi = vi[0][None, :] * gv[0] + vi[1][None, :] * gv[1]
    for comp in range(2):
        K = np.where(lower, vi[comp][:, None] * pv0, v0[comp][:, None] * pvi)
        K[own] = 0.0
        out[comp] = K @ w
    x, wx = np.polynomial.legendre.leggauss(m)
    for p in range(n):
        idx = np.arange(p * m, (p + 1) * m)
        a, b = grid.edges[p], grid.edges[p + 1]
        interp = [BarycentricInterpolator(r[idx], gv[k, idx]) for k in range(2)]
        for i in idx:
            for lo, hi, below in ((a, r[i], True), (r[i], b, False)):
                t = 0.5 * (hi + lo) + 0.5 * (hi - lo) * x
                wt = 0.5 * (hi - lo) * wx
                gt = np.array([interp[0](t), interp[1](t)])
                if below:   # rho < r: v_inf(r) v0(rho)^T
                    vt = fs.eval_v0(t)
                    out[:, i] += vi[:, i] * np.sum(wt * (vt[0] * gt[0] + vt[1] * gt[1]))
                else:
                    vt = fs.eval_v_inf(t)
                    out[:, i] += v0[:, i] * np.sum(wt * (vt[0] * gt[0] + vt[1] * gt[1]))
    out = -out / W
    return SpinorFunction(grid, out[0], out[1])


@dataclass(frozen=True)
class NormEstimate:
    value: float
    iterations: int
    relative_change: float
    converged: bool
    seed: int


def estimate_sd_inverse_norm(G: GreenOperator, *, tol: float = 1e-8, max_iter: int = 500,
                             seed: int = POWER_SEED) -> NormEstimate:
    """Dominant singular value of the discretised S_D^-1 by power iteration.

    S_D^-1 is self-adjoint, so the norms of the normalised iterates converge
    to the eigenvalue of largest modulus whatever its sign. The start vector
    is drawn from a seeded generator.

    Raises
    ------
    RuntimeError
        If the successive estimates do not settle to `tol` within `max_iter`.
    """
    rng = np.random.default_rng(seed)
    r = G.grid.nodes
    env = np.exp(-r / 4.0)
    x = SpinorFunction(G.grid, rng.standard_normal(r.size) * env,
                       rng.standard_normal(r.size) * env)
    x = x * (1.0 / norm(x))
    prev = 0.0
    change = np.inf
    for it in range(1, max_iter + 1):
        y = apply_sd_inverse(G, x)
        est = norm(y)
        change = abs(est - prev) / est
        if change <= tol:
            return NormEstimate(est, it, change, True, seed)
        prev = est
        x = y * (1.0 / est)
    raise RuntimeError(f"power iteration did not converge: change {change:.2e}")


def rayleigh_lower_bound(G: GreenOperator, g: SpinorFunction) -> float:
    return norm(apply_sd_inverse(G, g)) / norm(g)
