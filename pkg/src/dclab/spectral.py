"""Discrete spectrum in the gap (-1, 1) and resolvents of S_beta.

Eigenvalues are found by shooting. The solution of S~u = E u decaying at
infinity is followed inward through its Pruefer angle and matched at
r ~ 0.5 onto the local pair (phi_sing, phi_reg) of Frobenius solutions:

    u = A phi_sing + C phi_reg,   g0 = A alpha,  g1 = C beta_lead,

so the short-distance data come out exactly, without a fit. E is an
eigenvalue of S_beta when g1+ - (c_nu beta + d_nu) g0+ = 0, and of the
regular realisation (beta = inf) when g0+ = 0.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .extensions import BoundaryData, ExtensionSpec, boundary_residual, cd_constants
from .greenop import (GreenOperator, apply_sd_inverse, build_green_operator,
                      estimate_sd_inverse_norm, vinf_norm_sq)
from .homogeneous import (Coupling, frobenius_pair, indicial_exponent,
                          leading_directions, wronskian_at)
from .radial import (RadialGrid, SpinorFunction, cumulative_integral, default_grid,
                     inner_product, integrate_to, norm, origin_tail_integral)

__all__ = [
    "Eigenpair",
    "ShootingData",
    "outer_radius",
    "SpectralReport",
    "ConditioningWarning",
    "RmaxWarning",
    "sommerfeld_energy",
    "decaying_solution",
    "shooting_data",
    "beta_of_energy",
    "eigenvalues_in_gap",
    "apply_sbeta_inverse",
    "gap_lower_bound",
    "krein_phi_z",
    "solve_sbeta_bvp",
]

MATCH_RADIUS = 0.5


class ConditioningWarning(RuntimeWarning):
    """The spectral parameter is close to the spectrum of S_D."""


class RmaxWarning(RuntimeWarning):
    """The outer starting radius is too small for the requested accuracy."""


def sommerfeld_energy(nu: float, n: int, kappa: int) -> float:
    """Sommerfeld fine-structure energy (1 + nu^2/(n + sqrt(kappa^2 - nu^2))^2)^-1/2."""
    if n < 0 or int(n) != n:
        raise ValueError("n must be a non-negative integer")
    if kappa == 0:
        raise ValueError("kappa must be non-zero")
    disc = kappa * kappa - nu * nu
    if disc <= 0:
        raise ValueError("Sommerfeld formula needs kappa^2 > nu^2")
    return (1.0 + nu * nu / (n + math.sqrt(disc)) ** 2) ** -0.5


def _decay_rate(E):
    return np.sqrt((1.0 - E) * (1.0 + E))


def outer_radius(E, base: float = 40.0, nu: float = 1.0) -> float:
    """Start radius well beyond the classical turning point ~ |nu| / lam^2."""
    lam = float(np.min(_decay_rate(np.atleast_1d(E))))
    return max(base, base / lam + 2 * abs(nu) / lam ** 2)


def _asymptotic_direction(c: Coupling, E, R):
    """Decaying direction (sqrt(1+E), -sqrt(1-E)) e^-lam r r^(-nu E/lam)."""
    E = np.asarray(E, dtype=float)
    lam = _decay_rate(E)
    amp = np.exp(-lam * R + (-c.nu * E / lam) * np.log(R))
    return np.array([np.sqrt(1.0 + E), -np.sqrt(1.0 - E)]) * amp


def _prufer_angles(c: Coupling, E, r_stop: float, R: float | None = None, rtol=1e-11):
    """Angle of the decaying solution at r_stop for each energy in E."""
    E = np.atleast_1d(np.asarray(E, dtype=float))
    if np.any(np.abs(E) >= 1):
        raise ValueError("energies must lie in (-1, 1)")
    R = outer_radius(E, nu=c.nu) if R is None else R
    theta0 = np.arctan2(-np.sqrt(1.0 - E), np.sqrt(1.0 + E))
    nu, kappa = c.nu, c.kappa

    def rhs(r, th):
        s, co = np.sin(th), np.cos(th)
        return (2 * kappa / r) * s * co + (1 - E + nu / r) * co * co - (1 + E - nu / r) * s * s

    sol = solve_ivp(rhs, (R, r_stop), theta0, method="DOP853", rtol=rtol, atol=1e-12)
    if not sol.success:
        raise RuntimeError(f"Pruefer integration failed: {sol.message}")
    return sol.y[:, -1]


@dataclass(frozen=True)
class ShootingData:
    """Local coefficients of the decaying solution at energy E."""

    E: np.ndarray
    A: np.ndarray          # coefficient of phi_sing
    C: np.ndarray          # coefficient of phi_reg
    alpha: np.ndarray      # leading vector of phi_sing
    beta_lead: np.ndarray  # leading vector of phi_reg

    @property
    def g0_plus(self):
        return self.A * self.alpha[0]

    @property
    def g1_plus(self):
        return self.C * self.beta_lead[0]

    def boundary_data(self, i: int = 0) -> BoundaryData:
        return BoundaryData(np.asarray(self.A[i] * self.alpha, complex),
                            np.asarray(self.C[i] * self.beta_lead, complex),
                            0.0, 0.0, (0.0, MATCH_RADIUS), True)


def shooting_data(c: Coupling, E, r_match: float = MATCH_RADIUS, R: float | None = None
                  ) -> ShootingData:
    """Project the decaying solution at each E onto the Frobenius pair.

    The pair is projectively normalised: (A, C) is scaled to unit length.
    """
    E = np.atleast_1d(np.asarray(E, dtype=float))
    th = _prufer_angles(c, E, r_match, R)
    A = np.empty_like(E)
    C = np.empty_like(E)
    for i, (e, t) in enumerate(zip(E, th)):
        ps, pr = frobenius_pair(c, e, r_match)
        M = np.column_stack([ps[:, 0], pr[:, 0]])
        A[i], C[i] = np.linalg.solve(M, [math.cos(t), math.sin(t)])
    alpha, beta_lead = leading_directions(c)
    nrm = np.hypot(A, C)
    return ShootingData(E, A / nrm, C / nrm, alpha, beta_lead)


def _root_values(sd: ShootingData, spec: ExtensionSpec | None):
    g0, g1 = sd.g0_plus, sd.g1_plus
    scale = np.abs(g0) + np.abs(g1)
    if spec is None or spec.is_distinguished:
        return g0 / scale
    return (g1 - spec.ratio_target.real * g0) / scale


def beta_of_energy(c: Coupling, E: float, constants: tuple[float, float], *,
                   tol: float = 1e-14) -> float:
    """Extension parameter for which E is an eigenvalue; inf if g0+ vanishes."""
    sd = shooting_data(c, [E])
    g0, g1 = sd.g0_plus[0], sd.g1_plus[0]
    if abs(g0) <= tol * (abs(g0) + abs(g1)):
        return math.inf
    c_nu, d_nu = constants
    return float((g1 / g0 - d_nu) / c_nu)


def decaying_solution(c: Coupling, E: float, grid: RadialGrid | None = None, *,
                      R: float | None = None, normalise: str = "l2",
                      check_rmax: bool = True) -> SpinorFunction:
    """Solution of S~u = E u decaying at infinity, sampled on `grid`.

    Integrated inward (the stable direction) from R = max(40, 40/lam).
    `normalise` is "l2" (unit norm, with the analytic r < r_min tail) or
    "g0" (leading r^-B coefficient equal to that of Phi; critical only).
    """
    if not abs(E) < 1:
        raise ValueError("E must lie in (-1, 1)")
    grid = grid or default_grid()
    R = outer_radius(E, nu=c.nu) if R is None else R
    if R < grid.r_max:
        raise ValueError("outer radius below the grid end")
    if check_rmax:
        _check_outer_radius(c, E, R)
    u = _asymptotic_direction(c, E, R)
    r = grid.nodes
    outer = r > MATCH_RADIUS
    vals = np.empty((2, r.size))
    um = integrate_to(c, E, R, u, np.r_[r[outer], MATCH_RADIUS]).real
    vals[:, outer] = um[:, :-1]
    # inside the matching radius the Frobenius series is more accurate than
    # the integrator, whose relative error is amplified by the 1/r terms
    ps, pr = frobenius_pair(c, E, MATCH_RADIUS)
    A, C = np.linalg.solve(np.column_stack([ps[:, 0], pr[:, 0]]), um[:, -1])
    ps, pr = frobenius_pair(c, E, r[~outer])
    vals[:, ~outer] = A * ps + C * pr
    f = SpinorFunction(grid, vals[0], vals[1])
    if normalise == "g0":
        # rescale so that A (coefficient of phi_sing) equals 1
        return f * (1.0 / A)
    B = indicial_exponent(c)
    dens = vals[0] ** 2 + vals[1] ** 2
    tail = origin_tail_integral(grid, dens, [-2 * B, 0.0], panels=4).real if B < 0.5 else 0.0
    total = float(grid.integrate(dens)) + tail
    return f * (1.0 / math.sqrt(total))


def _check_outer_radius(c: Coupling, E: float, R: float, tol: float = 1e-4) -> float:
    """Warn when doubling the start radius moves the local data C/A."""
    sd = shooting_data(c, [E], R=R)
    sd2 = shooting_data(c, [E], R=2 * R)
    change = abs(sd.A[0] * sd2.C[0] - sd.C[0] * sd2.A[0])
    if change > tol:
        warnings.warn(f"start radius {R:g} is insufficient at E = {E}: change {change:.2e}",
                      RmaxWarning, stacklevel=3)
    return change


@dataclass(frozen=True)
class Eigenpair:
    E: float
    residual: float
    g0: tuple[float, float]
    g1: tuple[float, float]


@dataclass(frozen=True, eq=False)
class SpectralReport:
    coupling: Coupling
    beta: float
    eigenvalues: list
    gap_bound: float
    sd_inv_norm: float
    scan_points: int
    skipped: int = 0

    @property
    def energies(self) -> np.ndarray:
        return np.array([e.E for e in self.eigenvalues])


def _scan_energies(lo: float, hi: float, n: int) -> np.ndarray:
    # uniform in E / sqrt(1 - E^2), which spreads points near the gap edges
    t = np.linspace(lo / math.sqrt(1 - lo * lo), hi / math.sqrt(1 - hi * hi), n)
    return t / np.sqrt(1 + t * t)


def eigenvalues_in_gap(c: Coupling, spec: ExtensionSpec, E_range=(-0.999, 0.999),
                       n_scan: int = 400, *, G: GreenOperator | None = None,
                       xtol: float = 1e-12, batch: int = 100,
                       sd_inv_norm: float | None = None) -> SpectralReport:
    """Eigenvalues of S_beta (or of the regular realisation for beta = inf)
    inside E_range, by sign changes of the projective root function."""
    lo, hi = E_range
    if not -1 < lo < hi < 1:
        raise ValueError("E_range must be an interval inside (-1, 1)")
    if c.is_critical:
        G = G or build_green_operator(c)
    elif not spec.is_distinguished:
        raise ValueError("finite beta needs a critical coupling")
    Es = _scan_energies(lo, hi, n_scan)
    # one start radius for the whole range keeps values independent of batching
    R = outer_radius([lo, hi], nu=c.nu)

    def fvec(E):
        return _root_values(shooting_data(c, E, R=R), spec)

    vals = np.concatenate([fvec(Es[i:i + batch]) for i in range(0, Es.size, batch)])

    lo_idx = np.nonzero(vals[:-1] * vals[1:] < 0)[0]
    exact = list(Es[vals == 0.0])
    skipped = 0
    roots = exact
    if lo_idx.size:
        a, b = Es[lo_idx], Es[lo_idx + 1]
        # re-evaluate brackets with the same path used during refinement
        fa, fb = fvec(a), fvec(b)
        keep = fa * fb < 0
        skipped += int(np.count_nonzero(~keep))
        roots += list(_refine_brackets(fvec, a[keep], b[keep], fa[keep], fb[keep], xtol))
    roots = sorted(roots)
    pairs = []
    sd = shooting_data(c, roots, R=R) if roots else None
    for i, E in enumerate(roots):
        bd = sd.boundary_data(i)
        res = boundary_residual(spec, bd)
        if res > 1e-4:
            skipped += 1
            continue
        pairs.append(Eigenpair(float(E), float(res), tuple(bd.g0.real), tuple(bd.g1.real)))
    if c.is_critical:
        sd_norm = sd_inv_norm or estimate_sd_inverse_norm(G).value
        bound = gap_lower_bound(spec.beta, sd_norm)
    else:
        sd_norm, bound = math.nan, math.nan
    return SpectralReport(c, spec.beta, pairs, bound, sd_norm, n_scan, skipped)


def _refine_brackets(fvec, a, b, fa, fb, xtol: float, maxiter: int = 200):
    """Illinois regula falsi on many brackets at once; fvec is vectorised."""
    a, b, fa, fb = (np.array(x, dtype=float) for x in (a, b, fa, fb))
    side = np.zeros(a.size, dtype=int)
    done = np.zeros(a.size, dtype=bool)
    for _ in range(maxiter):
        todo = ~done & (np.abs(b - a) > xtol)
        if not np.any(todo):
            break
        i = np.nonzero(todo)[0]
        x = (a[i] * fb[i] - b[i] * fa[i]) / (fb[i] - fa[i])
        # guard against stagnation at an end point
        mid = 0.5 * (a[i] + b[i])
        bad = ~((x > np.minimum(a[i], b[i])) & (x < np.maximum(a[i], b[i])))
        x[bad] = mid[bad]
        fx = fvec(x)
        for k, j in enumerate(i):
            if fx[k] == 0.0:
                a[j] = b[j] = x[k]
                done[j] = True
            elif fx[k] * fb[j] < 0:
                a[j], fa[j] = b[j], fb[j]
                b[j], fb[j] = x[k], fx[k]
                side[j] = 0
            else:
                b[j], fb[j] = x[k], fx[k]
                if side[j] == -1:
                    fa[j] *= 0.5
                side[j] = -1
            # regula falsi keeps [a, b] ordered by update, width shrinks from b's side
    return np.where(np.abs(fa) < np.abs(fb), a, b)


def gap_lower_bound(beta: float, sd_inv_norm: float) -> float:
    """|beta| / (|beta| ||S_D^-1|| + 1), with the limit 1/||S_D^-1|| at beta = inf."""
    if not sd_inv_norm > 0:
        raise ValueError("the norm of S_D^-1 must be positive")
    if math.isinf(beta):
        return 1.0 / sd_inv_norm
    b = abs(beta)
    return b / (b * sd_inv_norm + 1.0)


def apply_sbeta_inverse(G: GreenOperator, spec: ExtensionSpec, g: SpinorFunction
                        ) -> SpinorFunction:
    """S_beta^-1 g = S_D^-1 g + <Phi, g> Phi / (beta ||Phi||^2)."""
    if spec.beta == 0:
        raise ZeroDivisionError("S_beta is not invertible at beta = 0")
    f = apply_sd_inverse(G, g)
    if spec.is_distinguished:
        return f
    phi = G.phi
    coef = inner_product(phi, g) / (spec.beta * vinf_norm_sq(G))
    return f + coef * phi


def krein_phi_z(G: GreenOperator, z: float, *, warn_below: float = 1e-3) -> SpinorFunction:
    """Phi(z) = Phi + z (S_D - z)^-1 Phi.

    Phi(z) spans ker(S* - z) and has the same r^-B coefficient as Phi, so it
    is the decaying solution at energy z scaled to that coefficient.
    """
    c = G.coupling
    if z == 0:
        return G.phi
    if not abs(z) < 1:
        raise ValueError("z must lie in the gap (-1, 1)")
    sd = shooting_data(c, [z])
    if abs(sd.A[0]) < warn_below:
        warnings.warn(f"z = {z} is close to an eigenvalue of S_D", ConditioningWarning,
                      stacklevel=2)
    return decaying_solution(c, z, G.grid, normalise="g0")


def solve_sbeta_bvp(c: Coupling, beta: float, g: SpinorFunction,
                    constants: tuple[float, float], *, r_seed: float = 1e-2,
                    R: float = 60.0) -> SpinorFunction:
    """Solve S~u = g with the beta boundary condition at 0 and decay at infinity.

    Independent of the closed-form fundamental system: the solution
    psi_beta obeying the boundary condition is seeded from Frobenius series
    at r_seed and integrated outward, psi_inf is integrated inward from R,
    and u follows by variation of constants with W = det[psi_beta, psi_inf].
    """
    grid = g.grid
    r = grid.nodes
    c_nu, d_nu = constants
    alpha, beta_lead = leading_directions(c)
    ratio = c_nu * beta + d_nu
    # g1+ / g0+ = ratio with A = 1
    C = ratio * alpha[0] / beta_lead[0]
    inner = r <= r_seed
    ps, pr = frobenius_pair(c, 0.0, r[inner])
    psi_b = np.empty((2, r.size))
    psi_b[:, inner] = ps + C * pr
    ps0, pr0 = frobenius_pair(c, 0.0, r_seed)
    seed = (ps0 + C * pr0)[:, 0]
    psi_b[:, ~inner] = integrate_to(c, 0.0, r_seed, seed, r[~inner]).real
    psi_i = integrate_to(c, 0.0, R, _asymptotic_direction(c, 0.0, R), r).real
    W = np.median(wronskian_at(psi_b, psi_i)[(r > 1e-3) & (r < 10)])
    B = c.B
    out = []
    for part in (np.real, np.imag):
        gu, gl = part(g.upper), part(g.lower)
        hb = psi_b[0] * gu + psi_b[1] * gl
        hi = psi_i[0] * gu + psi_i[1] * gl
        Ib = cumulative_integral(grid, hb) + origin_tail_integral(grid, hb, [-B, 0.0], 4).real
        Ii = cumulative_integral(grid, hi, from_right=True)
        out.append(-(Ii * psi_b + Ib * psi_i) / W)
    re, im = out
    return SpinorFunction(grid, re[0] + 1j * im[0], re[1] + 1j * im[1])
