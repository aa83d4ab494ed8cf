import math
import warnings

import numpy as np
import pytest

from conftest import smooth_spinor
from dclab.extensions import ExtensionSpec, boundary_residual, extract_boundary_data
from dclab.greenop import apply_sd_inverse, vinf_norm_sq
from dclab.homogeneous import CRITICAL_LOW, Coupling
from dclab.radial import SpinorFunction, apply_dirac, inner_product, make_grid, norm
from dclab.spectral import (ConditioningWarning, RmaxWarning, apply_sbeta_inverse,
                            beta_of_energy, decaying_solution, eigenvalues_in_gap,
                            gap_lower_bound, krein_phi_z, shooting_data, solve_sbeta_bvp,
                            sommerfeld_energy)

REGULAR = ExtensionSpec(math.inf, None)


@pytest.fixture(scope="module")
def G_fine(c09):
    from dclab.greenop import build_green_operator
    return build_green_operator(c09, make_grid(1e-8, 40, 800, 8))


def rel_residual(c, E, u):
    res = apply_dirac(c, E, u)
    # the stencil is least accurate in the far tail where u is negligible
    return norm(res.restrict(0, 30)) / norm(u.restrict(0, 30))


# -- Sommerfeld formula ------------------------------------------------------

def test_sommerfeld_examples():
    assert sommerfeld_energy(0.0, 3, 2) == 1.0
    assert sommerfeld_energy(-0.5, 0, 1) == pytest.approx(math.sqrt(0.75), abs=1e-15)
    with pytest.raises(ValueError):
        sommerfeld_energy(0.9, 0, 0)
    with pytest.raises(ValueError):
        sommerfeld_energy(1.2, 0, 1)


def test_sommerfeld_monotone_in_coupling():
    nus = np.linspace(0.0, 0.99, 60)
    for n in range(4):
        for kappa in (1, -1, 2):
            E = [sommerfeld_energy(nu, n, kappa) for nu in nus]
            assert np.all(np.diff(E) < 0)


# -- decaying solution ---------------------------------------------------------

@pytest.mark.parametrize("E", [-0.7, 0.0, 0.3, 0.9])
def test_decaying_solution_solves_equation(c09, E):
    # the finer grid resolves the r^-B branch point below 1e-6, as for v_inf
    u = decaying_solution(c09, E, make_grid(1e-8, 40, 800, 8))
    assert rel_residual(c09, E, u) <= 1e-6


def test_decaying_solution_at_zero_is_phi(c09, G09):
    u = decaying_solution(c09, 0.0)
    phi = G09.phi * (1.0 / math.sqrt(vinf_norm_sq(G09)))
    sign = np.sign(u.upper[100] / phi.upper[100])
    assert norm(u * sign - phi) <= 1e-6


@pytest.mark.parametrize("E", [-0.5, 0.3])
def test_decaying_solution_power_law(c09, E):
    u = decaying_solution(c09, E, make_grid(1e-6, 40.0, 120, 10))
    r = u.grid.nodes
    sel = (r >= 20) & (r <= 35)
    lam = math.sqrt(1 - E * E)
    y = np.log(np.abs(u.upper[sel])) + lam * r[sel]
    x = r[sel]
    basis = np.column_stack([np.ones_like(x), np.log(x), 1 / x, 1 / x ** 2])
    coef = np.linalg.lstsq(basis, y, rcond=None)[0]
    # the decaying branch carries r^(-nu E / lam)
    assert coef[1] == pytest.approx(-c09.nu * E / lam, abs=1e-4)


def test_decaying_solution_rejects_gap_edges(c09):
    with pytest.raises(ValueError):
        decaying_solution(c09, 1.0)


def test_rmax_warning(c09):
    with pytest.warns(RmaxWarning):
        decaying_solution(c09, 0.95, make_grid(1e-6, 1.0, 60, 8), R=1.0)


# -- spectral flow curve -------------------------------------------------------

def test_beta_vanishes_at_zero_energy(c09, cd09):
    assert abs(beta_of_energy(c09, 0.0, cd09)) <= 1e-8


def test_beta_curve_is_continuous_and_increasing(c09, cd09):
    Es = np.linspace(-0.9, 0.99, 100)
    sd = shooting_data(c09, Es)
    beta = ((sd.g1_plus / sd.g0_plus).real - cd09[1]) / cd09[0]
    mids = 0.5 * (Es[:-1] + Es[1:])
    sdm = shooting_data(c09, mids)
    bmid = ((sdm.g1_plus / sdm.g0_plus).real - cd09[1]) / cd09[0]
    poles = 0
    for i in range(Es.size - 1):
        if beta[i] > 0 > beta[i + 1]:
            poles += 1  # passes through infinity
            continue
        assert beta[i] < bmid[i] < beta[i + 1]
    assert 1 <= poles <= 3


def test_beta_infinite_at_subcritical_levels():
    c = Coupling(-0.5, 1)
    E = sommerfeld_energy(-0.5, 1, 1)
    sd = shooting_data(c, [E, 0.5 * (E + sommerfeld_energy(-0.5, 0, 1))])
    g0, g1 = np.abs(sd.g0_plus), np.abs(sd.g1_plus)
    assert g0[0] / (g0[0] + g1[0]) < 1e-8
    assert g0[1] / (g0[1] + g1[1]) > 1e-2
    assert beta_of_energy(c, E, (1.0, 0.0), tol=1e-8) == math.inf


# -- eigenvalues ---------------------------------------------------------------

@pytest.mark.parametrize("nu", [-0.3, -0.5, -0.7, -(CRITICAL_LOW - 0.01)])
def test_subcritical_levels_negative_kappa(nu):
    rep = eigenvalues_in_gap(Coupling(nu, -1), REGULAR, (0.0, 0.999))
    ref = [sommerfeld_energy(nu, n, 1) for n in range(3)]
    assert rep.energies[:3] == pytest.approx(ref, abs=1e-6)
    assert math.isnan(rep.gap_bound)


def test_subcritical_levels_positive_kappa():
    # for kappa = +1 the n = 0 level is absent; the series starts at n = 1
    rep = eigenvalues_in_gap(Coupling(-0.5, 1), REGULAR, (0.0, 0.999))
    ref = [sommerfeld_energy(-0.5, n, 1) for n in (1, 2, 3)]
    assert rep.energies[:3] == pytest.approx(ref, abs=1e-6)


def test_subcritical_finite_beta_rejected():
    with pytest.raises(ValueError):
        eigenvalues_in_gap(Coupling(-0.5, 1), ExtensionSpec(1.0, 1.0), (0.0, 0.9))


def test_zero_energy_eigenvalue_for_beta_zero(c09, G09, cd09):
    rep = eigenvalues_in_gap(c09, ExtensionSpec.make(0.0, cd09), (-0.5, 0.5), 100, G=G09)
    assert np.min(np.abs(rep.energies)) <= 1e-8


def test_reported_eigenvalues_satisfy_condition(c09, G09, cd09):
    spec = ExtensionSpec.make(1.0, cd09)
    rep = eigenvalues_in_gap(c09, spec, G=G09)
    assert rep.eigenvalues
    for ev in rep.eigenvalues:
        assert abs(ev.E) < 1 and ev.residual <= 1e-4
        assert abs(ev.E) >= rep.gap_bound - 1e-6
    # cross-check one eigenvalue against the grid-based boundary extraction
    E = rep.eigenvalues[-1].E
    bd = extract_boundary_data(c09, decaying_solution(c09, E))
    assert boundary_residual(spec, bd) <= 1e-3


def test_distinguished_ground_state(c09, G09):
    rep = eigenvalues_in_gap(c09, REGULAR, G=G09)
    # observed: the eigenvalue of S_D closest to zero sits at -B
    nearest = rep.energies[np.argmin(np.abs(rep.energies))]
    assert nearest == pytest.approx(-c09.B, abs=1e-8)
    assert 1.0 / abs(nearest) == pytest.approx(rep.sd_inv_norm, rel=1e-6)


@pytest.mark.slow
def test_root_count_stable_under_refinement(c09, G09, cd09):
    spec = ExtensionSpec.make(-1.0, cd09)
    a = eigenvalues_in_gap(c09, spec, n_scan=400, G=G09)
    b = eigenvalues_in_gap(c09, spec, n_scan=800, G=G09, sd_inv_norm=a.sd_inv_norm)
    assert len(a.eigenvalues) == len(b.eigenvalues)
    assert np.allclose(a.energies, b.energies, atol=1e-9)


@pytest.mark.slow
def test_gap_bound_on_product_sweep():
    from dclab.extensions import cd_constants
    from dclab.greenop import build_green_operator, estimate_sd_inverse_norm
    worst = math.inf
    for nu in (0.87, 0.88, 0.9, 0.95, 0.99):
        c = Coupling(nu, 1)
        G = build_green_operator(c)
        cd = cd_constants(c, G)
        sdn = estimate_sd_inverse_norm(G).value
        for beta in (-4.0, -1.0, -0.25, 0.25, 1.0, 4.0, math.inf):
            rep = eigenvalues_in_gap(c, ExtensionSpec.make(beta, cd), G=G, sd_inv_norm=sdn)
            if rep.eigenvalues:
                worst = min(worst, np.min(np.abs(rep.energies)) - rep.gap_bound)
    assert worst >= -1e-6


# -- resolvents ----------------------------------------------------------------

def test_gap_lower_bound():
    assert gap_lower_bound(math.inf, 2.0) == 0.5
    assert gap_lower_bound(0.0, 2.0) == 0.0
    assert gap_lower_bound(1e12, 2.0) == pytest.approx(0.5, rel=1e-11)
    vals = [gap_lower_bound(b, 2.3) for b in (0.1, 0.5, 1, 3, 10)]
    assert np.all(np.diff(vals) > 0)
    assert gap_lower_bound(-3.0, 2.3) == gap_lower_bound(3.0, 2.3)
    with pytest.raises(ValueError):
        gap_lower_bound(1.0, 0.0)


@pytest.mark.parametrize("beta", [-2.0, 0.5, math.inf])
def test_sbeta_inverse_properties(c09, G09, cd09, rng, beta):
    spec = ExtensionSpec.make(beta, cd09)
    up, lo = smooth_spinor(G09.grid, rng)
    g = SpinorFunction(G09.grid, up, lo)
    f = apply_sbeta_inverse(G09, spec, g)
    res = apply_dirac(c09, 0.0, f) - g
    assert norm(res.restrict(0, 30)) <= 1e-6 * norm(g)
    assert boundary_residual(spec, extract_boundary_data(c09, f)) <= 1e-3


def test_sbeta_inverse_orthogonal_input(G09, cd09, rng):
    up, lo = smooth_spinor(G09.grid, rng)
    g = SpinorFunction(G09.grid, up, lo)
    phi = G09.phi
    g = g - (inner_product(phi, g) / inner_product(phi, phi)) * phi
    f = apply_sbeta_inverse(G09, ExtensionSpec.make(0.5, cd09), g)
    assert norm(f - apply_sd_inverse(G09, g)) <= 1e-10 * norm(f)


def test_sbeta_inverse_not_invertible_at_zero(G09, cd09):
    with pytest.raises(ZeroDivisionError):
        apply_sbeta_inverse(G09, ExtensionSpec.make(0.0, cd09), G09.phi)


def test_rank_one_formula_matches_boundary_value_solve(c09, G09, cd09):
    rng = np.random.default_rng(7)
    worst = 0.0
    for beta in (-3.0, -1.0, 0.5, 2.0):
        spec = ExtensionSpec.make(beta, cd09)
        for _ in range(10):
            up, lo = smooth_spinor(G09.grid, rng)
            g = SpinorFunction(G09.grid, up, lo)
            a = apply_sbeta_inverse(G09, spec, g)
            b = solve_sbeta_bvp(c09, beta, g, cd09)
            worst = max(worst, norm(a - b) / norm(a))
    assert worst <= 1e-5


# -- Krein family --------------------------------------------------------------

def test_krein_at_zero_is_phi(G09):
    assert np.array_equal(krein_phi_z(G09, 0.0).values, G09.phi.values)


@pytest.mark.parametrize("z", [-0.3, 0.2, 0.6])
def test_krein_solves_shifted_equation(c09, G_fine, z):
    pz = krein_phi_z(G_fine, z)
    assert rel_residual(c09, z, pz) <= 1e-6
    assert norm(pz) > 0.1 * norm(G_fine.phi)


def test_krein_slope_at_zero(G09):
    slope_ref = norm(apply_sd_inverse(G09, G09.phi))
    for z in (1e-3, -1e-3):
        slope = norm(krein_phi_z(G09, z) - G09.phi) / abs(z)
        assert slope == pytest.approx(slope_ref, rel=1e-2)


def test_krein_warns_near_spectrum(c09, G09):
    with pytest.warns(ConditioningWarning):
        krein_phi_z(G09, -c09.B + 1e-7)
    with pytest.raises(ValueError):
        krein_phi_z(G09, 1.5)
