import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scipy.integrate import trapezoid

import oracles as O
from nvsteady.observables import (compute_pressures, compute_rho, compute_source,
                                  field_energy_interior, field_residual, flux_residual,
                                  mass_upper_bound, momentum_density, observe, particle_number,
                                  summarize, total_energy, total_mass, tov_residual, tov_scale)
from nvsteady.solver import extend_vacuum, integrate_steady_state
from nvsteady.special_functions import PolytropicAnsatz

EW0 = PolytropicAnsatz(k=0.0, mu=0.0, E0=2.0)


# -- pointwise densities -------------------------------------------------------

def test_rho_example():
    expected = 2.0 * math.pi * (3.0 ** 2.5 / 5.0 + 3.0 ** 1.5 / 3.0)
    for r in (0.3, 1.0, 7.0):
        assert compute_rho(r, 0.0, EW0) == pytest.approx(expected, rel=1e-9)
    assert expected == pytest.approx(30.47, rel=1e-3)


def test_pressure_example():
    P, PT = compute_pressures(1.0, 0.0, EW0)
    expected = math.pi * (2.0 / 3.0) * 3.0 ** 2.5 / 5.0
    assert P == pytest.approx(expected, rel=1e-9)
    assert P == pytest.approx(6.530, rel=1e-3)
    assert PT == pytest.approx(P, rel=1e-12)


@pytest.mark.parametrize("fn", [compute_rho, compute_source])
def test_vanish_outside_support(fn):
    assert fn(1.0, math.log(2.0), EW0) == 0.0
    assert fn(1.0, 0.0, EW0.replace(amplitude=0.0)) == 0.0


def test_pressures_vanish_outside_support():
    assert compute_pressures(1.0, 1.0, EW0) == (0.0, 0.0)


def test_vectorised_inputs():
    a = PolytropicAnsatz(k=0.5, mu=0.5, E0=1.0)
    r = np.linspace(0.1, 2.0, 5)
    phi = np.log(np.linspace(0.2, 1.2, 5))
    rho = compute_rho(r, phi, a)
    assert rho.shape == (5,)
    assert rho[-1] == 0.0
    assert rho[0] == pytest.approx(compute_rho(0.1, float(phi[0]), a), rel=1e-15)


@settings(max_examples=40, deadline=None)
@given(k=st.floats(-0.45, 3.0), mu=st.floats(-0.9, 3.0), r=st.floats(0.01, 5.0),
       frac=st.floats(0.02, 0.99))
def test_pointwise_identities(k, mu, r, frac):
    a = PolytropicAnsatz(k=k, mu=mu, E0=1.0)
    phi = math.log(frac)
    rho = compute_rho(r, phi, a)
    P, PT = compute_pressures(r, phi, a)
    q = compute_source(r, phi, a)
    assert PT == pytest.approx((k + 1) * P, rel=1e-10)
    assert abs(q - (rho - P - 2 * PT)) <= 1e-9 * rho
    assert abs(q - (rho - (2 * k + 3) * P)) <= 1e-9 * rho


@pytest.mark.parametrize("k", [0.0, 1.0])
@pytest.mark.parametrize("frac", [0.3, 0.6])
def test_densities_against_cartesian_momentum_quadrature(k, frac):
    a = PolytropicAnsatz(k=k, mu=1.0, E0=1.0)
    r, phi = 0.7, math.log(frac)
    n_ref = O.half_ball_density(r, phi, k, 1.0, 1.0)
    rho_ref = O.half_ball_density(r, phi, k, 1.0, 1.0, weight_power=1)
    q_ref = math.exp(2 * phi) * O.half_ball_density(r, phi, k, 1.0, 1.0, weight_power=-1)
    assert momentum_density(r, phi, a) == pytest.approx(n_ref, rel=1e-6)
    assert compute_rho(r, phi, a) == pytest.approx(rho_ref, rel=1e-6)
    assert compute_source(r, phi, a) == pytest.approx(q_ref, rel=1e-6)


def test_momentum_density_vanishes():
    assert momentum_density(1.0, math.log(2.0), EW0) == 0.0
    assert momentum_density(1.0, 0.0, EW0.replace(amplitude=0.0)) == 0.0


# -- profile observables -----------------------------------------------------------

def test_profile_identities(baseline):
    obs, k = baseline.obs, baseline.ansatz.k
    live = obs.pressure > 0.0
    assert np.all(np.abs(obs.pressure_t - (k + 1) * obs.pressure)[live]
                  <= 1e-10 * obs.pressure_t[live])
    assert np.all(np.abs(obs.source - (obs.rho - obs.pressure - 2 * obs.pressure_t))
                  <= 1e-9 * obs.rho)
    assert obs.rho[-1] == pytest.approx(0.0, abs=1e-12)


def test_baseline_mass(baseline, baseline_tight):
    M, err = total_mass(baseline.profile, with_error=True)
    assert M == pytest.approx(7.9777424, rel=1e-7)
    assert err < 1e-8 * M
    assert M == pytest.approx(total_mass(baseline_tight.profile), rel=1e-7)
    assert M <= mass_upper_bound(baseline.profile)
    # the cumulative column integrates the source q = rho - 3P, not rho
    assert baseline.obs.mass_cumulative[-1] < M


def test_mass_convergence_under_node_doubling(baseline, base_ansatz):
    from nvsteady.solver import SolverNumerics

    from conftest import BASE_PHI0
    fine = integrate_steady_state(BASE_PHI0, base_ansatz, SolverNumerics(n_output=4000))
    assert total_mass(fine) == pytest.approx(total_mass(baseline.profile), rel=1e-9)


def test_flux_chain(baseline):
    """r^2 phi' increases to C <= M, phi_inf finite with e^phi_inf >= E0."""
    p = baseline.profile
    assert np.all(np.diff(p.v) >= -1e-14)
    ext = extend_vacuum(p)
    M = total_mass(p)
    assert 0.0 < ext.C <= M * (1 + 1e-9)
    assert math.isfinite(ext.phi_inf)
    assert math.exp(ext.phi_inf) >= p.ansatz.E0
    # the field equation integrated to R gives C = int r^2 q exactly
    assert ext.C == pytest.approx(baseline.obs.mass_cumulative[-1], rel=1e-6)


def test_energy_tail_closed_form(baseline):
    p = baseline.profile
    M = total_mass(p)
    ext = extend_vacuum(p)
    E = total_energy(p, M)
    assert E == pytest.approx(M + field_energy_interior(p) + ext.C ** 2 / ext.R, rel=1e-15)
    # the tail integral int_R^inf C^2 / r^2 dr done by quadrature
    from scipy.integrate import quad
    tail, _ = quad(lambda r: (ext.C / r ** 2) ** 2 * r ** 2, ext.R, np.inf)
    assert tail == pytest.approx(ext.C ** 2 / ext.R, rel=1e-10)
    assert math.isfinite(E) and E > M


def test_field_energy_against_trapezoid(baseline):
    p = baseline.profile
    ref = trapezoid(p.grid ** 2 * p.dphi ** 2, p.grid)
    assert field_energy_interior(p) == pytest.approx(ref, rel=1e-5)


def test_particle_number_positive_and_converged(baseline, baseline_tight):
    N = particle_number(baseline.profile)
    assert N > 0.0
    assert N == pytest.approx(particle_number(baseline_tight.profile), rel=1e-7)


def test_vacuum_observables():
    p = integrate_steady_state(1.0, EW0)
    assert total_mass(p) == 0.0
    assert total_energy(p, 0.0) == 0.0
    assert particle_number(p) == 0.0
    obs = observe(p)
    assert np.all(obs.rho == 0.0)
    assert np.all(tov_residual(p, obs) == 0.0)
    assert np.all(field_residual(p, obs) == 0.0)


def test_empty_law_observables():
    from nvsteady.solver import SolverNumerics

    p = integrate_steady_state(0.0, EW0.replace(amplitude=0.0), SolverNumerics(max_radius=20.0))
    assert total_mass(p) == 0.0
    assert particle_number(p) == 0.0
    assert total_energy(p, 0.0) == 0.0


# -- residuals ---------------------------------------------------------------------

def test_trace_tov_residual_small(baseline):
    res = tov_residual(baseline.profile, baseline.obs, form="trace")
    assert np.max(np.abs(res)) <= 1e-6 * tov_scale(baseline.profile, baseline.obs)


def test_printed_tov_form_differs(baseline):
    """The pressure-gradient form with e^(2 phi) phi' rho is not the balance law."""
    res = tov_residual(baseline.profile, baseline.obs, form="printed")
    assert np.max(np.abs(res)) > 1e-2 * tov_scale(baseline.profile, baseline.obs)


def test_field_residual_nodewise(baseline):
    rho_max = np.max(baseline.obs.rho)
    assert np.max(np.abs(field_residual(baseline.profile, baseline.obs))) <= 1e-8 * rho_max


def test_flux_residual_shrinks(baseline, baseline_tight):
    a = np.max(np.abs(flux_residual(baseline.profile, baseline.obs)))
    b = np.max(np.abs(flux_residual(baseline_tight.profile, baseline_tight.obs)))
    assert a <= 1e-6 * np.max(baseline.profile.v)
    assert b <= a / 10.0


def test_residual_zero_beyond_support(baseline):
    """A constant field with no matter satisfies every balance law."""
    p = integrate_steady_state(1.0, EW0)
    assert np.all(flux_residual(p) == 0.0)


def test_summary_fields(baseline):
    s = summarize(baseline.profile)
    assert s.finite_radius_detected and s.window_ok
    assert s.M <= s.mass_bound
    s4 = summarize(baseline.profile, mass_includes_4pi=True)
    assert s4.M == pytest.approx(4 * math.pi * s.M, rel=1e-15)
    assert s4.R == s.R
