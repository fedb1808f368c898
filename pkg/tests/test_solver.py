import math

import numpy as np
import pytest

import oracles as O
from conftest import BASE_PHI0, Run
from nvsteady.errors import DomainError
from nvsteady.observables import field_residual, observe
from nvsteady.solver import (SolverNumerics, apriori_bound, asymptotic_flatten, detect_radius,
                             extend_vacuum, field_rhs, integrate_steady_state, picard_seed)
from nvsteady.special_functions import PolytropicAnsatz, closed_form_h

EW0 = PolytropicAnsatz(k=0.0, mu=0.0, E0=2.0)


# -- field right-hand side ----------------------------------------------------

def test_field_rhs_closed_form_example():
    h = closed_form_h(0.5, 1.0, 0.0, 2.0)
    assert h == pytest.approx(math.sqrt(3.0), rel=1e-14)
    assert field_rhs(1.0, 0.0, EW0) == pytest.approx(2.0 * math.pi * math.sqrt(3.0), rel=1e-9)
    assert field_rhs(1.0, 0.0, EW0) == pytest.approx(10.8828, rel=1e-5)


def test_field_rhs_vanishes_outside_support():
    assert field_rhs(1.0, math.log(2.0), EW0) == 0.0
    assert field_rhs(3.0, 1.0, EW0) == 0.0
    assert field_rhs(1.0, 0.0, EW0.replace(amplitude=0.0)) == 0.0


def test_field_rhs_scales_with_radius():
    a = PolytropicAnsatz(k=0.5, mu=0.5, E0=1.0)
    assert field_rhs(2.0, -0.5, a) == pytest.approx(2.0 ** 3 * field_rhs(1.0, -0.5, a),
                                                    rel=1e-13)


def test_field_rhs_requires_positive_radius():
    with pytest.raises(DomainError):
        field_rhs(0.0, 0.0, EW0)


# -- Picard seed ----------------------------------------------------------------

def test_seed_trivial_above_cutoff():
    seed = picard_seed(math.log(2.0), EW0)
    assert np.all(seed.phi == math.log(2.0))
    assert np.all(seed.dphi == 0.0)


def test_seed_empty_law_is_constant():
    seed = picard_seed(0.0, EW0.replace(amplitude=0.0))
    assert np.all(seed.phi == 0.0)


def test_seed_matches_frozen_source_series():
    seed = picard_seed(0.0, EW0)
    A0 = field_rhs(1.0, 0.0, EW0)
    series = O.frozen_source_series(seed.grid, 0.0, A0)
    # the difference is O(r^4); check the scaled remainder stays bounded
    r = seed.grid[1:]
    gap = np.abs(seed.phi[1:] - series[1:])
    assert np.all(gap <= 5.0 * r ** 4 + 1e-15)
    assert abs(seed.phi[-1] - series[-1]) < 1e-10
    # phi' = A0 r / 3 to leading order
    assert seed.dphi[-1] == pytest.approx(A0 * seed.grid[-1] / 3.0, rel=1e-3)


def test_seed_interval_default():
    assert SolverNumerics().delta_for(EW0) == pytest.approx(5e-4)
    assert SolverNumerics().delta_for(EW0.replace(E0=0.5)) == pytest.approx(1e-3)


# -- global solution --------------------------------------------------------------

def test_vacuum_profile():
    p = integrate_steady_state(math.log(2.0) + 0.1, EW0)
    assert p.status == "vacuum"
    assert p.radius == 0.0
    assert np.all(p.phi == p.phi0)
    assert detect_radius(p) == 0.0


def test_empty_law_has_no_radius():
    a = EW0.replace(amplitude=0.0)
    p = integrate_steady_state(0.0, a, SolverNumerics(max_radius=50.0))
    assert p.radius is None
    assert np.all(p.phi == 0.0)
    assert detect_radius(p) is None


def test_baseline_monotone_and_bounded(baseline):
    p = baseline.profile
    assert p.status == "closed"
    assert np.all(np.diff(p.phi) >= 0.0)
    assert np.all(np.diff(p.v) >= -1e-14)
    assert np.all(p.dphi >= 0.0)
    assert p.phi[-1] == pytest.approx(math.log(p.ansatz.E0), abs=2e-8)


def test_baseline_apriori_bound(baseline):
    p = baseline.profile
    assert np.all(p.phi <= apriori_bound(p.grid, p.phi0, p.ansatz) + 1e-12)


def test_baseline_refinement_oracle(baseline, baseline_tight):
    p, q = baseline.profile, baseline_tight.profile
    phi_q, _ = q.evaluate(p.grid[p.grid <= q.grid[-1]])
    assert np.max(np.abs(p.phi[: phi_q.size] - phi_q)) < 1e-6
    assert abs(p.radius - q.radius) < 1e-6 * q.radius


def test_baseline_regression_values(baseline):
    assert baseline.profile.radius == pytest.approx(6.0627836, rel=1e-6)


def test_dense_output_reproduces_nodes(baseline):
    p = baseline.profile
    idx = np.arange(p.n_seed, p.grid.size - 1)
    phi, dphi = p.evaluate(p.grid[idx])
    assert np.allclose(phi, p.phi[idx], rtol=0.0, atol=1e-13)
    assert np.allclose(dphi, p.dphi[idx], rtol=1e-11, atol=0.0)


def test_profile_arrays_read_only(baseline):
    with pytest.raises(ValueError):
        baseline.profile.phi[0] = 1.0


def test_open_support_when_radius_cap_too_small(base_ansatz):
    p = integrate_steady_state(BASE_PHI0, base_ansatz, SolverNumerics(max_radius=2.0))
    assert p.radius is None
    assert p.status == "open"
    assert p.grid[-1] == pytest.approx(2.0)


def test_non_zero_k_closes():
    run = Run(PolytropicAnsatz(k=0.5, mu=0.0, E0=1.0), math.log(0.5))
    assert run.profile.radius is not None and run.profile.radius > 0.0
    assert np.all(np.diff(run.profile.phi) >= 0.0)


@pytest.mark.parametrize("mu,k", [(1.0, 0.0), (1.0, 0.5), (0.5, 0.5)])
def test_flux_monotone_up_to_the_edge(mu, k):
    # the source vanishes at R with a fractional power; the refined edge nodes
    # must not pick up interpolation overshoot from a step crossing R
    run = Run(PolytropicAnsatz(k=k, mu=mu, E0=1.0), math.log(0.5))
    v = run.profile.v
    assert np.all(np.diff(v) >= -1e-14 * v[-1])
    assert run.profile.grid[-1] == run.profile.radius


def test_negative_k_runs():
    run = Run(PolytropicAnsatz(k=-0.25, mu=0.5, E0=1.0), math.log(0.5))
    assert run.profile.radius is not None
    assert run.obs.center_regularized


# -- exterior and flattening --------------------------------------------------------

def test_exterior_continuity(baseline):
    p = baseline.profile
    ext = extend_vacuum(p)
    assert float(ext.phi(ext.R)) == pytest.approx(p.phi[-1], abs=1e-14)
    assert float(ext.dphi(ext.R)) == pytest.approx(p.dphi[-1], rel=1e-14)
    r = np.array([ext.R, 10 * ext.R, 1e6])
    assert np.allclose(r ** 2 * ext.dphi(r), ext.C, rtol=1e-14)
    assert math.exp(ext.phi_inf) >= p.ansatz.E0


def test_exterior_of_vacuum():
    p = integrate_steady_state(1.0, EW0)
    ext = extend_vacuum(p)
    assert ext.C == 0.0 and ext.phi_inf == p.phi0


def test_exterior_requires_radius(base_ansatz):
    p = integrate_steady_state(BASE_PHI0, base_ansatz, SolverNumerics(max_radius=2.0))
    with pytest.raises(DomainError):
        extend_vacuum(p)


def test_flatten_identity_shift(baseline):
    p = baseline.profile
    same = asymptotic_flatten(p, 0.0)
    assert np.array_equal(same.profile.phi, p.phi)
    assert same.ansatz == p.ansatz
    assert same.density_factor == 1.0


def test_flatten_shifts_and_keeps_residual(baseline):
    p = baseline.profile
    phi_inf = extend_vacuum(p).phi_inf
    flat = asymptotic_flatten(p, phi_inf)
    assert np.allclose(flat.profile.phi + phi_inf, p.phi, rtol=0.0, atol=1e-14)
    before = np.max(np.abs(field_residual(p, baseline.obs)))
    after = np.max(np.abs(field_residual(flat.profile, observe(flat.profile))))
    assert after <= before + 1e-10
    # the source is unchanged by the gauge shift
    assert np.allclose(observe(flat.profile).source, baseline.obs.source, rtol=1e-12,
                       atol=1e-14)
