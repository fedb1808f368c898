import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import Run
from nvsteady.finite_radius import (alpha_limit, beta_closure_limit, beta_limit,
                                    build_diagnostics, check_window, xy_residuals)
from nvsteady.special_functions import PolytropicAnsatz, beta_coeff, closed_form_h


# -- window and closed-form limits ----------------------------------------------

def test_window_examples():
    w = check_window(0.0, 0.0, 1.0)
    assert w.ok
    assert (w.lower, w.upper) == pytest.approx((0.4, 1.2), rel=1e-15)
    assert not check_window(0.0, 0.0, 2.0).ok
    w = check_window(-0.5, 0.0, math.sqrt(0.5))
    assert w.ok
    assert (w.lower, w.upper) == pytest.approx((0.0, 1.0), abs=1e-15)


def test_alpha_limit_examples():
    assert alpha_limit(0.0, 0.0) == pytest.approx(0.4, rel=1e-15)
    assert alpha_limit(0.5, 0.5) == pytest.approx(1 / 3.5, rel=1e-15)


@given(st.floats(-0.9, 4.0), st.floats(-0.45, 4.0))
def test_alpha_limit_beta_coefficient_ratio(mu, k):
    # c_{mu,k+3/2} / c_{mu,k+1/2} = (k+3/2) / (mu+k+5/2), hence the factor 2
    ratio = beta_coeff(mu, k + 1.5) / beta_coeff(mu, k + 0.5)
    assert 2.0 * ratio / (2 * k + 3) == pytest.approx(alpha_limit(mu, k), rel=1e-12)


def test_beta_limit_examples():
    assert beta_limit(0.0, 0.0, 1.0) == pytest.approx(0.5, rel=1e-15)


# the lower endpoint is positive only for mu > -1/2
@given(st.floats(-0.45, 4.0), st.floats(-0.45, 4.0))
def test_beta_limit_at_window_endpoints(mu, k):
    w = check_window(mu, k, 1.0)
    assert beta_limit(mu, k, math.sqrt(w.upper)) == pytest.approx(0.0, abs=1e-12)
    assert beta_limit(mu, k, math.sqrt(w.lower)) == pytest.approx(2 * k + 2, rel=1e-12)


@given(st.floats(-0.45, 4.0), st.floats(-0.45, 4.0), st.floats(0.01, 0.99))
def test_beta_inside_range_strictly_inside_window(mu, k, f):
    w = check_window(mu, k, 1.0)
    E0sq = w.lower + f * (w.upper - w.lower)
    assert check_window(mu, k, math.sqrt(E0sq)).ok
    assert 0.0 < beta_limit(mu, k, math.sqrt(E0sq)) < 2 * k + 2


def test_boundary_asymptotics_of_kernels():
    """h_m(e^phi) -> (1/2) c_{mu,m} eps^(mu+m+1) as eps = E0^2 - e^(2phi) -> 0."""
    mu, E0 = 0.5, 1.0
    for eps in (1e-3, 1e-6):
        u = math.sqrt(E0 * E0 - eps)
        lead = 0.5 * beta_coeff(mu, 1.5) * eps ** 3
        assert closed_form_h(1.5, u, mu, E0) == pytest.approx(lead, rel=1e-14)
        # eta = -log(u/E0) = eps / (2 E0^2) + O(eps^2)
        assert -math.log(u / E0) == pytest.approx(eps / 2, rel=2 * eps)


# -- diagnostics on solved profiles --------------------------------------------------

def test_baseline_limits(baseline):
    d = baseline.diag
    a = baseline.ansatz
    assert d.alpha0_measured == pytest.approx(alpha_limit(a.mu, a.k), rel=1e-3)
    assert d.beta0_measured == pytest.approx(beta_limit(a.mu, a.k, a.E0), rel=1e-3)
    assert d.beta_closure[-1] == pytest.approx(beta_closure_limit(a.mu, a.k), rel=1e-3)


def test_limits_over_last_decade_of_eta(baseline):
    d = baseline.diag
    a = baseline.ansatz
    last = d.eta <= 10 * d.eta.min()
    assert np.count_nonzero(last) >= 3
    assert np.all(np.abs(d.alpha[last] / alpha_limit(a.mu, a.k) - 1) < 1e-3)
    assert np.all(np.abs(d.beta[last] / beta_limit(a.mu, a.k, a.E0) - 1) < 1e-3)


def test_x_vanishes_at_center(baseline):
    d = baseline.diag
    assert d.x[0] < 1e-5
    assert np.all(d.x > 0.0)
    assert np.all(np.diff(d.eta) <= 0.0)


def test_eta_relation_nodewise(baseline):
    res = xy_residuals(baseline.diag, baseline.profile)
    _, _, rel_eta = res.relative()
    assert rel_eta < 1e-4


def test_x_and_closed_y_equations(baseline):
    res = xy_residuals(baseline.diag, baseline.profile, beta="closure")
    rx, ry, _ = res.relative()
    assert rx < 1e-4 and ry < 1e-4


def test_printed_beta_does_not_close_y_equation(baseline):
    """The three-term coefficient has the right limit but leaves an O(1) defect."""
    _, ry, _ = xy_residuals(baseline.diag, baseline.profile, beta="printed").relative()
    assert ry > 1e-2


def test_vacuum_has_no_diagnostics():
    a = PolytropicAnsatz(k=0.0, mu=0.0, E0=1.0)
    run = Run(a, 0.1)
    assert run.profile.radius == 0.0 and run.diag is None


@pytest.mark.parametrize("mu,k", [(0.0, 0.0), (1.0, 0.5)])
def test_inside_window_runs_close(mu, k):
    w = check_window(mu, k, 1.0)
    E0 = math.sqrt(0.5 * (w.lower + w.upper))
    a = PolytropicAnsatz(k=k, mu=mu, E0=E0)
    run = Run(a, math.log(0.5 * E0))
    assert run.profile.radius is not None and run.profile.radius > 0
    d = build_diagnostics(run.profile, run.obs)
    assert d.alpha0_measured == pytest.approx(alpha_limit(mu, k), rel=1e-3)
    assert d.beta0_measured == pytest.approx(beta_limit(mu, k, E0), rel=1e-3)
