"""Independent reference computations used by the tests.

None of these call the package kernels: energy integrals go through mpmath
at high precision, momentum integrals through scipy's nested quadrature in
Cartesian coordinates.
"""

from __future__ import annotations

import math

import mpmath as mp
import numpy as np
from scipy import integrate

mp.mp.dps = 30


def psi_energy_weighted(E, mu, E0, amp=1.0):
    if E >= E0:
        return mp.mpf(0)
    return amp * E * (E0 * E0 - E * E) ** mu


def psi_plain(E, mu, E0, amp=1.0):
    if E >= E0:
        return mp.mpf(0)
    return amp * (E0 - E) ** mu


def moment(m, p, u, psi, E0):
    """int_u^E0 psi(E) E^p (E^2 - u^2)^m dE by tanh-sinh quadrature."""
    u, E0 = mp.mpf(u), mp.mpf(E0)
    if u >= E0:
        return 0.0
    f = lambda E: psi(E) * E ** p * (E * E - u * u) ** m
    return float(mp.quad(f, [u, (u + E0) / 2, E0]))


def h_ew(m, u, mu, E0, amp=1.0):
    return moment(m, 0, u, lambda E: psi_energy_weighted(E, mu, mp.mpf(E0), amp), E0)


def g_ew(m, u, mu, E0, amp=1.0):
    return moment(m, 2, u, lambda E: psi_energy_weighted(E, mu, mp.mpf(E0), amp), E0)


def h_plain(m, u, mu, E0, amp=1.0):
    return moment(m, 0, u, lambda E: psi_plain(E, mu, mp.mpf(E0), amp), E0)


def beta_mp(a, b):
    return float(mp.beta(a + 1, b + 1))


def half_ball_density(r, phi, k, mu, E0, weight_power=0):
    """(1/2) e^(3 phi) int d^3p E^weight_power Psi(E) F^k at x = (r, 0, 0).

    Psi is the energy-weighted law. Integrated in Cartesian momenta over
    the ball where E < E0 (E = e^phi sqrt(1 + |p|^2), F = e^(2phi) r^2
    (p_y^2 + p_z^2)). ``weight_power = 0`` gives the particle density,
    ``1`` the mass-energy density and ``-1`` (times e^(2 phi)) the source.
    """
    u = math.exp(phi)
    pmax = math.sqrt(E0 * E0 / (u * u) - 1.0)

    def f(pz, py, px):
        p2 = px * px + py * py + pz * pz
        E = u * math.sqrt(1.0 + p2)
        if E >= E0:
            return 0.0
        F = u * u * r * r * (py * py + pz * pz)
        val = E * (E0 * E0 - E * E) ** mu * (F ** k if k else 1.0)
        return val * E ** weight_power

    def ylim(px):
        return math.sqrt(max(pmax * pmax - px * px, 0.0))

    def zlim(px, py):
        return math.sqrt(max(pmax * pmax - px * px - py * py, 0.0))

    # octant symmetry of the integrand
    val, _ = integrate.tplquad(f, 0.0, pmax, 0.0, ylim, 0.0, zlim,
                               epsabs=0.0, epsrel=1e-10)
    return 0.5 * 8.0 * val * u ** 3


def frozen_source_series(r, phi0, A0):
    """phi0 + A0 r^2 / 6: the field of a constant source A0 (k = 0)."""
    return phi0 + A0 * np.asarray(r) ** 2 / 6.0


def pchip_reference(E_tab, psi_tab):
    """Scalar evaluator of the monotone cubic through a table (zero outside)."""
    from scipy.interpolate import PchipInterpolator

    spline = PchipInterpolator(np.asarray(E_tab, float), np.asarray(psi_tab, float))
    lo, hi = float(E_tab[0]), float(E_tab[-1])

    def psi(E):
        e = float(E)
        if e < lo or e >= hi:
            return mp.mpf(0)
        return mp.mpf(float(spline(e)))
    return psi


def h_tabulated(m, u, E_tab, psi_tab):
    psi = pchip_reference(E_tab, psi_tab)
    knots = [mp.mpf(x) for x in E_tab if x > u]
    pts = [mp.mpf(u)] + knots
    u = mp.mpf(u)
    f = lambda E: psi(E) * ((E - u) * (E + u)) ** m if E > u else mp.mpf(0)
    return float(mp.quad(f, pts))
