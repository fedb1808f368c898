"""Compact-support diagnostics: the (x, y) system and its coefficient limits.

With eta = log E0 - phi, q = rho - (2k+3) P and m(r) = int_0^r s^2 q ds,

    x = m / (r eta),    y = r^2 q^2 / P

satisfy r x' = -x + x^2 + alpha y and r y' = (2+2k) y - beta x y. The
limits of alpha and beta at the boundary decide whether the support is
finite.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .observables import ObservableProfile, kernel_table, observe
from .solver import RadialProfile
from .special_functions import PolytropicAnsatz, Variant, beta_coeff

log = logging.getLogger(__name__)

#: below this value of eps = E0^2 - e^(2 phi) (relative to E0^2) the
#: kernel ratios switch to their leading-order boundary asymptotics
ASYMPTOTIC_SWITCH = 1e-10


class WindowCheck(NamedTuple):
    ok: bool
    lower: float
    upper: float
    margin_lower: float
    margin_upper: float


def check_window(mu: float, k: float, E0: float) -> WindowCheck:
    """Strict test of (2mu+1)/(mu+k+5/2) < E0^2 < (2mu+2k+3)/(mu+k+5/2)."""
    s = mu + k + 2.5
    lower = (2 * mu + 1) / s
    upper = (2 * mu + 2 * k + 3) / s
    E2 = E0 * E0
    ok = mu > -1.0 and k > -0.5 and lower < E2 < upper
    return WindowCheck(ok, lower, upper, E2 - lower, upper - E2)


def alpha_limit(mu: float, k: float) -> float:
    """Boundary limit of alpha: 1 / (mu + k + 5/2)."""
    return 1.0 / (mu + k + 2.5)


def beta_limit(mu: float, k: float, E0: float) -> float:
    """Boundary limit of beta: -E0^2 (mu + k + 5/2) + 2 mu + 2k + 3."""
    return -E0 * E0 * (mu + k + 2.5) + 2 * mu + 2 * k + 3


def beta_closure_limit(mu: float, k: float) -> float:
    """Boundary limit of the coefficient that actually closes the y-equation."""
    return mu + k + 0.5


@dataclass(frozen=True, eq=False)
class FiniteRadiusDiagnostics:
    """Nodewise (eta, q, m, x, y, alpha, beta) on the interior nodes.

    ``index`` maps each entry back to the profile grid. ``beta`` is the
    three-term coefficient with g-kernel ratios; ``beta_closure`` is the
    coefficient for which r y' = (2+2k) y - beta x y holds identically,
    and ``beta_middle`` the second term of ``beta``.
    """

    index: np.ndarray
    r: np.ndarray
    eta: np.ndarray
    q: np.ndarray
    m: np.ndarray
    x: np.ndarray
    y: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    beta_closure: np.ndarray
    beta_middle: np.ndarray
    alpha0_theory: float
    beta0_theory: float

    @property
    def alpha0_measured(self) -> float:
        return float(self.alpha[-1]) if self.alpha.size else math.nan

    @property
    def beta0_measured(self) -> float:
        return float(self.beta[-1]) if self.beta.size else math.nan


def _boundary_ratios(eps, mu, k):
    """Leading-order h_{k+3/2}/h_{k+1/2}, h_{k-1/2}/h_{k+1/2} as eps -> 0."""
    return (beta_coeff(mu, k + 1.5) / beta_coeff(mu, k + 0.5) * eps,
            beta_coeff(mu, k - 0.5) / beta_coeff(mu, k + 0.5) / eps)


def build_diagnostics(profile: RadialProfile, obs: Optional[ObservableProfile] = None,
                      ansatz: Optional[PolytropicAnsatz] = None) -> FiniteRadiusDiagnostics:
    """Evaluate the (x, y) system on nodes strictly inside (0, R).

    alpha and beta are formed from kernel ratios, never from ratios of
    rho and P, since both vanish at the boundary.
    """
    a = ansatz or profile.ansatz
    k, mu, E0 = a.k, a.mu, a.E0
    obs = obs or observe(profile)
    kt = kernel_table(profile)
    r = profile.grid
    eta_all = math.log(E0) - profile.phi
    keep = (r > 0.0) & (eta_all > 0.0) & (kt.h_mid > 0.0) & (kt.h_hi > 0.0)
    dropped = int(np.count_nonzero((r > 0.0) & (eta_all <= 0.0)))
    if dropped:
        log.debug("excluded %d boundary node(s) with eta <= 0", dropped)
    idx = np.nonzero(keep)[0]
    rr = r[idx]
    eta = eta_all[idx]
    u2 = kt.u[idx] ** 2
    h_hi, h_mid, h_lo = kt.h_hi[idx], kt.h_mid[idx], kt.h_lo[idx]
    g_mid, g_lo = kt.g_mid[idx], kt.g_lo[idx]
    q = obs.source[idx]
    P = obs.pressure[idx]
    m = obs.mass_cumulative[idx]

    ratio_hi = h_hi / h_mid  # h_{k+3/2} / h_{k+1/2}
    ratio_lo = h_lo / h_mid  # h_{k-1/2} / h_{k+1/2}
    g_ratio_hi = g_mid / h_hi  # g_{k+1/2} / h_{k+3/2}
    g_ratio_mid = g_mid / h_mid  # g_{k+1/2} / h_{k+1/2}
    g_ratio_lo = g_lo / h_mid  # g_{k-1/2} / h_{k+1/2}
    eps = E0 * E0 - u2
    if a.variant is Variant.ENERGY_WEIGHTED:
        near = eps < ASYMPTOTIC_SWITCH * E0 * E0
        if np.any(near):
            e = eps[near]
            rh, rl = _boundary_ratios(e, mu, k)
            ratio_hi[near], ratio_lo[near] = rh, rl
            # g_m = h_{m+1} + u^2 h_m
            g_ratio_hi[near] = 1.0 + u2[near] / rh
            g_ratio_mid[near] = rh + u2[near]
            g_ratio_lo[near] = 1.0 + u2[near] * rl
            eta[near] = -0.5 * np.log1p(-e / (E0 * E0))

    alpha = ratio_hi / ((2 * k + 3) * eta * u2)
    beta_first = -(2 * k + 3) * eta * u2 * g_ratio_hi
    beta_middle = -2.0 * (2 * k + 3) * eta * g_ratio_mid
    beta_last = 2.0 * (2 * k + 1) * eta * g_ratio_lo
    beta = beta_first + beta_middle + beta_last
    beta_closure = -eta * (4.0 - 2.0 * (2 * k + 1) * u2 * ratio_lo
                           + (2 * k + 3) * u2 / ratio_hi)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = m / (rr * eta)
        y = np.where(P > 0.0, rr * rr * q * q / P, 0.0)
    return FiniteRadiusDiagnostics(
        index=idx, r=rr, eta=eta, q=q, m=m, x=x, y=y, alpha=alpha, beta=beta,
        beta_closure=beta_closure, beta_middle=beta_middle,
        alpha0_theory=alpha_limit(mu, k), beta0_theory=beta_limit(mu, k, E0))


class XYResiduals(NamedTuple):
    r: np.ndarray
    res_x: np.ndarray
    res_y: np.ndarray
    res_eta: np.ndarray
    scale_x: np.ndarray
    scale_y: np.ndarray
    scale_eta: np.ndarray

    def relative(self):
        """Largest residual-to-local-scale ratio of each equation."""
        def worst(res, sc):
            if res.size == 0:
                return 0.0
            return float(np.max(np.abs(res) / np.where(sc > 0.0, sc, 1.0)))
        return worst(self.res_x, self.scale_x), worst(self.res_y, self.scale_y), \
            worst(self.res_eta, self.scale_eta)


def _centered_derivative(x, f):
    """Second-order derivative at interior points of a nonuniform grid."""
    h0 = x[1:-1] - x[:-2]
    h1 = x[2:] - x[1:-1]
    return (-h1 / (h0 * (h0 + h1)) * f[:-2] + (h1 - h0) / (h0 * h1) * f[1:-1]
            + h0 / (h1 * (h0 + h1)) * f[2:])


def xy_residuals(diag: FiniteRadiusDiagnostics, profile: RadialProfile,
                 beta: str = "printed", window: tuple = (0.02, 0.85)) -> XYResiduals:
    """Residuals of the x, y and eta equations on a fixed interior window.

    x' and y' use three-point differences on the profile grid, so only
    nodes with r / R inside ``window`` are reported: x grows like 1/eta at
    the boundary and the difference quotient needs spacing well below
    R - r there. Keeping the window fixed makes the maxima comparable
    between grids. eta' = -phi' is exact.
    """
    k = profile.ansatz.k
    coeff = diag.beta if beta == "printed" else diag.beta_closure
    n = diag.r.size
    empty = np.zeros(0)
    if n < 3:
        return XYResiduals(empty, empty, empty, empty, empty, empty, empty)
    contiguous = np.diff(diag.index) == 1
    ok = np.zeros(n, dtype=bool)
    ok[1:-1] = contiguous[:-1] & contiguous[1:]
    r = diag.r
    R = profile.radius if profile.radius is not None else profile.grid[-1]
    ok &= (r >= window[0] * R) & (r <= window[1] * R)
    dx = np.zeros(n)
    dy = np.zeros(n)
    dx[1:-1] = _centered_derivative(r, diag.x)
    dy[1:-1] = _centered_derivative(r, diag.y)
    x, y = diag.x, diag.y
    res_x = r * dx - (-x + x * x + diag.alpha * y)
    res_y = r * dy - ((2 + 2 * k) * y - coeff * x * y)
    dphi = profile.dphi[diag.index]
    res_eta = -r * dphi + diag.eta * x
    scale_x = np.abs(x) + x * x + np.abs(diag.alpha * y)
    scale_y = (2 + 2 * k) * np.abs(y) + np.abs(coeff * x * y)
    scale_eta = np.abs(r * dphi) + np.abs(diag.eta * x)
    return XYResiduals(r[ok], res_x[ok], res_y[ok], res_eta[ok], scale_x[ok], scale_y[ok],
                       scale_eta[ok])
