"""Matter observables and residual identities of a steady state.

All densities follow the reduced kernel formulas

    rho  = pi r^2k c_{k,-1/2} g_{k+1/2}(e^phi)
    P    = pi r^2k c_{k,1/2}  h_{k+3/2}(e^phi)
    P_T  = pi/2 r^2k c_{k+1,-1/2} h_{k+3/2}(e^phi)
    q    = rho - P - 2 P_T = pi r^2k c_{k,-1/2} e^(2phi) h_{k+1/2}(e^phi)

Masses are radial integrals without the 4 pi solid-angle factor unless
``mass_includes_4pi`` is requested.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.special import roots_jacobi

from .errors import DomainError
from .solver import ExteriorField, RadialProfile, extend_vacuum, field_rhs
from .special_functions import PolytropicAnsatz, beta_coeff, energy_moment, eval_g, eval_h

FOUR_PI = 4.0 * math.pi


def _radial_power(r, k: float):
    """r^(2k); the r = 0 value is the limit of r^2 r^(2k) for k < 0 (i.e. 0)."""
    r = np.asarray(r, dtype=float)
    if k == 0.0:
        return np.ones_like(r)
    with np.errstate(divide="ignore"):
        out = np.where(r > 0.0, np.abs(r) ** (2.0 * k), 0.0)
    return out


def _kernel(m, p, u, ansatz):
    """Energy moment at the admissible entries of ``u`` (u < E0), zero elsewhere."""
    u = np.asarray(u, dtype=float)
    out = np.zeros(u.shape)
    live = u < ansatz.E0
    if ansatz.is_vacuum or not np.any(live):
        return out
    out[live] = energy_moment(m, p, u[live], ansatz)
    return out


def _scalar(x, like):
    return float(x) if np.ndim(like) == 0 else x


def compute_rho(r, phi_val, ansatz: PolytropicAnsatz):
    """Mass-energy density pi r^2k c_{k,-1/2} g_{k+1/2}(e^phi)."""
    k = ansatz.k
    u = np.exp(np.asarray(phi_val, dtype=float))
    val = math.pi * beta_coeff(k, -0.5) * _radial_power(r, k) * _kernel(k + 0.5, 2.0, u, ansatz)
    return _scalar(val, phi_val)


def compute_pressures(r, phi_val, ansatz: PolytropicAnsatz):
    """Radial and tangential pressure (P, P_T)."""
    k = ansatz.k
    u = np.exp(np.asarray(phi_val, dtype=float))
    h = _kernel(k + 1.5, 0.0, u, ansatz) * _radial_power(r, k)
    P = math.pi * beta_coeff(k, 0.5) * h
    PT = 0.5 * math.pi * beta_coeff(k + 1.0, -0.5) * h
    return _scalar(P, phi_val), _scalar(PT, phi_val)


def compute_source(r, phi_val, ansatz: PolytropicAnsatz):
    """Source density e^(4 phi) mu(r) = pi r^2k c_{k,-1/2} e^(2phi) h_{k+1/2}(e^phi)."""
    k = ansatz.k
    u = np.exp(np.asarray(phi_val, dtype=float))
    val = (math.pi * beta_coeff(k, -0.5) * _radial_power(r, k) * u * u
           * _kernel(k + 0.5, 0.0, u, ansatz))
    return _scalar(val, phi_val)


def momentum_density(r, phi_val, ansatz: PolytropicAnsatz, n_angle: int = 24):
    """Particle density e^(3phi) int dp Phi(E, F) at one point.

    The momentum integral is done in (|p|, cos theta) with theta measured
    from the radial direction: the angular factor by Gauss-Jacobi
    quadrature in cos theta and the |p| integral through the energy
    substitution E = e^phi sqrt(1 + |p|^2). Carries the same half-measure
    normalization as the reduced density formulas.
    """
    k = ansatz.k
    u = math.exp(phi_val)
    if u >= ansatz.E0 or ansatz.is_vacuum or r < 0.0:
        return 0.0
    if r == 0.0 and k != 0.0:
        return 0.0
    # sin(theta)^(2k) weight on cos(theta) in [-1, 1]
    c, w = roots_jacobi(n_angle, k, k)
    angular = float(np.sum(w * np.ones_like(c)))
    radial = energy_moment(k + 0.5, 1.0, u, ansatz)
    # p^(2k+2) dp = (E^2 - u^2)^(k+1/2) E dE / u^(2k+3); E^0 e^(3phi) F^k -> u^(2k) r^(2k)
    return float(math.pi * (r ** (2.0 * k) if k else 1.0) * angular * radial)


def hermite_cumulative(x: np.ndarray, f: np.ndarray, df: np.ndarray) -> np.ndarray:
    """Cumulative integral with the endpoint-corrected trapezoid rule.

    Each panel contributes h (f_i + f_{i+1}) / 2 + h^2 (f'_i - f'_{i+1}) / 12,
    which is exact for cubics.
    """
    h = np.diff(x)
    panels = 0.5 * h * (f[:-1] + f[1:]) + h * h * (df[:-1] - df[1:]) / 12.0
    return np.concatenate([[0.0], np.cumsum(panels)])


def _richardson(x, f, df):
    """Fine Hermite value and its error estimate from the pairwise-coarsened grid."""
    fine = hermite_cumulative(x, f, df)[-1]
    idx = np.arange(0, x.size, 2)
    if idx[-1] != x.size - 1:
        idx = np.append(idx, x.size - 1)
    coarse = hermite_cumulative(x[idx], f[idx], df[idx])[-1]
    return fine, abs(fine - coarse) / 15.0


@dataclass(frozen=True)
class KernelTable:
    """Kernel values at the nodes of a profile (zero outside the support)."""

    u: np.ndarray
    h_hi: np.ndarray  # h_{k+3/2}
    h_mid: np.ndarray  # h_{k+1/2}
    h_lo: np.ndarray  # h_{k-1/2}
    g_mid: np.ndarray  # g_{k+1/2}
    g_lo: np.ndarray  # g_{k-1/2}


_KERNEL_CACHE: "weakref.WeakKeyDictionary[RadialProfile, KernelTable]" = weakref.WeakKeyDictionary()


def kernel_table(profile: RadialProfile) -> KernelTable:
    try:
        return _KERNEL_CACHE[profile]
    except KeyError:
        pass
    a = profile.ansatz
    k = a.k
    u = profile.u
    table = KernelTable(
        u=u,
        h_hi=_kernel(k + 1.5, 0.0, u, a),
        h_mid=_kernel(k + 0.5, 0.0, u, a),
        h_lo=_kernel(k - 0.5, 0.0, u, a),
        g_mid=_kernel(k + 0.5, 2.0, u, a),
        g_lo=_kernel(k - 0.5, 2.0, u, a),
    )
    _KERNEL_CACHE[profile] = table
    return table


@dataclass(frozen=True, eq=False)
class ObservableProfile:
    """Nodewise observables on the grid of a profile."""

    grid: np.ndarray
    rho: np.ndarray
    pressure: np.ndarray
    pressure_t: np.ndarray
    source: np.ndarray
    mass_cumulative: np.ndarray
    center_regularized: bool = False


def _mass_integrand(profile: RadialProfile, kt: KernelTable):
    """r^2 rho and its exact r-derivative."""
    a = profile.ansatz
    k = a.k
    r = profile.grid
    A = math.pi * beta_coeff(k, -0.5)
    r2k2 = r ** (2 * k + 2)
    f = A * r2k2 * kt.g_mid
    df = A * ((2 * k + 2) * _safe_pow(r, 2 * k + 1) * kt.g_mid
              - (2 * k + 1) * r2k2 * kt.u ** 2 * kt.g_lo * profile.dphi)
    return f, df


def _source_integrand(profile: RadialProfile, kt: KernelTable):
    """r^2 q and its exact r-derivative."""
    k = profile.ansatz.k
    r = profile.grid
    A = math.pi * beta_coeff(k, -0.5)
    u2 = kt.u ** 2
    f = A * r ** (2 * k + 2) * u2 * kt.h_mid
    df = A * ((2 * k + 2) * _safe_pow(r, 2 * k + 1) * u2 * kt.h_mid
              + r ** (2 * k + 2) * u2 * profile.dphi
              * (2.0 * kt.h_mid - (2 * k + 1) * u2 * kt.h_lo))
    return f, df


def _safe_pow(r, e):
    with np.errstate(divide="ignore"):
        return np.where(r > 0.0, np.abs(r) ** e, 0.0 if e > 0 else np.inf)


def observe(profile: RadialProfile) -> ObservableProfile:
    """Evaluate rho, P, P_T, q and m(r) at every node of ``profile``."""
    a = profile.ansatz
    k = a.k
    kt = kernel_table(profile)
    rk = _radial_power(profile.grid, k)
    rho = math.pi * beta_coeff(k, -0.5) * rk * kt.g_mid
    P = math.pi * beta_coeff(k, 0.5) * rk * kt.h_hi
    PT = 0.5 * math.pi * beta_coeff(k + 1.0, -0.5) * rk * kt.h_hi
    source = math.pi * beta_coeff(k, -0.5) * rk * kt.u ** 2 * kt.h_mid
    f, df = _source_integrand(profile, kt)
    mass_cum = hermite_cumulative(profile.grid, f, df)
    return ObservableProfile(grid=profile.grid.copy(), rho=rho, pressure=P, pressure_t=PT,
                             source=source, mass_cumulative=mass_cum,
                             center_regularized=bool(k < 0.0))


def total_mass(profile: RadialProfile, ansatz: Optional[PolytropicAnsatz] = None,
               with_error: bool = False):
    """M = int_0^R r^2 rho dr on the solver grid.

    The Hermite-corrected trapezoid value is returned; ``with_error`` also
    returns the Richardson estimate from the pairwise-coarsened grid.
    """
    if ansatz is not None and ansatz != profile.ansatz:
        raise DomainError("ansatz does not match the profile")
    if profile.ansatz.is_vacuum or profile.status == "vacuum":
        return (0.0, 0.0) if with_error else 0.0
    f, df = _mass_integrand(profile, kernel_table(profile))
    M, err = _richardson(profile.grid, f, df)
    return (float(M), float(err)) if with_error else float(M)


def field_energy_interior(profile: RadialProfile) -> float:
    """int_0^R r^2 (phi')^2 dr from the stored (phi', r^2 phi') pairs."""
    r = profile.grid
    v = profile.v
    f = v * profile.dphi
    kt = kernel_table(profile)
    q_r2, _ = _source_integrand(profile, kt)
    with np.errstate(divide="ignore", invalid="ignore"):
        df = np.where(r > 0.0, 2.0 * profile.dphi * q_r2 - 2.0 * v * profile.dphi / r, 0.0)
    return float(hermite_cumulative(r, f, df)[-1])


def total_energy(profile: RadialProfile, M: float,
                 exterior: Optional[ExteriorField] = None) -> float:
    """M + int_0^inf r^2 (phi')^2 dr; the exterior part is C^2 / R exactly."""
    if not math.isfinite(M):
        raise DomainError("total energy needs a finite mass")
    if profile.status == "vacuum" or profile.ansatz.is_vacuum:
        return float(M)
    interior = field_energy_interior(profile)
    tail = 0.0
    if profile.radius is not None and profile.radius > 0.0:
        ext = exterior or extend_vacuum(profile)
        tail = ext.C ** 2 / ext.R
    return float(M + interior + tail)


def particle_number(profile: RadialProfile, ansatz: Optional[PolytropicAnsatz] = None) -> float:
    """N = int r^2 n(r) dr with n from the (|p|, angle) momentum quadrature."""
    a = ansatz or profile.ansatz
    if a.is_vacuum or profile.status == "vacuum":
        return 0.0
    k = a.k
    r = profile.grid
    u = profile.u
    f = np.array([ri * ri * momentum_density(ri, ph, a) for ri, ph in zip(r, profile.phi)])
    # exact derivative of pi c r^(2k+2) J_{k+1/2}(u), J_m(u) = int Psi E (E^2-u^2)^m dE
    c = math.pi * beta_coeff(k, -0.5)
    J_mid = _kernel(k + 0.5, 1.0, u, a)
    J_lo = _kernel(k - 0.5, 1.0, u, a)
    df = c * ((2 * k + 2) * _safe_pow(r, 2 * k + 1) * J_mid
              - (2 * k + 1) * r ** (2 * k + 2) * u * u * J_lo * profile.dphi)
    return float(hermite_cumulative(r, f, df)[-1])


def mass_upper_bound(profile: RadialProfile, R: Optional[float] = None) -> float:
    """pi c_{k,-1/2} g_{k+1/2}(e^phi0) R^(2k+3) / (2k+3)."""
    a = profile.ansatz
    R = profile.radius if R is None else R
    if R is None:
        return math.inf
    u0 = math.exp(profile.phi0)
    g0 = eval_g(a.k + 0.5, u0, a) if (u0 < a.E0 and not a.is_vacuum) else 0.0
    return math.pi * beta_coeff(a.k, -0.5) * g0 * R ** (2 * a.k + 3) / (2 * a.k + 3)


def pressure_derivative(profile: RadialProfile, kt: Optional[KernelTable] = None) -> np.ndarray:
    """dP/dr from dh_m/du = -2 m u h_{m-1} and the chain rule."""
    a = profile.ansatz
    k = a.k
    kt = kt or kernel_table(profile)
    r = profile.grid
    c = math.pi * beta_coeff(k, 0.5)
    rk = _radial_power(r, k)
    with np.errstate(divide="ignore", invalid="ignore"):
        radial = np.where(r > 0.0, 2.0 * k / r, 0.0) * c * rk * kt.h_hi
    return radial - c * rk * (2 * k + 3) * kt.u ** 2 * kt.h_mid * profile.dphi


def tov_residual(profile: RadialProfile, obs: Optional[ObservableProfile] = None,
                 form: str = "printed") -> np.ndarray:
    """Residual of the radial momentum balance at every node.

    ``form="printed"``:  P' + e^(2phi) phi' rho - (2k/r) P
    ``form="trace"``:    P' + phi' (rho - P - 2 P_T) + (2/r)(P - P_T)

    P' is analytic. Nodes at r = 0 and outside the support get 0.
    """
    obs = obs or observe(profile)
    k = profile.ansatz.k
    r = profile.grid
    dP = pressure_derivative(profile)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_r = np.where(r > 0.0, 1.0 / r, 0.0)
    if form == "printed":
        res = dP + profile.u ** 2 * profile.dphi * obs.rho - 2.0 * k * inv_r * obs.pressure
    elif form == "trace":
        res = (dP + profile.dphi * (obs.rho - obs.pressure - 2.0 * obs.pressure_t)
               + 2.0 * inv_r * (obs.pressure - obs.pressure_t))
    else:
        raise ValueError(f"unknown TOV form {form!r}")
    res[(r == 0.0) | (profile.u >= profile.ansatz.E0)] = 0.0
    return res


def tov_scale(profile: RadialProfile, obs: Optional[ObservableProfile] = None) -> float:
    obs = obs or observe(profile)
    s = float(np.max(obs.rho * profile.u ** 2 * np.abs(profile.dphi), initial=0.0))
    return s


def field_residual(profile: RadialProfile, obs: Optional[ObservableProfile] = None) -> np.ndarray:
    """(1/r^2) dv/dr - (rho - (2k+3) P) with dv/dr from the field right-hand side.

    Uses the stored phi (for dv/dr) against the stored rho and P, so an
    inconsistent node (e.g. a corrupted phi value in a file) shows up.
    """
    obs = obs or observe(profile)
    a = profile.ansatz
    k = a.k
    r = profile.grid
    res = np.zeros_like(r)
    for i in np.nonzero(r > 0.0)[0]:
        res[i] = field_rhs(r[i], profile.phi[i], a) / r[i] ** 2 - (
            obs.rho[i] - (2 * k + 3) * obs.pressure[i])
    return res


def flux_residual(profile: RadialProfile, obs: Optional[ObservableProfile] = None) -> np.ndarray:
    """r^2 phi' - int_0^r s^2 q ds: the integrated field equation at each node."""
    obs = obs or observe(profile)
    return profile.v - obs.mass_cumulative


@dataclass(frozen=True)
class SteadyStateSummary:
    """Global quantities of a solved steady state."""

    R: Optional[float]
    M: float
    energy_total: float
    particle_number: float
    phi0: float
    phi_inf: Optional[float]
    finite_radius_detected: bool
    window_ok: bool
    alpha0: Optional[float]
    beta0: Optional[float]
    C: Optional[float] = None
    mass_bound: Optional[float] = None
    mass_error: float = 0.0
    mass_includes_4pi: bool = False
    status: str = "closed"

    def to_dict(self) -> dict:
        return asdict(self)


def summarize(profile: RadialProfile, mass_includes_4pi: bool = False,
              alpha0: Optional[float] = None, beta0: Optional[float] = None) -> SteadyStateSummary:
    """Collect R, M, energy, N and phi_inf; alpha0/beta0 are measured values if given."""
    from .finite_radius import check_window

    a = profile.ansatz
    M, err = total_mass(profile, with_error=True)
    R = profile.radius
    phi_inf = None
    C = None
    if profile.status == "vacuum":
        phi_inf, C = profile.phi0, 0.0
    elif R is not None:
        ext = extend_vacuum(profile)
        phi_inf, C = ext.phi_inf, ext.C
    elif a.is_vacuum:
        phi_inf, C = profile.phi0, 0.0
    E = total_energy(profile, M) if (R is not None or a.is_vacuum) else math.nan
    N = particle_number(profile)
    factor = FOUR_PI if mass_includes_4pi else 1.0
    bound = mass_upper_bound(profile) if R is not None else None
    return SteadyStateSummary(
        R=R, M=factor * M, energy_total=factor * E, particle_number=factor * N,
        phi0=profile.phi0, phi_inf=phi_inf, finite_radius_detected=R is not None,
        window_ok=check_window(a.mu, a.k, a.E0).ok, alpha0=alpha0, beta0=beta0,
        C=C, mass_bound=None if bound is None else factor * bound, mass_error=factor * err,
        mass_includes_4pi=mass_includes_4pi, status=profile.status)
