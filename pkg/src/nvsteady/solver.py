"""Radial integration of the reduced field equation.

    (r^2 phi')' = pi c_{k,-1/2} r^(2k+2) e^(2 phi) h_{k+1/2}(e^phi)

The center is seeded by the fixed point of the integral operator for
u = e^phi on [0, delta]; from delta outwards the first-order system in
(phi, v = r^2 phi') is advanced by an adaptive Dormand-Prince 5(4) pair
until e^phi reaches E0 (the support radius) or ``max_radius``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import _kernels as K
from .errors import ContractionError, DomainError, QuadratureError, SolverError
from .special_functions import (
    QUAD_ABS_TOL,
    QUAD_MAX_BISECT,
    QUAD_REL_TOL,
    PolytropicAnsatz,
    Variant,
    beta_coeff,
    eval_h,
    quadrature_rules,
)

log = logging.getLogger(__name__)

MAX_DELTA_HALVINGS = 20


@dataclass(frozen=True)
class SolverNumerics:
    """Step control and termination settings.

    ``seed_interval=None`` selects delta = 1e-3 * min(1, 1/E0).
    """

    seed_interval: Optional[float] = None
    picard_tolerance: float = 1e-13
    ode_abs_tol: float = 1e-10
    ode_rel_tol: float = 1e-8
    max_radius: float = 1e3
    radius_tolerance: float = 1e-8
    n_output: int = 1000
    seed_nodes: int = 128
    boundary_nodes: int = 20
    max_steps: int = 1_000_000

    def __post_init__(self):
        for name in ("picard_tolerance", "ode_abs_tol", "ode_rel_tol", "max_radius",
                     "radius_tolerance"):
            if not getattr(self, name) > 0.0:
                raise DomainError(f"{name} must be strictly positive")
        if self.seed_interval is not None:
            if not self.seed_interval > 0.0:
                raise DomainError("seed_interval must be strictly positive")
            if not self.max_radius > self.seed_interval:
                raise DomainError("max_radius must exceed the seed interval")
        for name in ("n_output", "seed_nodes", "max_steps"):
            if getattr(self, name) < 2:
                raise DomainError(f"{name} must be at least 2")
        if self.boundary_nodes < 0:
            raise DomainError("boundary_nodes must be non-negative")

    def delta_for(self, ansatz: PolytropicAnsatz) -> float:
        if self.seed_interval is not None:
            return self.seed_interval
        return 1e-3 * min(1.0, 1.0 / ansatz.E0)

    def tightened(self, factor: float) -> "SolverNumerics":
        return replace(self, ode_abs_tol=self.ode_abs_tol / factor,
                       ode_rel_tol=self.ode_rel_tol / factor)


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Field values phi(r_i), phi'(r_i) on an increasing grid with r_0 = 0.

    ``radius`` is the support radius (0 for the vacuum, None when the
    integration stopped at ``max_radius`` before closing). ``steps`` keeps
    the continuous extension of the accepted integrator steps, if any.
    """

    grid: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    phi0: float
    ansatz: PolytropicAnsatz
    numerics: SolverNumerics
    delta: float
    radius: Optional[float]
    status: str = "closed"
    n_seed: int = 0
    nfev: int = 0
    steps: Optional[tuple] = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("grid", "phi", "dphi"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def u(self) -> np.ndarray:
        return np.exp(self.phi)

    @property
    def v(self) -> np.ndarray:
        """r^2 phi'."""
        return self.grid**2 * self.dphi

    @property
    def closed(self) -> bool:
        return self.radius is not None

    def interior_mask(self) -> np.ndarray:
        """Nodes strictly inside the support with r > 0."""
        return (self.grid > 0.0) & (self.u < self.ansatz.E0)

    def evaluate(self, r):
        """(phi, phi') at arbitrary radii inside the grid."""
        r = np.asarray(r, dtype=float)
        if self.steps is not None:
            ts, conts = self.steps
            inside = r >= ts[0]
            phi = np.empty(r.shape)
            dphi = np.empty(r.shape)
            if np.any(inside):
                y = dense_eval(ts, conts, r[inside])
                phi[inside] = y[..., 0]
                dphi[inside] = y[..., 1] / r[inside] ** 2
            if np.any(~inside):
                phi[~inside], dphi[~inside] = _hermite(self.grid, self.phi, self.dphi, r[~inside])
            return phi, dphi
        return _hermite(self.grid, self.phi, self.dphi, r)


def _hermite(grid, phi, dphi, r):
    r = np.asarray(r, dtype=float)
    i = np.clip(np.searchsorted(grid, r, side="right") - 1, 0, grid.size - 2)
    h = grid[i + 1] - grid[i]
    s = (r - grid[i]) / h
    s2, s3 = s * s, s * s * s
    f = ((2 * s3 - 3 * s2 + 1) * phi[i] + (s3 - 2 * s2 + s) * h * dphi[i]
         + (-2 * s3 + 3 * s2) * phi[i + 1] + (s3 - s2) * h * dphi[i + 1])
    df = ((6 * s2 - 6 * s) * phi[i] + (3 * s2 - 4 * s + 1) * h * dphi[i]
          + (-6 * s2 + 6 * s) * phi[i + 1] + (3 * s2 - 2 * s) * h * dphi[i + 1]) / h
    return f, df


def dense_eval(ts: np.ndarray, conts: np.ndarray, r) -> np.ndarray:
    """Evaluate the stored continuous extension at radii within [ts[0], ts[-1]]."""
    r = np.asarray(r, dtype=float)
    idx = np.clip(np.searchsorted(ts, r, side="right") - 1, 0, conts.shape[0] - 1)
    theta = ((r - ts[idx]) / (ts[idx + 1] - ts[idx]))[..., None]
    c = conts[idx]
    th1 = 1.0 - theta
    return c[..., 0, :] + theta * (c[..., 1, :] + th1 * (c[..., 2, :] + theta * (
        c[..., 3, :] + th1 * c[..., 4, :])))


def kernel_args(ansatz: PolytropicAnsatz):
    """Argument tuple for the compiled field right-hand side."""
    k = ansatz.k
    fparams = np.array([
        k, ansatz.mu, ansatz.E0, ansatz.amplitude, float(ansatz.variant.code),
        math.pi * beta_coeff(k, -0.5), QUAD_ABS_TOL, QUAD_REL_TOL, float(QUAD_MAX_BISECT),
    ])
    bx, bc = ansatz._table
    nodes, weights, counts = quadrature_rules(k + 0.5, ansatz.weight_mu)
    return fparams, bx, bc, nodes, weights, counts


def field_rhs(r: float, phi_val: float, ansatz: PolytropicAnsatz) -> float:
    """pi c_{k,-1/2} r^(2k+2) e^(2 phi) h_{k+1/2}(e^phi)."""
    if not r > 0.0:
        raise DomainError("field_rhs needs r > 0")
    u = math.exp(phi_val)
    if u >= ansatz.E0 or ansatz.is_vacuum:
        return 0.0
    k = ansatz.k
    return (math.pi * beta_coeff(k, -0.5) * r ** (2 * k + 2) * u * u
            * eval_h(k + 0.5, u, ansatz))


def _constant_profile(phi0, ansatz, numerics, delta, radius, status, r_end):
    grid = np.linspace(0.0, r_end, 9)
    return RadialProfile(grid=grid, phi=np.full(grid.size, float(phi0)),
                         dphi=np.zeros(grid.size), phi0=float(phi0), ansatz=ansatz,
                         numerics=numerics, delta=delta, radius=radius, status=status,
                         n_seed=grid.size)


def picard_seed(phi0: float, ansatz: PolytropicAnsatz,
                numerics: SolverNumerics = SolverNumerics()) -> RadialProfile:
    """Central solution on [0, delta] as the fixed point of the Picard operator.

    delta is halved (up to 20 times) whenever the iteration leaves the band
    u0 <= u <= u0 + 1 or successive distances fail to shrink by half.
    """
    delta = numerics.delta_for(ansatz)
    if phi0 >= math.log(ansatz.E0) or ansatz.is_vacuum:
        return _constant_profile(phi0, ansatz, numerics, delta, None, "seed", delta)
    u0 = math.exp(phi0)
    args = kernel_args(ansatz)
    n = numerics.seed_nodes
    for attempt in range(MAX_DELTA_HALVINGS + 1):
        status, r, u, inner = K.picard_iterate(u0, delta, n, *args,
                                               numerics.picard_tolerance, 500)
        if status == 0:
            break
        if status == 3:
            raise QuadratureError("kernel quadrature failed inside the Picard iteration")
        log.debug("Picard iteration failed (status %d) at delta=%g; halving", status, delta)
        delta *= 0.5
    else:
        raise ContractionError(
            f"Picard operator did not contract after {MAX_DELTA_HALVINGS} halvings of delta")
    phi = np.log(u)
    v = args[0][5] * inner
    dphi = np.zeros_like(r)
    dphi[1:] = v[1:] / r[1:] ** 2
    return RadialProfile(grid=r, phi=phi, dphi=dphi, phi0=float(phi0), ansatz=ansatz,
                         numerics=numerics, delta=delta, radius=None, status="seed",
                         n_seed=r.size)


def integrate_steady_state(phi0: float, ansatz: PolytropicAnsatz,
                           numerics: SolverNumerics = SolverNumerics()) -> RadialProfile:
    """Global solution from the center to the support radius (or max_radius)."""
    E0 = ansatz.E0
    if phi0 >= math.log(E0):
        # trivial solution: the source vanishes identically
        return _constant_profile(phi0, ansatz, numerics, numerics.delta_for(ansatz), 0.0,
                                 "vacuum", numerics.delta_for(ansatz))
    seed = picard_seed(phi0, ansatz, numerics)
    delta = seed.delta
    threshold = math.log(E0 * (1.0 - numerics.radius_tolerance))

    if seed.phi[-1] >= threshold:
        R = detect_radius(seed, ansatz, numerics)
        keep = seed.grid <= R
        return replace_nodes(seed, seed.grid[keep], seed.phi[keep], seed.dphi[keep],
                             radius=R, status="closed")

    args = kernel_args(ansatz)
    y0 = np.array([seed.phi[-1], seed.grid[-1] ** 2 * seed.dphi[-1]])
    status, ts, ys, conts, t_ev, y_ev, nfev = K.dopri5(
        K.RHS_FIELD, args, delta, y0, numerics.max_radius, delta,
        numerics.ode_abs_tol, numerics.ode_rel_tol, numerics.max_steps, 0, threshold,
        1e-15)
    if status == K.ODE_RHS_FAILURE:
        raise QuadratureError("kernel quadrature failed during radial integration")
    if status == K.ODE_MAX_STEPS:
        raise SolverError(f"step budget of {numerics.max_steps} exhausted at r={ts[-1]:.6g}")
    if status == K.ODE_STEP_UNDERFLOW:
        raise SolverError(f"step size underflow at r={ts[-1]:.6g}")

    if status == K.ODE_EVENT:
        R = float(t_ev)
        r_end, y_end = R, y_ev
        state = "closed"
        if conts.shape[0] > 0 and R > ts[-2]:
            # the event step straddles the kink of the source at the support edge;
            # redo it with steps ending on every output node so that near R the
            # stored values are step values rather than interpolants
            t_a = float(ts[-2])
            nodes = output_nodes(delta, R, numerics)
            stops = np.append(nodes[nodes > t_a], R)
            sub_ts, sub_ys, sub_conts = [ts[:-1]], [ys[:-1]], [conts[:-1]]
            y_a = ys[-2].copy()
            for t_b in stops:
                sub = K.dopri5(K.RHS_FIELD, args, t_a, y_a, float(t_b), float(t_b) - t_a,
                               numerics.ode_abs_tol, numerics.ode_rel_tol,
                               numerics.max_steps, -1, threshold, 1e-15)
                if sub[0] == K.ODE_RHS_FAILURE:
                    raise QuadratureError("kernel quadrature failed during radial integration")
                if sub[0] != K.ODE_DONE:
                    raise SolverError(f"integration near the support edge failed at r={t_a:.6g}")
                sub_ts.append(sub[1][1:])
                sub_ys.append(sub[2][1:])
                sub_conts.append(sub[3])
                nfev += sub[6]
                t_a, y_a = float(t_b), sub[2][-1].copy()
            ts = np.concatenate(sub_ts)
            ys = np.concatenate(sub_ys)
            conts = np.concatenate(sub_conts)
            y_end = y_a
    else:
        R = None
        r_end, y_end = float(ts[-1]), ys[-1]
        state = "open"
        log.warning("support did not close before max_radius=%g (phi=%g, log E0=%g)",
                    numerics.max_radius, ys[-1, 0], math.log(E0))

    stride = max(1, (seed.grid.size - 1) // 16)
    seed_idx = np.arange(0, seed.grid.size, stride)
    if seed_idx[-1] != seed.grid.size - 1:
        seed_idx = np.append(seed_idx, seed.grid.size - 1)
    r_seed = seed.grid[seed_idx]

    r_mid = output_nodes(delta, r_end, numerics)
    if conts.shape[0] > 0 and r_mid.size:
        y_mid = dense_eval(ts, conts, r_mid)
    else:
        y_mid = np.empty((0, 2))

    grid = np.concatenate([r_seed, r_mid, [r_end]])
    phi = np.concatenate([seed.phi[seed_idx], y_mid[:, 0], [y_end[0]]])
    v_tail = np.concatenate([y_mid[:, 1], [y_end[1]]])
    dphi = np.concatenate([seed.dphi[seed_idx], v_tail / grid[r_seed.size:] ** 2])
    return RadialProfile(grid=grid, phi=phi, dphi=dphi, phi0=float(phi0), ansatz=ansatz,
                         numerics=numerics, delta=delta, radius=R, status=state,
                         n_seed=r_seed.size, nfev=int(nfev),
                         steps=(ts, conts) if conts.shape[0] else None)


def output_nodes(delta: float, r_end: float, numerics: SolverNumerics) -> np.ndarray:
    """Interior output radii: a uniform grid on (delta, r_end) refined
    geometrically towards r_end."""
    n_out = numerics.n_output
    r_uniform = np.linspace(delta, r_end, n_out + 1)[1:-1]
    spacing = (r_end - delta) / n_out
    r_edge = r_end - spacing * 2.0 ** -np.arange(1, numerics.boundary_nodes + 1)
    r_edge = r_edge[r_edge > (r_uniform[-1] if r_uniform.size else delta)]
    return np.concatenate([r_uniform, r_edge])


def replace_nodes(profile: RadialProfile, grid, phi, dphi, **changes) -> RadialProfile:
    data = dict(grid=grid, phi=phi, dphi=dphi, phi0=profile.phi0, ansatz=profile.ansatz,
                numerics=profile.numerics, delta=profile.delta, radius=profile.radius,
                status=profile.status, n_seed=min(profile.n_seed, len(grid)),
                nfev=profile.nfev, steps=profile.steps)
    data.update(changes)
    return RadialProfile(**data)


def detect_radius(profile: RadialProfile, ansatz: Optional[PolytropicAnsatz] = None,
                  numerics: Optional[SolverNumerics] = None) -> Optional[float]:
    """Smallest r with E0 - e^phi(r) <= eps_R E0, or None if never reached.

    Uses the crossing recorded by the integrator when present; otherwise
    bisects the cubic Hermite interpolant between the bracketing nodes.
    """
    ansatz = ansatz or profile.ansatz
    numerics = numerics or profile.numerics
    if profile.status == "vacuum":
        return 0.0
    if profile.radius is not None and profile.status == "closed":
        return profile.radius
    threshold = math.log(ansatz.E0 * (1.0 - numerics.radius_tolerance))
    hit = np.nonzero(profile.phi >= threshold)[0]
    if hit.size == 0:
        return None
    i = int(hit[0])
    if i == 0:
        return 0.0
    lo, hi = profile.grid[i - 1], profile.grid[i]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _hermite(profile.grid, profile.phi, profile.dphi, mid)[0] >= threshold:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-16 * hi:
            break
    return float(hi)


@dataclass(frozen=True)
class ExteriorField:
    """phi(r) = phi_inf - C / r for r >= R, with C = R^2 phi'(R)."""

    R: float
    C: float
    phi_inf: float

    def phi(self, r):
        return self.phi_inf - self.C / np.asarray(r, dtype=float)

    def dphi(self, r):
        return self.C / np.asarray(r, dtype=float) ** 2

    def flux(self, r):
        """r^2 phi', constant on the exterior."""
        return np.full(np.shape(r), self.C, dtype=float)


def extend_vacuum(profile: RadialProfile, R: Optional[float] = None) -> ExteriorField:
    """Vacuum continuation beyond the support radius."""
    R = profile.radius if R is None else R
    if R is None:
        raise DomainError("no finite support radius to extend from")
    if R == 0.0:
        return ExteriorField(R=0.0, C=0.0, phi_inf=float(profile.phi0))
    if R < profile.grid[-1] - 1e-12 * R:
        phi_R, dphi_R = profile.evaluate(np.array([R]))
        phi_R, dphi_R = float(phi_R[0]), float(dphi_R[0])
    else:
        phi_R, dphi_R = float(profile.phi[-1]), float(profile.dphi[-1])
    C = R * R * dphi_R
    return ExteriorField(R=float(R), C=float(C), phi_inf=phi_R + C / R)


@dataclass(frozen=True)
class FlattenedState:
    """Shifted field phi - phi_inf with the law that reproduces its source."""

    profile: RadialProfile
    ansatz: PolytropicAnsatz
    phi_inf: float
    density_factor: float


def rescale_ansatz(ansatz: PolytropicAnsatz, phi_inf: float) -> PolytropicAnsatz:
    """Law Psi~(E) = e^((4+2k) phi_inf) Psi(e^phi_inf E) in the shifted gauge."""
    s = math.exp(phi_inf)
    k, mu = ansatz.k, ansatz.mu
    if ansatz.variant is Variant.ENERGY_WEIGHTED:
        return ansatz.replace(E0=ansatz.E0 / s,
                              amplitude=ansatz.amplitude * s ** (5 + 2 * k + 2 * mu))
    if ansatz.variant is Variant.PLAIN_POWER_LAW:
        return ansatz.replace(E0=ansatz.E0 / s, amplitude=ansatz.amplitude * s ** (4 + 2 * k + mu))
    return ansatz.replace(E0=ansatz.E0 / s, amplitude=ansatz.amplitude * s ** (4 + 2 * k),
                          table_E=tuple(np.asarray(ansatz.table_E) / s))


def asymptotic_flatten(profile: RadialProfile, phi_inf: float) -> FlattenedState:
    """Shift phi by -phi_inf so the field vanishes at infinity.

    The particle density picks up e^(4 phi_inf); expressed through the
    shifted invariants this is the rescaled law from ``rescale_ansatz``.
    """
    if not math.isfinite(phi_inf):
        raise DomainError("phi_inf must be finite")
    new_ansatz = rescale_ansatz(profile.ansatz, phi_inf)
    steps = None
    if profile.steps is not None:
        ts, conts = profile.steps
        conts = conts.copy()
        conts[:, 0, 0] -= phi_inf
        steps = (ts, conts)
    shifted = replace_nodes(profile, profile.grid, profile.phi - phi_inf, profile.dphi,
                            phi0=profile.phi0 - phi_inf, ansatz=new_ansatz, steps=steps)
    return FlattenedState(profile=shifted, ansatz=new_ansatz, phi_inf=float(phi_inf),
                          density_factor=math.exp(4.0 * phi_inf))


def apriori_bound(r, phi0: float, ansatz: PolytropicAnsatz):
    """phi0 + K r^(2k+2) with K from the central value of g_{k+1/2}."""
    from .special_functions import eval_g

    k = ansatz.k
    u0 = math.exp(phi0)
    g0 = eval_g(k + 0.5, u0, ansatz) if u0 < ansatz.E0 else 0.0
    K_ = math.pi * beta_coeff(k, -0.5) * g0 / ((2 * k + 2) * (2 * k + 3))
    return phi0 + K_ * np.asarray(r, dtype=float) ** (2 * k + 2)
