"""Particle orbits in a steady field and the Jeans invariants.

In the reduced coordinates r = |x|, w = e^phi x.p/|x|,
F = e^(2phi)(|x|^2|p|^2 - (x.p)^2) the characteristics are

    dr/ds = w,    dw/ds = F/r^3 - e^(2phi) phi',    dF/ds = 0,

and E~ = w^2/2 + F/(2r^2) + e^(2phi)/2 = E^2/2 is conserved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import _kernels as K
from .errors import DomainError, SolverError
from .solver import ExteriorField, RadialProfile, extend_vacuum
from .special_functions import PolytropicAnsatz


class OrbitState(NamedTuple):
    r: float
    w: float
    F: float


def invariants_cartesian(x, p, phi_val: float) -> tuple[float, float]:
    """E = e^phi sqrt(1 + |p|^2) and F = e^(2phi) |x ^ p|^2."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    if not np.linalg.norm(x) > 0.0:
        raise DomainError("position must be non-zero")
    E = math.exp(phi_val) * math.sqrt(1.0 + float(p @ p))
    L = np.cross(x, p)
    return E, math.exp(2.0 * phi_val) * float(L @ L)


def to_reduced(x, p, phi_val: float) -> OrbitState:
    """(r, w, F) from a Cartesian phase-space point."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    r = float(np.linalg.norm(x))
    if not r > 0.0:
        raise DomainError("position must be non-zero")
    xp = float(x @ p)
    F = math.exp(2.0 * phi_val) * max(r * r * float(p @ p) - xp * xp, 0.0)
    return OrbitState(r, math.exp(phi_val) * xp / r, F)


def reduced_energy(state: OrbitState, phi_val: float) -> float:
    """E~ = w^2/2 + F/(2 r^2) + e^(2phi)/2."""
    r, w, F = state
    return 0.5 * w * w + 0.5 * F / (r * r) + 0.5 * math.exp(2.0 * phi_val)


class FieldInterpolant:
    """phi and phi' at any r > 0 from the stored nodes plus the vacuum exterior.

    Cubic Hermite on (phi_i, phi'_i) inside the grid, so phi' is the exact
    derivative of the interpolated phi; phi_inf - C/r beyond the last node
    of a closed profile.
    """

    def __init__(self, profile: RadialProfile, exterior: Optional[ExteriorField] = None):
        self.grid = np.ascontiguousarray(profile.grid, dtype=float).copy()
        self.curves = np.ascontiguousarray(np.vstack([profile.phi, profile.dphi]))
        if exterior is None and profile.radius is not None and profile.radius > 0.0:
            exterior = extend_vacuum(profile)
        self.exterior = exterior
        has_ext = exterior is not None and exterior.R > 0.0
        self.base = np.array([
            0.0,
            exterior.phi_inf if has_ext else 0.0,
            exterior.C if has_ext else 0.0,
            self.grid[-1],
            1.0 if has_ext else 0.0,
        ])

    def oparams(self, F: float) -> np.ndarray:
        out = self.base.copy()
        out[0] = F
        return out

    def __call__(self, r: float) -> tuple[float, float]:
        return K.hermite_field(float(r), self.grid, self.curves[0], self.curves[1], self.base)

    def phi(self, r: float) -> float:
        return self(r)[0]


@dataclass(frozen=True, eq=False)
class Trajectory:
    s: np.ndarray
    r: np.ndarray
    w: np.ndarray
    F: float
    energy: np.ndarray  # E~ along the stored steps
    nfev: int = 0

    @property
    def energy_drift(self) -> float:
        """max |E~(s) - E~(0)| / E~(0)."""
        return float(np.max(np.abs(self.energy - self.energy[0])) / self.energy[0])


def _args(field: FieldInterpolant, F: float):
    from .special_functions import quadrature_rules

    nodes, weights, counts = quadrature_rules(0.5, 0.0)
    return (field.oparams(F), field.grid, field.curves, nodes, weights, counts)


def integrate_orbit(profile: RadialProfile, initial: OrbitState, span: float,
                    abs_tol: float = 1e-12, rel_tol: float = 1e-12,
                    field: Optional[FieldInterpolant] = None,
                    max_steps: int = 1_000_000) -> Trajectory:
    """Advance (r, w) along the characteristic for parameter length ``span``.

    F is a fixed parameter of the right-hand side and never integrated.
    """
    r0, w0, F = (float(v) for v in initial)
    if not r0 > 0.0:
        raise DomainError("orbit must start at r > 0")
    if not F > 0.0:
        raise DomainError("F must be positive (radial orbits through the center are excluded)")
    if not span > 0.0:
        raise DomainError("span must be positive")
    field = field or FieldInterpolant(profile)
    args = _args(field, F)
    h0 = min(span, 1e-3 * r0 / max(abs(w0), 1e-3))
    status, ts, ys, _conts, _te, _ye, nfev = K.dopri5(
        K.RHS_ORBIT, args, 0.0, np.array([r0, w0]), float(span), h0, abs_tol, rel_tol,
        max_steps, -1, 0.0, 1e-15)
    if status != K.ODE_DONE:
        raise SolverError(f"orbit integration failed (status {status}) at s={ts[-1]:.6g}")
    r, w = ys[:, 0], ys[:, 1]
    phi = np.array([field(ri)[0] for ri in r])
    energy = 0.5 * w * w + 0.5 * F / (r * r) + 0.5 * np.exp(2.0 * phi)
    return Trajectory(s=ts, r=r, w=w, F=F, energy=energy, nfev=int(nfev))


def circular_F(field: FieldInterpolant, r: float) -> float:
    """F of the circular orbit at radius r: F / r^3 = e^(2phi) phi'."""
    phi, dphi = field(r)
    return r ** 3 * math.exp(2.0 * phi) * dphi


def eval_density(x, p, profile: RadialProfile, ansatz: Optional[PolytropicAnsatz] = None,
                 field: Optional[FieldInterpolant] = None) -> float:
    """f(x, p) = Psi(E) F^k with phi interpolated at |x|."""
    a = ansatz or profile.ansatz
    field = field or FieldInterpolant(profile)
    r = float(np.linalg.norm(np.asarray(x, dtype=float)))
    if not r > 0.0:
        raise DomainError("position must be non-zero")
    E, F = invariants_cartesian(x, p, field(r)[0])
    return density_from_invariants(E, F, a)


def density_from_invariants(E: float, F: float, ansatz: PolytropicAnsatz) -> float:
    if E >= ansatz.E0:
        return 0.0
    psi = ansatz.psi(E)
    if ansatz.k == 0.0:
        return float(psi)
    if F <= 0.0:
        return 0.0 if ansatz.k > 0.0 else math.inf
    return float(psi * F ** ansatz.k)


def reduced_to_cartesian(state: OrbitState, phi_val: float):
    """A Cartesian (x, p) with the given (r, w, F): x on the first axis."""
    r, w, F = state
    e = math.exp(phi_val)
    x = np.array([r, 0.0, 0.0])
    p = np.array([w / e, math.sqrt(max(F, 0.0)) / (e * r), 0.0])
    return x, p


def random_bound_orbits(field: FieldInterpolant, profile: RadialProfile, n: int,
                        rng: np.random.Generator) -> list[OrbitState]:
    """Initial states inside the support with E < E0 and F > 0."""
    a = profile.ansatz
    R = profile.radius if profile.radius else profile.grid[-1]
    out = []
    while len(out) < n:
        r = rng.uniform(0.05, 0.9) * R
        phi = field(r)[0]
        budget = a.E0 ** 2 - math.exp(2.0 * phi)  # room for w^2 + F/r^2
        if budget <= 0.0:
            continue
        frac = rng.uniform(0.05, 0.9)
        split = rng.uniform(0.05, 0.95)
        w = math.copysign(math.sqrt(frac * budget * split), rng.uniform(-1.0, 1.0))
        F = frac * budget * (1.0 - split) * r * r
        out.append(OrbitState(r, w, F))
    return out
