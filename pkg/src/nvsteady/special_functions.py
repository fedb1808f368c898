"""Beta coefficients, the distribution law, and the energy kernels h_m, g_m.

The kernels are one-dimensional energy integrals

    h_m(u) = int_u^inf Psi(E) (E^2 - u^2)^m dE
    g_m(u) = int_u^inf Psi(E) E^2 (E^2 - u^2)^m dE = h_{m+1}(u) + u^2 h_m(u)

with Psi cut off at E0. They are evaluated by adaptive Gauss-Jacobi
quadrature after mapping E^2 = u^2 + (E0^2 - u^2) t, which turns both
algebraic endpoint singularities into a Beta-type weight on [0, 1].
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import roots_jacobi

from . import _kernels as K
from .errors import DomainError, QuadratureError

QUAD_ABS_TOL = 1e-10
QUAD_REL_TOL = 1e-8
QUAD_MAX_BISECT = 200
RULE_ORDERS = (16, 32)


class Variant(str, enum.Enum):
    """Shape of Psi below the cutoff energy."""

    ENERGY_WEIGHTED = "energy-weighted"  # c E (E0^2 - E^2)_+^mu
    PLAIN_POWER_LAW = "plain-power-law"  # c (E0 - E)_+^mu
    TABULATED = "tabulated"  # monotone cubic through (E_i, Psi_i), zero above E0

    @property
    def code(self) -> int:
        return {
            Variant.ENERGY_WEIGHTED: K.ENERGY_WEIGHTED,
            Variant.PLAIN_POWER_LAW: K.PLAIN_POWER_LAW,
            Variant.TABULATED: K.TABULATED,
        }[self]


@dataclass(frozen=True)
class PolytropicAnsatz:
    """Distribution law Phi(E, F) = Psi(E) F^k with Psi vanishing above E0.

    ``amplitude`` may be zero, which describes the empty (vacuum) law. For
    the tabulated variant ``mu`` only enters the window checks; the table
    is given by ``table_E`` (strictly increasing) and ``table_psi``.
    """

    k: float
    mu: float
    E0: float
    amplitude: float = 1.0
    variant: Variant = Variant.ENERGY_WEIGHTED
    table_E: tuple = field(default=(), repr=False)
    table_psi: tuple = field(default=(), repr=False)

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        for name in ("k", "mu", "E0", "amplitude"):
            val = getattr(self, name)
            if not math.isfinite(val):
                raise DomainError(f"{name} must be finite, got {val!r}")
            object.__setattr__(self, name, float(val))
        if not self.k > -0.5:
            raise DomainError(f"k must exceed -1/2 (got {self.k})")
        if not self.mu > -1.0:
            raise DomainError(f"mu must exceed -1 (got {self.mu})")
        if not self.E0 > 0.0:
            raise DomainError(f"E0 must be positive (got {self.E0})")
        if self.amplitude < 0.0:
            raise DomainError(f"amplitude must be non-negative (got {self.amplitude})")
        if self.variant is Variant.TABULATED:
            E = np.asarray(self.table_E, dtype=float)
            psi = np.asarray(self.table_psi, dtype=float)
            if E.ndim != 1 or E.shape != psi.shape or E.size < 2:
                raise DomainError("tabulated Psi needs matching 1-d energy and value arrays")
            if np.any(np.diff(E) <= 0.0) or E[0] <= 0.0:
                raise DomainError("table energies must be positive and strictly increasing")
            if np.any(psi < 0.0) or not np.all(np.isfinite(psi)):
                raise DomainError("tabulated Psi must be finite and non-negative")
            object.__setattr__(self, "table_E", tuple(float(x) for x in E))
            object.__setattr__(self, "table_psi", tuple(float(x) for x in psi))

    @cached_property
    def _table(self) -> tuple[np.ndarray, np.ndarray]:
        if self.variant is not Variant.TABULATED:
            return np.zeros(2), np.zeros((4, 1))
        pchip = PchipInterpolator(np.asarray(self.table_E), np.asarray(self.table_psi))
        return np.ascontiguousarray(pchip.x), np.ascontiguousarray(pchip.c)

    @property
    def weight_mu(self) -> float:
        """Exponent of (1 - t) absorbed by the quadrature rule."""
        return 0.0 if self.variant is Variant.TABULATED else self.mu

    @property
    def is_vacuum(self) -> bool:
        return self.amplitude == 0.0

    def psi(self, E):
        """Psi(E), vectorised over ``E``."""
        bx, bc = self._table
        E = np.asarray(E, dtype=float)
        out = np.empty(E.shape)
        flat = out.reshape(-1)
        for i, e in enumerate(E.reshape(-1)):
            flat[i] = K.psi_value(float(e), self.variant.code, self.mu, self.E0,
                                  self.amplitude, bx, bc)
        return out if out.ndim else float(out)

    def replace(self, **changes) -> "PolytropicAnsatz":
        data = dict(k=self.k, mu=self.mu, E0=self.E0, amplitude=self.amplitude,
                    variant=self.variant, table_E=self.table_E, table_psi=self.table_psi)
        data.update(changes)
        return PolytropicAnsatz(**data)


def beta_coeff(a: float, b: float) -> float:
    """c_{a,b} = int_0^1 s^a (1-s)^b ds = Gamma(a+1) Gamma(b+1) / Gamma(a+b+2)."""
    if not (a > -1.0 and b > -1.0):
        raise DomainError(f"beta_coeff needs a > -1 and b > -1, got ({a}, {b})")
    if a + b + 2.0 < 170.0:
        return math.gamma(a + 1.0) * math.gamma(b + 1.0) / math.gamma(a + b + 2.0)
    return math.exp(math.lgamma(a + 1.0) + math.lgamma(b + 1.0) - math.lgamma(a + b + 2.0))


@lru_cache(maxsize=256)
def quadrature_rules(m: float, muw: float, orders: tuple[int, int] = RULE_ORDERS):
    """Gauss-Jacobi rules on [0, 1] for the four panel kinds at two orders.

    Returns ``(nodes, weights, counts)`` shaped (4, 2, max(orders)),
    (4, 2, max(orders)) and (2,), in the layout ``_kernels`` expects.
    """
    nmax = max(orders)
    nodes = np.zeros((4, 2, nmax))
    weights = np.zeros((4, 2, nmax))
    exps = {
        K.KIND_BOTH: (muw, m),
        K.KIND_LEFT: (0.0, m),
        K.KIND_RIGHT: (muw, 0.0),
        K.KIND_NONE: (0.0, 0.0),
    }
    for kind, (alpha, beta) in exps.items():
        for j, n in enumerate(orders):
            x, w = roots_jacobi(n, alpha, beta)
            nodes[kind, j, :n] = 0.5 * (x + 1.0)
            weights[kind, j, :n] = w * 2.0 ** (-(alpha + beta + 1.0))
    for arr in (nodes, weights):
        arr.setflags(write=False)
    return nodes, weights, np.array(orders, dtype=np.int64)


def _check_order(m: float) -> None:
    if not m > -1.0:
        raise DomainError(f"kernel order must exceed -1, got {m}")


def energy_moment(m: float, p: float, u, ansatz: PolytropicAnsatz,
                  abs_tol: float = QUAD_ABS_TOL, rel_tol: float = QUAD_REL_TOL,
                  max_bisect: int = QUAD_MAX_BISECT):
    """int_u^E0 Psi(E) E^p (E^2 - u^2)^m dE for scalar or array ``u > 0``."""
    _check_order(m)
    bx, bc = ansatz._table
    nodes, weights, counts = quadrature_rules(float(m), ansatz.weight_mu)
    arr = np.asarray(u, dtype=float)
    if np.any(arr <= 0.0):
        raise DomainError("kernel argument u must be positive")
    vals, status = K.energy_moment_many(
        float(m), float(p), np.ascontiguousarray(arr.reshape(-1)), ansatz.variant.code,
        ansatz.mu, ansatz.E0, ansatz.amplitude, bx, bc, nodes, weights, counts,
        abs_tol, rel_tol, int(max_bisect))
    if status != K.STATUS_OK:
        raise QuadratureError(
            f"energy integral (m={m}, p={p}) missed tolerance within {max_bisect} bisections")
    if arr.ndim == 0:
        return float(vals[0])
    return vals.reshape(arr.shape)


def eval_h(m: float, u, ansatz: PolytropicAnsatz):
    """h_m(u); zero for u >= E0, non-increasing in u."""
    return energy_moment(m, 0.0, u, ansatz)


def eval_g(m: float, u, ansatz: PolytropicAnsatz):
    """g_m(u), computed from its own integral rather than the h recurrence."""
    return energy_moment(m, 2.0, u, ansatz)


def eval_h_derivative(m: float, u, ansatz: PolytropicAnsatz):
    """dh_m/du = -2 m u h_{m-1}(u), valid for m > 0."""
    if not m > 0.0:
        raise DomainError(f"h_m is differentiable only for m > 0, got {m}")
    return -2.0 * m * np.asarray(u) * eval_h(m - 1.0, u, ansatz) if np.ndim(u) else \
        -2.0 * m * u * eval_h(m - 1.0, u, ansatz)


def eval_g_derivative(m: float, u, ansatz: PolytropicAnsatz):
    """dg_m/du = -2 m u g_{m-1}(u), valid for m > 0."""
    if not m > 0.0:
        raise DomainError(f"g_m is differentiable only for m > 0, got {m}")
    return -2.0 * m * np.asarray(u) * eval_g(m - 1.0, u, ansatz) if np.ndim(u) else \
        -2.0 * m * u * eval_g(m - 1.0, u, ansatz)


def closed_form_h(m: float, u, mu: float, E0: float):
    """h_m(u) for Psi(E) = E (E0^2 - E^2)_+^mu with unit amplitude.

    Uses int_u^E0 E (E0^2-E^2)^a (E^2-u^2)^b dE = c_{a,b} (E0^2-u^2)^(a+b+1) / 2.
    """
    _check_order(m)
    arr = np.asarray(u, dtype=float)
    if np.any(arr > E0):
        raise DomainError("closed form holds only for u <= E0")
    val = 0.5 * beta_coeff(mu, m) * (E0 * E0 - arr * arr) ** (mu + m + 1.0)
    return float(val) if arr.ndim == 0 else val
