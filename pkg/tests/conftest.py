"""Shared fixtures: the baseline steady state and a tightened rerun."""

from __future__ import annotations

import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nvsteady.finite_radius import build_diagnostics  # noqa: E402
from nvsteady.observables import observe  # noqa: E402
from nvsteady.solver import SolverNumerics, integrate_steady_state  # noqa: E402
from nvsteady.special_functions import PolytropicAnsatz  # noqa: E402

BASE_E0 = math.sqrt(0.9)
BASE_PHI0 = math.log(0.5 * BASE_E0)

BASELINE_INI = f"""\
[ansatz]
variant = energy-weighted
k = 0
mu = 0.5
E0 = {BASE_E0!r}

[solver]
central_fraction = 0.5

[output]
profile = baseline.csv
summary = baseline.json
"""


class Run:
    """A solved profile with its observables and boundary diagnostics."""

    def __init__(self, ansatz, phi0, numerics=SolverNumerics()):
        self.ansatz = ansatz
        self.profile = integrate_steady_state(phi0, ansatz, numerics)
        self.obs = observe(self.profile)
        self.diag = build_diagnostics(self.profile, self.obs) if self.profile.radius else None


@pytest.fixture(scope="session")
def base_ansatz():
    return PolytropicAnsatz(k=0.0, mu=0.5, E0=BASE_E0)


@pytest.fixture(scope="session")
def baseline(base_ansatz):
    return Run(base_ansatz, BASE_PHI0)


@pytest.fixture(scope="session")
def baseline_tight(base_ansatz):
    return Run(base_ansatz, BASE_PHI0, SolverNumerics().tightened(100.0))


@pytest.fixture
def baseline_ini(tmp_path):
    path = tmp_path / "baseline.ini"
    path.write_text(BASELINE_INI)
    return path
