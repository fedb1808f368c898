import logging
import math

import pytest

from conftest import BASELINE_INI
from nvsteady.config import ConfigError, load_config, parse_config, serialize
from nvsteady.special_functions import Variant


def test_baseline_parses(baseline_ini):
    cfg = load_config(baseline_ini)
    assert cfg.ansatz.variant is Variant.ENERGY_WEIGHTED
    assert cfg.ansatz.E0 == pytest.approx(math.sqrt(0.9))
    assert cfg.central_phi() == pytest.approx(math.log(0.5 * math.sqrt(0.9)))
    assert not cfg.is_scan
    assert cfg.path("profile") == baseline_ini.parent / "baseline.csv"


def test_empty_scan_section_is_single_run():
    cfg = parse_config(BASELINE_INI + "\n[scan]\n")
    assert not cfg.is_scan


def test_round_trip():
    text = BASELINE_INI + "\n[scan]\nE0 = linspace(0.9, 1.0, 3)\nmu = 0, 0.5\n"
    cfg = parse_config(text)
    again = parse_config(serialize(cfg))
    assert again == cfg
    assert dict(cfg.scan)["E0"] == pytest.approx((0.9, 0.95, 1.0))


def test_tabulated_round_trip():
    text = """\
[ansatz]
variant = tabulated
k = 0
mu = 0
E0 = 1.0
table_E = 0.1, 0.5, 1.0
table_psi = 1.0, 0.5, 0.0

[solver]
phi0 = -1.0
"""
    cfg = parse_config(text)
    assert cfg.ansatz.table_E == (0.1, 0.5, 1.0)
    assert parse_config(serialize(cfg)) == cfg


def test_k_below_bound_names_the_invariant():
    bad = BASELINE_INI.replace("k = 0", "k = -0.6")
    with pytest.raises(ConfigError, match="k must exceed -1/2") as exc:
        parse_config(bad)
    assert exc.value.lineno == 3


@pytest.mark.parametrize("text,line,fragment", [
    ("[ansatz]\nk = 0\nmu = x\nE0 = 1\n[solver]\nphi0 = 0\n", 3, "mu: expected a number"),
    ("[ansatz]\nk = 0\nmu = 0\nE0 = 1\nfoo = 1\n[solver]\nphi0 = 0\n", 5, "unknown key"),
    ("[ansatz]\nk = 0\nmu = 0\nE0 = 1\n[solvr]\nphi0 = 0\n", 5, "unknown section"),
    ("k = 0\n[ansatz]\n", 1, "before the first"),
    ("[ansatz]\nk = 0\nmu = 0\nE0 = 1\n[solver]\nphi0 = 0\ncentral_fraction = 0.5\n", None,
     "either phi0 or central_fraction"),
    ("[ansatz]\nk = 0\nmu = 0\nE0 = 1\n[solver]\nphi0 = 0\n[output]\nemit-orbits = -1\n", 8,
     "non-negative"),
    ("[ansatz]\nk = 0\nmu = 0\nE0 = 1\n[solver]\nphi0 = 0\n[scan]\nE0 = linspace(1, 2, 0)\n",
     8, "at least one point"),
])
def test_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(ConfigError, match=fragment) as exc:
        parse_config(text)
    if line is not None:
        assert exc.value.lineno == line
        assert str(exc.value).startswith(f"line {line}:")


def test_missing_centre_value():
    with pytest.raises(ConfigError, match="phi0 or central_fraction"):
        parse_config("[ansatz]\nk = 0\nmu = 0\nE0 = 1\n[solver]\n")


def test_window_violation_only_warns(caplog):
    text = BASELINE_INI.replace(f"E0 = {math.sqrt(0.9)!r}", "E0 = 2.0")
    with caplog.at_level(logging.WARNING):
        cfg = parse_config(text)
    assert cfg.ansatz.E0 == 2.0
    assert "outside the finite-radius window" in caplog.text


def test_scan_values_validated():
    text = BASELINE_INI + "\n[scan]\nk = 0, -0.7\n"
    with pytest.raises(ConfigError, match="k must exceed"):
        parse_config(text)


def test_with_overrides():
    cfg = parse_config(BASELINE_INI + "\n[scan]\nmu = 0, 1\n")
    one = cfg.with_overrides(mu=1.0, phi0=-0.5)
    assert one.ansatz.mu == 1.0 and one.central_phi() == -0.5 and not one.is_scan
