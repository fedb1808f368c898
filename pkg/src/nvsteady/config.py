"""Run configuration: a sectioned ``key = value`` document.

::

    [ansatz]
    variant = energy-weighted
    k = 0
    mu = 0.5
    E0 = 0.9486832980505138

    [solver]
    central_fraction = 0.5      ; or phi0 = ...

    [output]
    profile = baseline.csv
    summary = baseline.json

    [scan]
    E0 = linspace(0.85, 1.1, 6)
"""

from __future__ import annotations

import configparser
import logging
import math
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DomainError
from .finite_radius import check_window
from .solver import SolverNumerics
from .special_functions import PolytropicAnsatz, Variant

log = logging.getLogger(__name__)

SECTIONS = ("ansatz", "solver", "output", "scan")
ANSATZ_KEYS = ("variant", "k", "mu", "E0", "amplitude", "table_E", "table_psi")
NUMERIC_KEYS = tuple(f.name for f in fields(SolverNumerics))
SOLVER_KEYS = ("phi0", "central_fraction") + NUMERIC_KEYS
OUTPUT_KEYS = ("profile", "summary", "atlas", "orbits", "mass-includes-4pi",
               "asymptotically-flatten", "emit-diagnostics", "emit-orbits", "orbit-seed")
SCAN_KEYS = ("phi0", "k", "mu", "E0")
INT_NUMERICS = {"n_output", "seed_nodes", "boundary_nodes", "max_steps"}


class ConfigError(ValueError):
    """Malformed or invalid configuration; ``lineno`` points into the document."""

    def __init__(self, message: str, lineno: Optional[int] = None):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}" if lineno else message)


@dataclass(frozen=True)
class OutputSettings:
    profile: str = "profile.csv"
    summary: str = "summary.json"
    atlas: str = "atlas.csv"
    orbits: str = "orbits.csv"
    mass_includes_4pi: bool = False
    asymptotically_flatten: bool = False
    emit_diagnostics: bool = True
    emit_orbits: int = 0
    orbit_seed: int = 0


@dataclass(frozen=True)
class RunConfig:
    ansatz: PolytropicAnsatz
    phi0: Optional[float] = None
    central_fraction: Optional[float] = None
    numerics: SolverNumerics = SolverNumerics()
    output: OutputSettings = OutputSettings()
    scan: tuple = ()  # ((name, (values...)), ...) in canonical order
    base_dir: Path = field(default=Path("."), compare=False)

    def central_phi(self, ansatz: Optional[PolytropicAnsatz] = None) -> float:
        a = ansatz or self.ansatz
        if self.phi0 is not None:
            return self.phi0
        return math.log(self.central_fraction * a.E0)

    @property
    def is_scan(self) -> bool:
        return bool(self.scan)

    def path(self, name: str) -> Path:
        p = Path(getattr(self.output, name))
        return p if p.is_absolute() else self.base_dir / p

    def with_overrides(self, **values) -> "RunConfig":
        """Single-run config with any of phi0, k, mu, E0 replaced."""
        ans = {k: v for k, v in values.items() if k in ("k", "mu", "E0")}
        cfg = replace(self, ansatz=self.ansatz.replace(**ans) if ans else self.ansatz, scan=())
        if "phi0" in values:
            cfg = replace(cfg, phi0=float(values["phi0"]), central_fraction=None)
        return cfg


_LINSPACE = re.compile(r"^linspace\(\s*([^,]+),\s*([^,]+),\s*([^,)]+)\)$")


def _parse_float(text: str, key: str, lineno: int) -> float:
    try:
        val = float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}", lineno) from None
    if not math.isfinite(val):
        raise ConfigError(f"{key}: value must be finite", lineno)
    return val


def _parse_int(text: str, key: str, lineno: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {text!r}", lineno) from None


def _parse_bool(text: str, key: str, lineno: int) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected true/false, got {text!r}", lineno)


def _parse_list(text: str, key: str, lineno: int) -> tuple:
    text = text.strip()
    m = _LINSPACE.match(text)
    if m:
        a = _parse_float(m.group(1), key, lineno)
        b = _parse_float(m.group(2), key, lineno)
        n = _parse_int(m.group(3).strip(), key, lineno)
        if n < 1:
            raise ConfigError(f"{key}: linspace needs at least one point", lineno)
        return tuple(float(v) for v in np.linspace(a, b, n))
    items = [s for s in (part.strip() for part in text.split(",")) if s]
    if not items:
        raise ConfigError(f"{key}: empty list", lineno)
    return tuple(_parse_float(s, key, lineno) for s in items)


def _line_index(text: str) -> dict:
    """(section, key) -> 1-based line number, plus (section, None) for headers."""
    index = {}
    section = None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            index.setdefault((section, None), n)
            continue
        key = re.split(r"[=:]", line, maxsplit=1)[0].strip()
        if section is not None:
            index.setdefault((section, key), n)
    return index


def parse_config(text: str, base_dir: Path | str = ".") -> RunConfig:
    """Parse and validate a configuration document."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"),
                                       empty_lines_in_values=False, default_section="__none__")
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("content before the first [section] header", exc.lineno) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(str(exc).split(":", 1)[-1].strip(), exc.lineno) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ConfigError("unparseable line", lineno) from None
    lines = _line_index(text)

    def where(section, key=None):
        return lines.get((section, key))

    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]", where(section))
    allowed = {"ansatz": ANSATZ_KEYS, "solver": SOLVER_KEYS, "output": OUTPUT_KEYS,
               "scan": SCAN_KEYS}
    for section in parser.sections():
        for key in parser[section]:
            if key not in allowed[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]", where(section, key))
    if "ansatz" not in parser:
        raise ConfigError("missing [ansatz] section")

    sec = parser["ansatz"]
    akw: dict = {}
    for key in ("k", "mu", "E0"):
        if key not in sec:
            raise ConfigError(f"[ansatz] needs {key}", where("ansatz"))
        akw[key] = _parse_float(sec[key], key, where("ansatz", key))
    if "amplitude" in sec:
        akw["amplitude"] = _parse_float(sec["amplitude"], "amplitude", where("ansatz", "amplitude"))
    if "variant" in sec:
        try:
            akw["variant"] = Variant(sec["variant"].strip())
        except ValueError:
            choices = ", ".join(v.value for v in Variant)
            raise ConfigError(f"variant must be one of {choices}",
                              where("ansatz", "variant")) from None
    for key in ("table_E", "table_psi"):
        if key in sec:
            akw[key] = _parse_list(sec[key], key, where("ansatz", key))
    try:
        ansatz = PolytropicAnsatz(**akw)
    except DomainError as exc:
        bad = next((k for k in ("k", "mu", "E0", "amplitude") if str(exc).startswith(k)), None)
        raise ConfigError(str(exc), where("ansatz", bad) if bad else where("ansatz")) from None

    phi0 = central = None
    nkw: dict = {}
    if "solver" in parser:
        sec = parser["solver"]
        if "phi0" in sec and "central_fraction" in sec:
            raise ConfigError("give either phi0 or central_fraction, not both",
                              where("solver", "central_fraction"))
        if "phi0" in sec:
            phi0 = _parse_float(sec["phi0"], "phi0", where("solver", "phi0"))
        if "central_fraction" in sec:
            central = _parse_float(sec["central_fraction"], "central_fraction",
                                   where("solver", "central_fraction"))
            if not central > 0.0:
                raise ConfigError("central_fraction must be positive",
                                  where("solver", "central_fraction"))
        for key in NUMERIC_KEYS:
            if key in sec:
                ln = where("solver", key)
                nkw[key] = (_parse_int(sec[key], key, ln) if key in INT_NUMERICS
                            else _parse_float(sec[key], key, ln))
    try:
        numerics = SolverNumerics(**nkw)
    except DomainError as exc:
        bad = next((k for k in nkw if str(exc).startswith(k)), None)
        raise ConfigError(str(exc), where("solver", bad) if bad else where("solver")) from None

    okw: dict = {}
    if "output" in parser:
        sec = parser["output"]
        for key in ("profile", "summary", "atlas", "orbits"):
            if key in sec:
                okw[key] = sec[key].strip()
        for key in ("mass-includes-4pi", "asymptotically-flatten", "emit-diagnostics"):
            if key in sec:
                okw[key.replace("-", "_")] = _parse_bool(sec[key], key, where("output", key))
        for key in ("emit-orbits", "orbit-seed"):
            if key in sec:
                val = _parse_int(sec[key], key, where("output", key))
                if val < 0:
                    raise ConfigError(f"{key} must be non-negative", where("output", key))
                okw[key.replace("-", "_")] = val
    output = OutputSettings(**okw)

    scan = []
    if "scan" in parser:
        for key in SCAN_KEYS:
            if key in parser["scan"]:
                scan.append((key, _parse_list(parser["scan"][key], key, where("scan", key))))
    if phi0 is None and central is None and not any(k == "phi0" for k, _ in scan):
        raise ConfigError("[solver] needs phi0 or central_fraction", where("solver"))

    cfg = RunConfig(ansatz=ansatz, phi0=phi0, central_fraction=central, numerics=numerics,
                    output=output, scan=tuple(scan), base_dir=Path(base_dir))
    for key, values in cfg.scan:
        if key in ("k", "mu", "E0"):
            for v in values:
                try:
                    ansatz.replace(**{key: v})
                except DomainError as exc:
                    raise ConfigError(str(exc), where("scan", key)) from None
    if not cfg.scan and not check_window(ansatz.mu, ansatz.k, ansatz.E0).ok:
        log.warning("parameters lie outside the finite-radius window for E0^2; "
                    "closure of the support is not guaranteed")
    return cfg


def load_config(path: Path | str) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), base_dir=path.parent)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


def serialize(cfg: RunConfig) -> str:
    """Inverse of ``parse_config`` (up to formatting)."""
    a = cfg.ansatz
    out = ["[ansatz]", f"variant = {a.variant.value}", f"k = {a.k!r}", f"mu = {a.mu!r}",
           f"E0 = {a.E0!r}", f"amplitude = {a.amplitude!r}"]
    if a.variant is Variant.TABULATED:
        out += [f"table_E = {_fmt(a.table_E)}", f"table_psi = {_fmt(a.table_psi)}"]
    out += ["", "[solver]"]
    if cfg.phi0 is not None:
        out.append(f"phi0 = {cfg.phi0!r}")
    if cfg.central_fraction is not None:
        out.append(f"central_fraction = {cfg.central_fraction!r}")
    for f in fields(SolverNumerics):
        val = getattr(cfg.numerics, f.name)
        if val is not None:
            out.append(f"{f.name} = {_fmt(val)}")
    out += ["", "[output]"]
    for f in fields(OutputSettings):
        key = f.name.replace("_", "-")
        out.append(f"{key} = {_fmt(getattr(cfg.output, f.name))}")
    out += ["", "[scan]"]
    for key, values in cfg.scan:
        out.append(f"{key} = {_fmt(values)}")
    return "\n".join(out) + "\n"
