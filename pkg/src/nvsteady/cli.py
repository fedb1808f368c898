"""Command-line entry point.

Exit codes: 0 success, 2 solver failure, 3 I/O failure, 4 malformed input.
"""

from __future__ import annotations

import argparse
import itertools
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from multiprocessing import get_context
from pathlib import Path

from .config import ConfigError, RunConfig, load_config
from .errors import ContractionError, DomainError, QuadratureError, SolverError
from .files import (MalformedInput, atomic_writer, read_profile_csv, read_summary,
                    remove_quietly, write_profile_csv, write_summary, write_table)

EXIT_OK = 0
EXIT_SOLVER = 2
EXIT_IO = 3
EXIT_MALFORMED = 4

SOLVER_ERRORS = (SolverError, ContractionError, QuadratureError, DomainError, ArithmeticError)

log = logging.getLogger("nvsteady")


def _load(path: str) -> RunConfig:
    return load_config(path)


def run_solve(cfg: RunConfig) -> int:
    from .pipeline import orbit_table, solve_config, summary_document

    try:
        res = solve_config(cfg)
    except SOLVER_ERRORS as exc:
        log.error("solver failed: %s", exc)
        return EXIT_SOLVER
    created: list = []
    try:
        with atomic_writer(cfg.path("profile"), created) as fh:
            write_profile_csv(fh, res.profile, res.obs,
                              res.diag if cfg.output.emit_diagnostics else None)
        with atomic_writer(cfg.path("summary"), created) as fh:
            write_summary(fh, summary_document(cfg, res))
        if cfg.output.emit_orbits:
            rows = orbit_table(res, cfg.output.emit_orbits, cfg.output.orbit_seed)
            with atomic_writer(cfg.path("orbits"), created) as fh:
                write_table(fh, ("orbit", "s", "r", "w", "F", "energy", "density"), rows)
    except OSError as exc:
        remove_quietly(created)
        log.error("cannot write output: %s", exc)
        return EXIT_IO
    except SOLVER_ERRORS as exc:
        remove_quietly(created)
        log.error("orbit integration failed: %s", exc)
        return EXIT_SOLVER
    s = res.summary
    print(f"R={s.R!r} M={s.M!r} energy={s.energy_total!r} N={s.particle_number!r} "
          f"phi_inf={s.phi_inf!r} status={s.status}")
    return EXIT_OK


def _scan_task(cfg: RunConfig, overrides: dict) -> list:
    from .pipeline import scan_row

    return scan_row(cfg, overrides)


def scan_tuples(cfg: RunConfig) -> list[dict]:
    """Parameter tuples in lexicographic (phi0, k, mu, E0) order."""
    names = [n for n, _ in cfg.scan]
    values = [sorted(set(v)) for _, v in cfg.scan]
    order = ("phi0", "k", "mu", "E0")
    combos = [dict(zip(names, c)) for c in itertools.product(*values)]

    def key(d):
        a = cfg.with_overrides(**d)
        return tuple((a.central_phi(a.ansatz), a.ansatz.k, a.ansatz.mu, a.ansatz.E0)[
            order.index(n)] for n in order)
    return sorted(combos, key=key)


def run_scan(cfg: RunConfig, jobs: int | None = None) -> int:
    from .pipeline import SCAN_COLUMNS

    if not cfg.scan:
        log.error("scan needs a non-empty [scan] section")
        return EXIT_MALFORMED
    tuples = scan_tuples(cfg)
    jobs = jobs or os.cpu_count() or 1
    if jobs <= 1 or len(tuples) == 1:
        rows = [_scan_task(cfg, t) for t in tuples]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tuples)),
                                 mp_context=get_context("spawn")) as pool:
            rows = list(pool.map(_scan_task, [cfg] * len(tuples), tuples))
    created: list = []
    try:
        with atomic_writer(cfg.path("atlas"), created) as fh:
            write_table(fh, SCAN_COLUMNS, rows)
    except OSError as exc:
        remove_quietly(created)
        log.error("cannot write atlas: %s", exc)
        return EXIT_IO
    ok = sum(1 for r in rows if r[4] == "ok")
    print(f"{ok}/{len(rows)} tuples solved -> {cfg.path('atlas')}")
    return EXIT_OK if ok else EXIT_SOLVER


def run_verify(profile_csv: str, summary_path: str) -> int:
    from .pipeline import verify_stored

    try:
        cols = read_profile_csv(profile_csv)
        doc = read_summary(summary_path)
        checks = verify_stored(cols, doc)
    except (MalformedInput, KeyError, TypeError, ValueError) as exc:
        log.error("malformed input: %s", exc)
        return EXIT_MALFORMED
    except OSError as exc:
        log.error("cannot read input: %s", exc)
        return EXIT_IO
    ok = True
    for c in checks:
        label = ("PASS" if c.passed else "FAIL") if c.gating else "INFO"
        print(f"{label} {c.name} measured={c.measured:.3e} tolerance={c.tolerance:.1e}")
        ok &= c.passed or not c.gating
    return EXIT_OK if ok else 1


def run_limits(mu: float, k: float, E0: float) -> int:
    from .finite_radius import alpha_limit, beta_closure_limit, beta_limit, check_window

    if not (mu > -1.0 and k > -0.5 and E0 > 0.0):
        log.error("need mu > -1, k > -1/2 and E0 > 0")
        return EXIT_MALFORMED
    w = check_window(mu, k, E0)
    print(f"alpha_limit={alpha_limit(mu, k)!r}")
    print(f"beta_limit={beta_limit(mu, k, E0)!r}")
    print(f"beta_closure_limit={beta_closure_limit(mu, k)!r}")
    print(f"window_E0sq=({w.lower!r}, {w.upper!r}) E0sq={E0 * E0!r} ok={str(w.ok).lower()}")
    return EXIT_OK


def run_orbit(profile_csv: str, r0: float, w0: float, F: float, span: float,
              out: str | None = None) -> int:
    import numpy as np

    from .characteristics import FieldInterpolant, OrbitState, integrate_orbit
    from .solver import ExteriorField, RadialProfile, SolverNumerics
    from .special_functions import PolytropicAnsatz

    try:
        cols = read_profile_csv(profile_csv)
    except MalformedInput as exc:
        log.error("malformed input: %s", exc)
        return EXIT_MALFORMED
    except OSError as exc:
        log.error("cannot read input: %s", exc)
        return EXIT_IO
    # the field alone fixes the orbits; the exterior continues the last node in vacuum
    placeholder = PolytropicAnsatz(k=0.0, mu=0.0, E0=1.0, amplitude=0.0)
    prof = RadialProfile(grid=cols["r"], phi=cols["phi"], dphi=cols["dphi"],
                         phi0=float(cols["phi"][0]), ansatz=placeholder,
                         numerics=SolverNumerics(), delta=0.0, radius=None, status="stored")
    R = float(cols["r"][-1])
    C = R * R * float(cols["dphi"][-1])
    ext = ExteriorField(R=R, C=C, phi_inf=float(cols["phi"][-1]) + C / R)
    try:
        tr = integrate_orbit(prof, OrbitState(r0, w0, F), span,
                             field=FieldInterpolant(prof, ext))
    except SOLVER_ERRORS as exc:
        log.error("orbit failed: %s", exc)
        return EXIT_SOLVER
    rows = [[float(s), float(r), float(w), tr.F, float(e)]
            for s, r, w, e in zip(tr.s, tr.r, tr.w, tr.energy)]
    header = ("s", "r", "w", "F", "energy")
    try:
        if out:
            created: list = []
            with atomic_writer(Path(out), created) as fh:
                write_table(fh, header, rows)
        else:
            write_table(sys.stdout, header, rows)
    except OSError as exc:
        log.error("cannot write orbit: %s", exc)
        return EXIT_IO
    print(f"# energy drift {tr.energy_drift:.3e}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nvsteady",
                                description="Static spherically symmetric steady states.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", help="solve one configuration")
    s.add_argument("config")
    s = sub.add_parser("scan", help="solve every tuple of the [scan] ranges")
    s.add_argument("config")
    s.add_argument("--jobs", type=int, default=None)
    s = sub.add_parser("verify", help="re-check a stored profile")
    s.add_argument("profile")
    s.add_argument("summary")
    s = sub.add_parser("limits", help="boundary limits and the E0 window")
    s.add_argument("--mu", type=float, required=True)
    s.add_argument("--k", type=float, required=True)
    s.add_argument("--E0", type=float, required=True)
    s = sub.add_parser("orbit", help="integrate one characteristic in a stored field")
    s.add_argument("profile")
    s.add_argument("--r0", type=float, required=True)
    s.add_argument("--w0", type=float, required=True)
    s.add_argument("--F", type=float, required=True)
    s.add_argument("--span", type=float, required=True)
    s.add_argument("--out", default=None)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if args.command in ("solve", "scan"):
        try:
            cfg = _load(args.config)
        except ConfigError as exc:
            log.error("%s: %s", args.config, exc)
            return EXIT_MALFORMED
        except (OSError, UnicodeDecodeError) as exc:
            log.error("cannot read config: %s", exc)
            return EXIT_IO
        if args.command == "solve":
            if cfg.scan:
                log.warning("[scan] section ignored by solve")
            return run_solve(cfg.with_overrides())
        return run_scan(cfg, args.jobs)
    if args.command == "verify":
        return run_verify(args.profile, args.summary)
    if args.command == "limits":
        return run_limits(args.mu, args.k, args.E0)
    return run_orbit(args.profile, args.r0, args.w0, args.F, args.span, args.out)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
