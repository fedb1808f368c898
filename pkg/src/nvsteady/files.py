"""Profile CSV and summary document reading and writing.

Floats are written in shortest round-trip form (``repr``), so a file read
back reproduces the in-memory values bit for bit.
"""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

PROFILE_COLUMNS = ("r", "phi", "dphi", "rho", "P", "PT", "source", "mass_cum",
                   "eta", "x", "y", "alpha", "beta")
DIAGNOSTIC_COLUMNS = ("eta", "x", "y", "alpha", "beta")


class MalformedInput(ValueError):
    """A file that cannot have been produced by this tool."""


def fmt_float(value) -> str:
    if value is None:
        return ""
    value = float(value)
    if math.isnan(value):
        return "nan"
    return repr(value)


@contextmanager
def atomic_writer(path: Path, created: list):
    """Write to a sibling temporary file and move it into place on success."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent if str(path.parent) else ".",
                               prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            yield fh
        os.replace(tmp, path)
        created.append(path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def profile_rows(profile, obs, diag=None) -> Iterable[list]:
    """One row of strings per node, diagnostics blank where not defined."""
    diag_at = {}
    if diag is not None:
        for j, i in enumerate(diag.index):
            diag_at[int(i)] = (diag.eta[j], diag.x[j], diag.y[j], diag.alpha[j], diag.beta[j])
    for i in range(profile.grid.size):
        row = [profile.grid[i], profile.phi[i], profile.dphi[i], obs.rho[i], obs.pressure[i],
               obs.pressure_t[i], obs.source[i], obs.mass_cumulative[i]]
        extra = diag_at.get(i)
        yield [fmt_float(v) for v in row] + ([fmt_float(v) for v in extra] if extra
                                              else [""] * len(DIAGNOSTIC_COLUMNS))


def write_profile_csv(fh, profile, obs, diag=None) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(PROFILE_COLUMNS)
    writer.writerows(profile_rows(profile, obs, diag))


def read_profile_csv(path: Path | str) -> dict:
    """Columns of a profile CSV as float arrays (blank cells become NaN)."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except UnicodeDecodeError as exc:
        raise MalformedInput(f"{path}: not a text file") from exc
    if not rows:
        raise MalformedInput(f"{path}: empty file")
    header = tuple(c.strip() for c in rows[0])
    if header != PROFILE_COLUMNS:
        raise MalformedInput(f"{path}: unexpected header {','.join(header)!r}")
    body = rows[1:]
    if len(body) < 2:
        raise MalformedInput(f"{path}: needs at least two data rows")
    data = np.empty((len(body), len(PROFILE_COLUMNS)))
    for n, row in enumerate(body, start=2):
        if len(row) != len(PROFILE_COLUMNS):
            raise MalformedInput(f"{path}:{n}: expected {len(PROFILE_COLUMNS)} fields")
        for j, cell in enumerate(row):
            if cell == "":
                if PROFILE_COLUMNS[j] not in DIAGNOSTIC_COLUMNS:
                    raise MalformedInput(f"{path}:{n}: empty {PROFILE_COLUMNS[j]}")
                data[n - 2, j] = math.nan
                continue
            try:
                data[n - 2, j] = float(cell)
            except ValueError:
                raise MalformedInput(f"{path}:{n}: bad number {cell!r}") from None
    cols = {name: data[:, j].copy() for j, name in enumerate(PROFILE_COLUMNS)}
    core = np.column_stack([cols[c] for c in PROFILE_COLUMNS if c not in DIAGNOSTIC_COLUMNS])
    if not np.all(np.isfinite(core)):
        raise MalformedInput(f"{path}: non-finite value in a required column")
    if cols["r"][0] != 0.0 or np.any(np.diff(cols["r"]) <= 0.0):
        raise MalformedInput(f"{path}: radii must start at 0 and increase strictly")
    return cols


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else None
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_summary(fh, summary: dict) -> None:
    json.dump(_jsonable(summary), fh, sort_keys=True, indent=2, allow_nan=False)
    fh.write("\n")


def read_summary(path: Path | str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedInput(f"{path}: not a summary document ({exc})") from None
    if not isinstance(data, dict) or "ansatz" not in data or "summary" not in data:
        raise MalformedInput(f"{path}: missing 'ansatz' or 'summary' block")
    return data


def write_table(fh, header: Iterable[str], rows: Iterable[Iterable]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(list(header))
    for row in rows:
        writer.writerow([fmt_float(v) if isinstance(v, (float, np.floating)) or v is None
                         else str(v) for v in row])


def remove_quietly(paths: Iterable[Optional[Path]]) -> None:
    for p in paths:
        if p is None:
            continue
        try:
            os.unlink(p)
        except OSError:
            pass
