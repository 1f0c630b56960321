"""Dataset ingestion and machine-readable outputs.

Input files are plain text or CSV with one observation per line/row; a
non-numeric first row is treated as a header.  Outputs are a versioned
JSON summary (always echoing the configuration and seed, so any run can
be replayed) and optional CSV grids.  Identical inputs and seed produce
byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .datasets import BUILTINS, load_builtin
from .errors import DataError
from .stepwise import RegressionData

SCHEMA_VERSION = 1


def _parse_rows(path: Path) -> list[list[str]]:
    text = path.read_text()
    if not text.strip():
        raise DataError(f"{path}: file is empty")
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            rows.append(None)
            continue
        rows.append([cell.strip() for cell in line.split(",")])
    return rows


def _is_numeric(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def load_values(source: str | Path) -> np.ndarray:
    """One real observation per line (or single-column CSV rows).

    Built-in dataset names are accepted in place of a path.  Parse
    failures report their line number; non-finite values are rejected.
    """
    if isinstance(source, str) and source in BUILTINS:
        return load_builtin(source)
    path = Path(source)
    if not path.exists():
        raise DataError(f"no such input: {source}")
    rows = _parse_rows(path)
    values = []
    start = 0
    first = next((r for r in rows if r is not None), None)
    if first is not None and not all(_is_numeric(c) for c in first):
        start = rows.index(first) + 1      # header row
    for lineno, row in enumerate(rows[start:], start=start + 1):
        if row is None:
            continue
        for cell in row:
            try:
                v = float(cell)
            except ValueError:
                raise DataError(f"line {lineno}: cannot parse {cell!r} as a number")
            if not np.isfinite(v):
                raise DataError(f"line {lineno}: non-finite value {cell!r}")
            values.append(v)
    if not values:
        raise DataError(f"{path}: no observations found")
    return np.array(values)


def load_counts(source: str | Path) -> np.ndarray:
    values = load_values(source)
    counts = values.astype(np.int64)
    if not np.array_equal(counts, values):
        raise DataError("count data must be integers")
    if np.any(counts < 0):
        raise DataError("count data must be nonnegative")
    return counts


def load_regression(source: str | Path, response: str) -> RegressionData:
    """CSV with a header row; ``response`` names the dependent column."""
    path = Path(source)
    if not path.exists():
        raise DataError(f"no such input: {source}")
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        table = [row for row in reader if row and any(cell.strip() for cell in row)]
    if len(table) < 2:
        raise DataError(f"{path}: need a header row and data rows")
    header = [cell.strip() for cell in table[0]]
    if response not in header:
        raise DataError(f"response column {response!r} not in header {header}")
    ridx = header.index(response)
    data = np.empty((len(table) - 1, len(header)))
    for i, row in enumerate(table[1:], start=2):
        if len(row) != len(header):
            raise DataError(f"line {i}: expected {len(header)} cells, got {len(row)}")
        for j, cell in enumerate(row):
            try:
                data[i - 2, j] = float(cell)
            except ValueError:
                raise DataError(f"line {i}: cannot parse {cell.strip()!r} as a number")
    if not np.all(np.isfinite(data)):
        raise DataError("regression data contains non-finite values")
    design = np.delete(data, ridx, axis=1)
    labels = [h for k, h in enumerate(header) if k != ridx]
    return RegressionData.from_arrays(data[:, ridx], design, labels)


# ------------------------------------------------------------------ #
# Outputs
# ------------------------------------------------------------------ #


def write_json(path: str | Path, payload: dict) -> None:
    body = dict(payload)
    body["schema_version"] = SCHEMA_VERSION
    Path(path).write_text(json.dumps(body, indent=2, sort_keys=True,
                                     allow_nan=True) + "\n")


def write_points_csv(path: str | Path, columns: list[str], arrays) -> None:
    with Path(path).open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in zip(*arrays):
            writer.writerow([repr(float(v)) for v in row])


def write_region_csv(path: str | Path, region) -> None:
    write_points_csv(path, ["mu", "sigma", "p1", "p2", "p3", "p4", "p_min"],
                     [region.mu, region.sigma,
                      region.pvalues[:, 0], region.pvalues[:, 1],
                      region.pvalues[:, 2], region.pvalues[:, 3], region.p_min])


def write_m_region_csv(path: str | Path, region) -> None:
    write_points_csv(path, ["t_l", "t_s", "psi_stat", "chi_stat"],
                     [region.t_l, region.t_s, region.psi_stat, region.chi_stat])


def write_sweep_csv(path: str | Path, rows) -> None:
    with Path(path).open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["value", "region_p", "p_star", "point_count", "p_of_p"])
        for row in rows:
            writer.writerow([repr(float(row.value)), repr(float(row.region_p)),
                             repr(float(row.p_star)), row.point_count,
                             "" if row.p_of_p is None else repr(float(row.p_of_p))])
