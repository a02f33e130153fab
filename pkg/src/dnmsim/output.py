"""Serialization of experiment results: CSV tables and JSON summaries.

CSV files are RFC-4180 (CRLF line endings, minimal quoting) with one header
row naming each column and its unit in brackets.  Floats are rendered with
``repr``, the shortest string that round-trips to the identical double, so
re-reading a table reproduces it bit-for-bit and re-running an identical
configuration rewrites identical bytes.  Timestamps live only in the JSON
summary, never in CSV, to keep the tables byte-stable.
"""

from __future__ import annotations

import csv
import json
import os
from typing import Iterable, Mapping, Optional, Sequence

from .errors import ParameterError
from .experiments import ExperimentResult

__all__ = [
    "column_header",
    "write_csv",
    "read_csv",
    "write_json_summary",
    "write_failure_manifest",
    "result_csv_path",
]

#: Units for known column names; anything else is dimensionless ("1").
#: Time-like columns are in cavity periods (1/omega_R); rates in omega_R.
COLUMN_UNITS = {
    "t": "1/omega_R",
    "g": "omega_R",
    "omega_r": "omega_R",
    "omega_q": "omega_R",
    "gamma_r": "omega_R",
    "gamma_q": "omega_R",
    "mu_q": "omega_R",
    "drive_q.frequency": "omega_R",
    "drive_c.frequency": "omega_R",
    "drive_q.amplitude": "omega_R",
    "drive_c.amplitude": "omega_R",
    "frequency_at_min": "omega_R",
    "frequency_at_max": "omega_R",
    "amplitude_at_min": "omega_R",
    "amplitude_at_max": "omega_R",
}


def column_header(name: str) -> str:
    """Column title with its unit, e.g. ``t [1/omega_R]``."""
    return f"{name} [{COLUMN_UNITS.get(name, '1')}]"


def strip_header(header: str) -> str:
    """Inverse of :func:`column_header`: drop the bracketed unit."""
    return header.rsplit(" [", 1)[0] if header.endswith("]") else header


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, int):
        return str(value)
    return str(value)


def write_csv(path: str, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    """One table to RFC-4180 CSV with a units header row."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow([column_header(c) for c in columns])
        for row in rows:
            writer.writerow([_format_cell(v) for v in row])


def read_csv(path: str):
    """Read a table back: (bare column names, rows of floats-or-strings)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParameterError(f"{path} is empty; expected a header row") from None
        columns = [strip_header(h) for h in header]
        rows = []
        for raw in reader:
            row = []
            for cell in raw:
                try:
                    row.append(float(cell))
                except ValueError:
                    row.append(cell)
            rows.append(tuple(row))
    return columns, rows


def _json_safe(value):
    if isinstance(value, Mapping):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, (bool, int, float, str)) or value is None:
        return value
    return str(value)


def write_json_summary(
    path: str,
    result: ExperimentResult,
    *,
    extra: Optional[Mapping] = None,
) -> None:
    """Scalar outcomes, axes, provenance, and failures as one JSON document."""
    doc = {
        "tag": result.tag,
        "scalars": _json_safe(result.scalars),
        "axes": _json_safe(dict(result.axes)),
        "provenance": _json_safe(dict(result.provenance)),
        "failures": [
            {"coordinates": _json_safe(f.coordinates), "message": f.message}
            for f in result.failures
        ],
        "columns": list(result.columns),
        "n_rows": len(result.rows),
    }
    if extra:
        doc.update(_json_safe(extra))
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_failure_manifest(path: str, result: ExperimentResult) -> None:
    """Machine-readable list of failed grid points."""
    doc = {
        "tag": result.tag,
        "n_failed": len(result.failures),
        "failures": [
            {"coordinates": _json_safe(f.coordinates), "message": f.message}
            for f in result.failures
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def result_csv_path(outdir: str, tag: str) -> str:
    return os.path.join(outdir, f"{tag}.csv")
