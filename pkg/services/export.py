# services/export.py

from __future__ import annotations

import csv
import io
import json
from typing import Dict, Iterable, List, Optional

from bound_curves import CURVE_COLUMNS, CurveSample
from helpers import format_sig, parse_float_or_none, round_sig

JSON_DIGITS = 15
CSV_DIGITS = 17

CURVE_HEADERS: List[str] = ["x"] + list(CURVE_COLUMNS.values())
EXPERIMENT_HEADERS: List[str] = ["seed", "dim", "ratio", "measured", "bound", "slack"]


def _round_tree(value, digits: int):
    if isinstance(value, dict):
        return {k: _round_tree(v, digits) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round_tree(v, digits) for v in value]
    return round_sig(value, digits)


def to_json(payload: Dict, digits: int = JSON_DIGITS) -> str:
    """Serialize with every float rounded to `digits` significant digits."""
    return json.dumps(_round_tree(payload, digits), indent=2, allow_nan=False)


def error_envelope(code: str, message: str) -> Dict:
    return {"ok": False, "error": {"code": code, "message": message}}


def build_curve_row(sample: CurveSample) -> Dict[str, str]:
    row = {h: "" for h in CURVE_HEADERS}
    row["x"] = format_sig(sample.x, CSV_DIGITS)
    for kind, column in CURVE_COLUMNS.items():
        row[column] = format_sig(sample.values.get(kind), CSV_DIGITS)
    return row


def emit_curve_csv(samples: Iterable[CurveSample]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CURVE_HEADERS, lineterminator="\n")
    writer.writeheader()
    for sample in samples:
        writer.writerow(build_curve_row(sample))
    return buf.getvalue()


def parse_curve_csv(text: str) -> List[Dict[str, Optional[float]]]:
    """
    Read back a curve CSV. Empty cells become None.
    Raises ValueError when the header does not match.
    """
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != CURVE_HEADERS:
        raise ValueError(f"unexpected curve header {reader.fieldnames!r}")
    return [{h: parse_float_or_none(row.get(h)) for h in CURVE_HEADERS} for row in reader]


def emit_experiment_csv(rows: Iterable[Dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=EXPERIMENT_HEADERS, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (format_sig(v, CSV_DIGITS) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()
