"""Serialized run outputs: CSV and JSON tables, JSON documents.

CSV files open with ``#`` comment lines carrying the schema version, command,
seed and the fully resolved configuration, followed by the fixed header.
Floats are written with 17 significant digits.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Iterable, Sequence

from .config import SCHEMA_VERSION, RunConfig

RATE_COLUMNS = ("theta_a", "theta_b", "theta_c", "rate")
COUNT_COLUMNS = RATE_COLUMNS + ("n_emitted", "n_coincidence", "seed")


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def rate_row(angles: Sequence[float], rate: float) -> dict:
    theta = list(angles) + [None] * (3 - len(angles))
    return dict(zip(RATE_COLUMNS, theta + [rate]))


def count_row(angles: Sequence[float], rate: float, n_emitted: int, n_coincidence: int, seed: int) -> dict:
    row = rate_row(angles, rate)
    row.update(n_emitted=n_emitted, n_coincidence=n_coincidence, seed=seed)
    return row


def metadata(command: str, config: RunConfig) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "seed": config.seed,
        "config": _reproducible_document(config),
    }


def _reproducible_document(config: RunConfig) -> dict:
    # where the artifact was written does not affect what it contains
    doc = config.to_document()
    doc["output"].pop("path", None)
    return doc


def render_csv(rows: Iterable[dict], columns: Sequence[str], meta: dict) -> str:
    buf = io.StringIO()
    buf.write(f"# schema_version: {meta['schema_version']}\n")
    buf.write(f"# command: {meta['command']}\n")
    buf.write(f"# seed: {meta['seed']}\n")
    buf.write(f"# config: {json.dumps(meta['config'], sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row[c]) for c in columns])
    return buf.getvalue()


def _jsonable(value):
    if isinstance(value, float) and not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def render_json(document: dict) -> str:
    return json.dumps(_jsonable(document), indent=2) + "\n"


def render_table_json(rows: Iterable[dict], columns: Sequence[str], meta: dict) -> str:
    doc = dict(meta)
    doc["columns"] = list(columns)
    doc["rows"] = [{c: row[c] for c in columns} for row in rows]
    return render_json(doc)
