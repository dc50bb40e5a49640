"""CSV/JSON writers for flat row tables.

Floats are written with 17 significant digits so that re-parsing recovers
them bit for bit; NaN becomes an empty CSV field and JSON ``null``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, Mapping

FORMATS = ("csv", "json")


def format_float(x: float) -> str:
    return format(x, ".17g")


def _cell(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return "" if math.isnan(v) else format_float(v)
    if v is None:
        return ""
    return str(v)


def _json_value(v) -> str:
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, float):
        if not math.isfinite(v):
            return "null"
        return format_float(v)
    if isinstance(v, int):
        return str(v)
    return json.dumps(str(v))


def to_csv(rows: list[Mapping]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = list(rows[0])
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(row[k]) for k in header])
    return buf.getvalue()


def to_json(rows: Iterable[Mapping]) -> str:
    objs = []
    for row in rows:
        fields = ", ".join(f"{json.dumps(str(k))}: {_json_value(v)}" for k, v in row.items())
        objs.append("  {" + fields + "}")
    return "[\n" + ",\n".join(objs) + "\n]\n"


def render(rows: list[Mapping], fmt: str) -> str:
    if fmt == "csv":
        return to_csv(rows)
    if fmt == "json":
        return to_json(rows)
    raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")


def write_table(rows: list[Mapping], fmt: str, out: str | Path | None = None) -> str:
    text = render(rows, fmt)
    if out is None:
        return text
    with open(out, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(text)
    return text
