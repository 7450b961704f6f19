"""Deterministic CSV/JSON table writing.

Floats are serialized with 17 significant digits so files round-trip
exactly and identical configs produce byte-identical outputs.  CSV carries
the run metadata as leading '# key=value' comment lines; JSON nests it
under "meta".
"""

from __future__ import annotations

import csv
import io
import os
from typing import Mapping, Sequence

Value = None | bool | int | float | str


def format_value(v: Value) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _json_scalar(v: Value) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return f"{v:.17g}"
    s = v.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{s}"'


def render_csv(meta: Mapping[str, Value], header: Sequence[str],
               rows: Sequence[Sequence[Value]]) -> str:
    buf = io.StringIO()
    for k, v in meta.items():
        buf.write(f"# {k}={format_value(v)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def render_json(meta: Mapping[str, Value], header: Sequence[str],
                rows: Sequence[Sequence[Value]]) -> str:
    out = ["{\n  \"meta\": {\n"]
    items = list(meta.items())
    for i, (k, v) in enumerate(items):
        comma = "," if i < len(items) - 1 else ""
        out.append(f"    {_json_scalar(str(k))}: {_json_scalar(v)}{comma}\n")
    out.append("  },\n  \"rows\": [\n")
    for i, row in enumerate(rows):
        cells = ", ".join(f"{_json_scalar(h)}: {_json_scalar(v)}"
                          for h, v in zip(header, row))
        comma = "," if i < len(rows) - 1 else ""
        out.append("    {" + cells + "}" + comma + "\n")
    out.append("  ]\n}\n")
    return "".join(out)


def write_table(path: str, meta: Mapping[str, Value], header: Sequence[str],
                rows: Sequence[Sequence[Value]], fmt: str) -> None:
    """Atomically write the table; no partial file survives a failure."""
    if fmt == "csv":
        text = render_csv(meta, header, rows)
    elif fmt == "json":
        text = render_json(meta, header, rows)
    else:
        raise ValueError(f"unknown output format {fmt!r}")
    tmp = path + ".tmp"
    try:
        with open(tmp, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)
