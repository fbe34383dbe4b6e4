"""CSV and JSON output for benchmark reports.

JSON holds a list of report objects with fields in declaration order. CSV
holds one row per report; nested mappings are flattened to dotted columns
(``latency_ns.p99``, ``action_counts.expand_scale``, ``error_histogram.3``)
and the header is the union of columns in first-seen order.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, is_dataclass


def _as_dict(report) -> dict:
    if is_dataclass(report):
        return asdict(report)
    return dict(report)


def flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        name = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(flatten(v, name + "."))
        elif isinstance(v, (list, tuple)):
            out[name] = json.dumps(v)
        else:
            out[name] = v
    return out


def render(reports, fmt: str) -> str:
    rows = [_as_dict(r) for r in (reports if isinstance(reports, (list, tuple)) else [reports])]
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    if fmt == "csv":
        flat = [flatten(r) for r in rows]
        header = list(dict.fromkeys(k for r in flat for k in r))
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
        w.writeheader()
        w.writerows(flat)
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r}")


def emit_report(reports, fmt: str = "json", path=None) -> str:
    """Write ``reports`` to ``path`` (if given) and return the text."""
    text = render(reports, fmt)
    if path is not None:
        with open(path, "w") as f:
            f.write(text)
    return text
