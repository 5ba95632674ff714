"""Serialisation of analysis results: JSON reports, CSV tables, DOT graphs."""
from __future__ import annotations

import csv
import io
import json
import math
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__

REPORT_VERSION = 1


def plain(obj):
    """Recursively convert to JSON-safe values; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def build_report(command: str, config: dict | None, status: str, exit_code: int, result=None,
                 error: str | None = None) -> dict:
    return {
        "report_version": REPORT_VERSION,
        "code_version": __version__,
        "command": command,
        "config": config,
        "status": status,
        "exit_code": exit_code,
        "result": result,
        "error": error,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def dumps(report: dict) -> str:
    return json.dumps(plain(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def strip_timestamp(text: str) -> dict:
    doc = json.loads(text)
    doc.pop("timestamp", None)
    return doc


def write_new(path: Path, text: str, overwrite: bool) -> None:
    """Write ``text``; refuse to replace an existing file unless ``overwrite``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "w" if overwrite else "x"
    with path.open(mode) as fh:
        fh.write(text)


def csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(c) for c in row])
    return buf.getvalue()


def _cell(c):
    c = plain(c)
    if isinstance(c, (list, dict)):
        return json.dumps(c, separators=(",", ":"))
    if isinstance(c, float):
        return repr(c)
    return c


def envelope_rows_1d(env):
    return [(k, v) for k, v in env.breakpoints()]


def envelope_rows_2d(env):
    return [(s, t, v) for (s, t), v in env.breakpoints()]


def profile_dot(profile) -> str:
    """Refinement graph: one node per cell, one edge per cross-radius link."""
    lines = ["digraph refinement {", "  rankdir=LR;"]
    for n in profile.ns:
        tag = f"n{n:g}".replace(".", "_")
        lines.append(f"  subgraph cluster_{tag} {{")
        lines.append(f'    label="n={n:g}";')
        for i in range(len(profile.radii)):
            for ci, cell in enumerate(profile.cells[(i, n)]):
                rep = json.dumps(plain(cell.representative)).replace('"', "'")
                lines.append(f'    {tag}_r{i}_c{ci} [label="R={profile.radii[i]:g}\\n{rep}\\nsize={cell.size}"];')
        for (i, a), (j, b) in profile.links[n]:
            lines.append(f"    {tag}_r{i}_c{a} -> {tag}_r{j}_c{b};")
        lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"
