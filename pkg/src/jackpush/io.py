"""Bit-stable serialization for reports, tables and paths."""
from __future__ import annotations

import csv
import json
import math
import os
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np


def _num(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = format(x, ".17g")
    # keep floats recognisable as floats after a round trip
    if all(c not in s for c in ".en"):
        s += ".0"
    return s


def dumps_stable(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON with sorted keys and floats written with 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps_stable(obj[k], indent, _level + 1)}" for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + dumps_stable(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, np.ndarray):
        return dumps_stable(obj.tolist(), indent, _level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    return json.dumps(str(obj))


def _flatten(obj: Any, prefix: str = "") -> Iterable[tuple[str, Any]]:
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        for k in sorted(obj, key=str):
            yield from _flatten(obj[k], f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, obj


def _cell(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return "" if v is None else str(v)


def write_csv(path: str | os.PathLike | None, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    """CSV with fixed float formatting; ``path=None`` or ``"-"`` writes to stdout."""
    import sys

    if path in (None, "-"):
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(v) for v in r])
        return
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(v) for v in r])


def write_text(path: str | os.PathLike | None, text: str) -> None:
    import sys

    if path in (None, "-"):
        sys.stdout.write(text)
        return
    Path(path).write_text(text)


def emit_report(report, fmt: str = "json", path: str | os.PathLike | None = None) -> None:
    """Serialize a report (anything with ``to_dict``, or a plain dict).

    JSON output is pretty-printed with sorted keys; CSV output is a flattened
    ``key,value`` table.
    """
    data = report.to_dict() if hasattr(report, "to_dict") else report
    if fmt == "json":
        write_text(path, dumps_stable(data) + "\n")
    elif fmt == "csv":
        write_csv(path, ["key", "value"], _flatten(data))
    else:
        raise ValueError(f"unknown format {fmt!r}")


def update_index(index_path: str | os.PathLike, report, report_path: str | os.PathLike) -> None:
    """Add or replace the entry for ``report_path`` in a JSON run index."""
    p = Path(index_path)
    entries = json.loads(p.read_text()) if p.exists() else []
    data = report.to_dict() if hasattr(report, "to_dict") else report
    entry = {
        "name": data.get("name"),
        "parameters": data.get("parameters", {}),
        "passed": data.get("passed"),
        "path": str(report_path),
    }
    entries = [e for e in entries if e.get("path") != str(report_path)] + [entry]
    entries.sort(key=lambda e: e["path"])
    p.write_text(dumps_stable(entries) + "\n")
