"""Report writing with stable, round-trip-exact number formatting."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np


class ReportWriteError(OSError):
    pass


def _clean(obj):
    """Convert numpy scalars/arrays to plain Python and non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def format_number(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, str):
        return v
    return repr(float(v))


def dumps_csv(header, rows, comment: str | None = None) -> str:
    lines = []
    if comment is not None:
        lines.append("# " + comment)
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(format_number(v) for v in row))
    return "\n".join(lines) + "\n"


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise ReportWriteError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_report(results, path) -> None:
    """Write ``results`` to ``path``: JSON for ``.json``, CSV for ``.csv``.

    CSV results are ``{"header": [...], "rows": [[...], ...]}`` with an
    optional ``"comment"`` line.
    """
    path = Path(path)
    if path.suffix == ".csv":
        text = dumps_csv(results["header"], results["rows"], results.get("comment"))
    else:
        text = dumps_json(results)
    _write_text(path, text)


def read_csv_column(path, column: int = 0) -> np.ndarray:
    """Numbers from one column of a CSV; a non-numeric first row is a header."""
    values = []
    first = True
    try:
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                try:
                    values.append(float(line.split(",")[column]))
                except ValueError:
                    if not first:
                        raise
                first = False
    except OSError as exc:
        raise ReportWriteError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return np.asarray(values)
