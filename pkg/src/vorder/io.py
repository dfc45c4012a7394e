"""Deterministic CSV and JSON output, written atomically."""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

DIGITS = 17


def fmt(x) -> str:
    """Fixed 17-significant-digit text for a real number."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.{DIGITS}g}"


def plain(obj):
    """Convert numpy and complex values into JSON-ready builtins."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": plain(obj.real), "im": plain(obj.imag)}
    if isinstance(obj, np.generic):
        return plain(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return fmt(obj)
    if hasattr(obj, "to_dict"):
        return plain(obj.to_dict())
    return obj


def atomic_write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else
                              str(v) if isinstance(v, (int, np.integer)) else fmt(v)
                              for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path, header, rows) -> Path:
    return atomic_write(path, csv_text(header, rows))


def json_text(obj) -> str:
    # repr of a float is its shortest round-trip form; at most 17 digits
    return json.dumps(plain(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj) -> Path:
    return atomic_write(path, json_text(obj))


def flux_rows(trace, directions=None):
    """Rows ``(direction_index, omega_x, omega_y, value_re, value_im)``."""
    rows = []
    for j, v in enumerate(trace.values):
        w = directions[j] if directions is not None and j < len(directions) else (math.nan, math.nan)
        rows.append((j, w[0], w[1], v.real, v.imag))
    return rows


FLUX_HEADER = ("direction_index", "omega_x", "omega_y", "value_re", "value_im")
PAIRING_HEADER = ("p", "pairing_re", "pairing_im")
TRACE_HEADER = ("R", "log_abs_W", "log_abs_model")
ORACLE_HEADER = ("case_id", "value_re", "value_im", "est_error")
