"""Deterministic JSON and CSV rendering.

Floats are written with 17 significant digits so every double round-trips.
Infinities are written as the strings ``"inf"`` / ``"-inf"``.
"""

import csv
import io
import json
import math
import numbers

import numpy as np


def format_float(x):
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return "%.17g" % x


def _emit(obj, out):
    if obj is None or isinstance(obj, (bool, np.bool_)):
        out.append("null" if obj is None else ("true" if obj else "false"))
    elif isinstance(obj, numbers.Integral):
        out.append(str(int(obj)))
    elif isinstance(obj, numbers.Real):
        x = float(obj)
        out.append(json.dumps(format_float(x)) if not math.isfinite(x) else format_float(x))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(", ")
            out.append(json.dumps(str(k)))
            out.append(": ")
            _emit(v, out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for i, v in enumerate(obj.tolist() if isinstance(obj, np.ndarray) else obj):
            if i:
                out.append(", ")
            _emit(v, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj):
    """Single-line JSON text for ``obj``."""
    out = []
    _emit(obj, out)
    return "".join(out)


def document(payload, manifest):
    """JSON document embedding its run manifest."""
    return dumps({"manifest": manifest, "result": payload}) + "\n"


def csv_text(header, rows, manifest):
    """CSV with a leading ``# {manifest}`` comment line."""
    buf = io.StringIO()
    buf.write("# " + dumps(manifest) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, numbers.Integral):
        return str(int(v))
    if isinstance(v, numbers.Real):
        return format_float(v)
    return str(v)


def read_csv(text):
    """Parse CSV produced by :func:`csv_text` into ``(manifest, header, rows)``."""
    lines = text.splitlines()
    manifest = None
    if lines and lines[0].startswith("# "):
        manifest = json.loads(lines[0][2:])
        lines = lines[1:]
    reader = csv.reader(lines)
    header = next(reader)
    return manifest, header, list(reader)
