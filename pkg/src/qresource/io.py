"""Matrix files, JSON reports and CSV tables.

Matrix files are JSON objects ``{"dim": d, "data": [[re, im], ...]}`` with
``d²`` entries in row-major order. Reports are written with sorted keys and a
fixed float format so identical runs give identical bytes (apart from the
``timings`` block), and every file is written atomically.
"""

import csv
import io
import json
import math
import os
import tempfile

import numpy as np

from .errors import ValidationError
from .linalg import as_density, as_hermitian


def matrix_to_dict(x):
    x = np.asarray(x, dtype=complex)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {x.shape}")
    return {"dim": int(x.shape[0]), "data": [[float(z.real), float(z.imag)] for z in x.reshape(-1)]}


def matrix_from_dict(obj, name="matrix"):
    """Parse the matrix format; rejects bad shapes and non-Hermitian input."""
    if not isinstance(obj, dict) or "dim" not in obj or "data" not in obj:
        raise ValidationError(f"{name}: expected an object with 'dim' and 'data'")
    d = obj["dim"]
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise ValidationError(f"{name}: 'dim' must be a positive integer")
    data = obj["data"]
    if not isinstance(data, list) or len(data) != d * d:
        raise ValidationError(f"{name}: 'data' must hold dim² = {d * d} entries")
    try:
        arr = np.array(data, dtype=float)
    except (TypeError, ValueError):
        raise ValidationError(f"{name}: entries must be [re, im] number pairs") from None
    if arr.shape != (d * d, 2) or not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name}: entries must be finite [re, im] pairs")
    x = (arr[:, 0] + 1j * arr[:, 1]).reshape(d, d)
    return as_hermitian(x, name=name)


def load_matrix(path, state=True):
    """Read a matrix file; ``state=True`` also validates a density operator."""
    name = os.path.basename(str(path))
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{name}: not valid JSON ({exc.msg})") from None
    x = matrix_from_dict(obj, name=name)
    return as_density(x, name=name) if state else x


def save_matrix(path, x):
    atomic_write(path, json.dumps(matrix_to_dict(x), indent=1) + "\n")


def _clean(obj):
    """Convert numpy types and non-finite floats into plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj) and obj.ndim == 2:
            return _clean(matrix_to_dict(obj))
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return float(f"{v:.12g}")
    if isinstance(obj, complex):
        return [_clean(obj.real), _clean(obj.imag)]
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def dumps_report(report):
    """Deterministic JSON text (sorted keys, 12 significant digits)."""
    return json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"


def atomic_write(path, text):
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = os.path.abspath(str(path))
    folder = os.path.dirname(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    except OSError as exc:
        raise ValidationError(f"cannot write to {folder}: {exc.strerror}") from None
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise ValidationError(f"cannot write {path}: {exc.strerror}") from None


def table_to_csv(columns, rows):
    """CSV text with a header row; ``rows`` are dicts keyed by column name."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_clean(row[c]) for c in columns])
    return buf.getvalue()


def write_csv(path, columns, rows):
    atomic_write(path, table_to_csv(columns, rows))
