"""Deterministic artifact IO.

Binary grids: fixed little-endian header (region, nx, ny, tol, iter_budget)
followed by row-major float64 payload, then a JSON provenance trailer behind a
marker so readers of the raw layout can ignore it. CSV and JSON emit floats
with 17 significant digits; no timestamps or locale anywhere, so identical
inputs give byte-identical files.
"""

import hashlib
import json
import struct

import numpy as np

from . import __version__
from .errors import StaleInput

TRAILER_MARK = b"\n#BIFLAB-META#\n"

_HEADER = struct.Struct("<ddddqqdq")  # re0 im0 re1 im1 nx ny tol iter_budget


def fmt_float(x):
    x = float(x)
    if np.isnan(x):
        return "nan"
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _json_scalar(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        f = fmt_float(v)
        return f'"{f}"' if f in ("nan", "inf", "-inf") else f
    if v is None:
        return "null"
    return json.dumps(str(v))


def json_dumps(obj, indent=0):
    """Minimal deterministic JSON emitter (17 significant digit floats)."""
    pad = " " * indent
    inner = " " * (indent + 2)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{inner}{json.dumps(str(k))}: {json_dumps(v, indent + 2)}'
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        items = [f"{inner}{json_dumps(v, indent + 2)}" for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    return _json_scalar(obj)


def write_json(path, obj):
    with open(path, "w", newline="\n") as fh:
        fh.write(json_dumps(obj))
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def sha256_bytes(data):
    return hashlib.sha256(data).hexdigest()


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def grid_to_bytes(region, nx, ny, tol, iter_budget, values, meta):
    re0, im0, re1, im1 = region
    head = _HEADER.pack(re0, im0, re1, im1, int(nx), int(ny), float(tol),
                        int(iter_budget))
    body = np.ascontiguousarray(values, dtype="<f8").tobytes()
    meta = dict(meta or {})
    meta.setdefault("version", __version__)
    trailer = TRAILER_MARK + json_dumps(meta).encode() + b"\n"
    return head + body + trailer


def grid_from_bytes(data):
    head = _HEADER.unpack_from(data)
    re0, im0, re1, im1, nx, ny, tol, iter_budget = head
    off = _HEADER.size
    count = nx * ny
    values = np.frombuffer(data, dtype="<f8", count=count, offset=off)
    values = values.reshape(ny, nx).copy()
    rest = data[off + 8 * count :]
    meta = {}
    if rest.startswith(TRAILER_MARK):
        meta = json.loads(rest[len(TRAILER_MARK):].decode())
    return (re0, im0, re1, im1), nx, ny, tol, iter_budget, values, meta


def write_csv(path, header_meta, columns, rows):
    """CSV with '#key=value' provenance lines, then a column header."""
    with open(path, "w", newline="\n") as fh:
        for k, v in header_meta.items():
            fh.write(f"# {k}={v}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def read_csv(path):
    """Returns (meta dict, column names, list of string rows)."""
    meta = {}
    rows = []
    columns = None
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    k, v = body.split("=", 1)
                    meta[k.strip()] = v.strip()
                continue
            if columns is None:
                columns = line.split(",")
            else:
                rows.append(line.split(","))
    if columns is None:
        raise StaleInput(f"{path}: no column header found")
    return meta, columns, rows


def check_digest(kind, recorded, actual, source):
    if recorded is not None and recorded != actual:
        raise StaleInput(
            f"{kind} digest mismatch for {source}: "
            f"recorded {recorded[:12]}.., actual {actual[:12]}.."
        )
