"""Serialized grid functions and tabular outputs."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import ConfigError, DyadicCube, GridFunction

GRID_FORMAT = "jnqkit-grid"
GRID_VERSION = 1


def dumps_grid(f: GridFunction, encoding: str = "f8le") -> bytes:
    """One JSON header line followed by the values (raw little-endian doubles or CSV rows)."""
    if encoding not in ("f8le", "csv"):
        raise ConfigError(f"unknown grid encoding {encoding!r}")
    header = {
        "format": GRID_FORMAT, "version": GRID_VERSION, "encoding": encoding,
        "n": f.n, "root_level": f.root.level, "root_index": list(f.root.index),
        "level": f.level, "side": f.side,
    }
    head = (json.dumps(header, sort_keys=True) + "\n").encode()
    vals = np.asarray(f.values, dtype="<f8")
    if encoding == "f8le":
        return head + vals.tobytes(order="C")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in vals.reshape(-1, f.side):
        writer.writerow([repr(float(v)) for v in row])
    return head + buf.getvalue().encode()


def loads_grid(data: bytes) -> GridFunction:
    nl = data.find(b"\n")
    if nl < 0:
        raise ConfigError("grid file has no header line")
    try:
        header = json.loads(data[:nl])
    except json.JSONDecodeError as exc:
        raise ConfigError(f"grid header is not JSON: {exc}") from exc
    if header.get("format") != GRID_FORMAT or header.get("version") != GRID_VERSION:
        raise ConfigError("not a version-1 grid file")
    missing = {"n", "side", "encoding", "level", "root_level", "root_index"} - header.keys()
    if missing:
        raise ConfigError(f"grid header lacks {sorted(missing)}")
    n, side = int(header["n"]), int(header["side"])
    payload = data[nl + 1:]
    if header["encoding"] == "f8le":
        if len(payload) != 8 * side**n:
            raise ConfigError(f"payload holds {len(payload)} bytes, expected {8 * side ** n}")
        vals = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    elif header["encoding"] == "csv":
        rows = [[float(v) for v in r] for r in csv.reader(io.StringIO(payload.decode())) if r]
        vals = np.array(rows, dtype=np.float64).ravel()
    else:
        raise ConfigError(f"unknown grid encoding {header['encoding']!r}")
    if vals.size != side**n:
        raise ConfigError(f"payload holds {vals.size} values, expected {side ** n}")
    root = DyadicCube(int(header["root_level"]), tuple(int(i) for i in header["root_index"]))
    return GridFunction(root, int(header["level"]), vals.reshape((side,) * n))


def save_grid(f: GridFunction, path: str | Path, encoding: str = "f8le") -> None:
    Path(path).write_bytes(dumps_grid(f, encoding))


def load_grid(path: str | Path) -> GridFunction:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read grid file {path}: {exc}") from exc
    return loads_grid(data)


def format_cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def csv_text(header: Sequence[str], rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(row.get(k)) for k in header])
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
