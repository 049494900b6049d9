"""Binary field snapshots and CSV reports."""
from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .grid import Grid, ScalarField

MAGIC = b"AXVV1"
VERSION = 1
_HEADER = struct.Struct("<5sHIIdddd")

REPORT_COLUMNS = ("nu", "sup_dist_p1", "sup_dist_p2", "sup_dist_p4", "anom_diss", "max_tail",
                  "energy_defect", "wall_ms")


class SnapshotError(ValueError):
    pass


class BadMagicError(SnapshotError):
    pass


class BadVersionError(SnapshotError):
    pass


class TruncatedError(SnapshotError):
    pass


class NonFinitePayloadError(SnapshotError):
    pass


def encode_snapshot(f: ScalarField, t: float) -> bytes:
    g = f.grid
    head = _HEADER.pack(MAGIC, VERSION, g.nr, g.nz, g.R, g.zmin, g.zmax, float(t))
    return head + np.ascontiguousarray(f.data, dtype="<f8").tobytes()


def decode_snapshot(buf: bytes) -> tuple[ScalarField, float]:
    if len(buf) < 5 or buf[:5] != MAGIC:
        raise BadMagicError("bad magic: not an AXVV1 snapshot")
    if len(buf) < _HEADER.size:
        raise TruncatedError("truncated payload: header incomplete")
    _, version, nr, nz, R, zmin, zmax, t = _HEADER.unpack_from(buf)
    if version != VERSION:
        raise BadVersionError(f"bad version {version}, expected {VERSION}")
    need = _HEADER.size + 8 * nr * nz
    if len(buf) < need:
        raise TruncatedError(f"truncated payload: {len(buf)} bytes, expected {need}")
    if len(buf) > need:
        raise SnapshotError(f"trailing bytes after payload ({len(buf) - need})")
    data = np.frombuffer(buf, dtype="<f8", count=nr * nz, offset=_HEADER.size).reshape(nr, nz).astype(float)
    if not np.all(np.isfinite(data)) or not np.isfinite(t):
        raise NonFinitePayloadError("non-finite value in snapshot payload")
    return ScalarField(Grid(nr, nz, R, zmin, zmax), data, "relative_vorticity"), t


def write_snapshot(f: ScalarField, t: float, path) -> None:
    Path(path).write_bytes(encode_snapshot(f, t))


def read_snapshot(path) -> tuple[ScalarField, float]:
    return decode_snapshot(Path(path).read_bytes())


def fmt(x) -> str:
    """17 significant digits: re-parsing gives back the same double."""
    return f"{float(x):.17g}"


def write_csv(rows, path, columns=REPORT_COLUMNS) -> None:
    """rows: iterable of mappings keyed by column name."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(row[c]) for c in columns])


def read_csv(path) -> tuple[list[str], list[list[float]]]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [[float(v) for v in line] for line in r]
