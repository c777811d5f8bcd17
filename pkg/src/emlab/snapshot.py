"""EMXF field-snapshot container.

A snapshot stores named real scalar fields sampled on one cubic grid in a
single binary file.  Layout, all little-endian:

    magic   4 bytes  b"EMXF"
    version u32      currently 1
    n       u32      grid points per axis
    box     f64      box side length
    count   u32      number of fields
    names   count times (u32 byte length, utf-8 bytes)
    data    count times n^3 f64, C row-major, in name order

Vector fields are stored as one scalar per component (e.g. "u_x", "u_y",
"u_z").  Writes are atomic: the payload goes to a temporary file in the
destination directory which is then renamed over the target.
"""
from __future__ import annotations

import os
import struct
import tempfile

import numpy as np

from .grid import GridSpec

__all__ = ["write_snapshot", "read_snapshot", "EMXF_MAGIC", "EMXF_VERSION"]

EMXF_MAGIC = b"EMXF"
EMXF_VERSION = 1


def write_snapshot(path: str | os.PathLike, grid: GridSpec, fields: dict[str, np.ndarray]) -> None:
    """Write named fields to an EMXF file, preserving dict order."""
    if not fields:
        raise ValueError("snapshot needs at least one field")
    for name, arr in fields.items():
        if np.shape(arr) != grid.shape:
            raise ValueError(
                f"field {name!r} has shape {np.shape(arr)}, expected {grid.shape}"
            )
    header = bytearray()
    header += EMXF_MAGIC
    header += struct.pack("<IIdI", EMXF_VERSION, grid.n, float(grid.box), len(fields))
    for name in fields:
        raw = name.encode("utf-8")
        header += struct.pack("<I", len(raw))
        header += raw

    dest_dir = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=dest_dir, suffix=".emxf.tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(bytes(header))
            for arr in fields.values():
                fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_snapshot(path: str | os.PathLike) -> tuple[GridSpec, dict[str, np.ndarray]]:
    """Read an EMXF file back into (grid, ordered name -> field dict)."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != EMXF_MAGIC:
            raise ValueError(f"not an EMXF file: bad magic {magic!r}")
        version, n, box, count = struct.unpack("<IIdI", fh.read(20))
        if version != EMXF_VERSION:
            raise ValueError(f"unsupported EMXF version {version}")
        names = []
        for _ in range(count):
            (ln,) = struct.unpack("<I", fh.read(4))
            names.append(fh.read(ln).decode("utf-8"))
        grid = GridSpec(n=int(n), box=float(box))
        nbytes = n**3 * 8
        fields: dict[str, np.ndarray] = {}
        for name in names:
            raw = fh.read(nbytes)
            if len(raw) != nbytes:
                raise ValueError(f"truncated EMXF payload while reading field {name!r}")
            fields[name] = np.frombuffer(raw, dtype="<f8").reshape(grid.shape).copy()
        trailing = fh.read(1)
        if trailing:
            raise ValueError("trailing bytes after EMXF payload")
    return grid, fields
