"""Reader/writer for the binary solution-file exchange format.

Layout (all little-endian):

    magic "ANUM", version byte 0x01
    u32 field_count
    per field: u16 name length, UTF-8 name, u8 rank,
               rank x u64 dims (dims[0] = snapshot count),
               prod(dims) f64 values, row-major
    u32 snapshot_count, snapshot_count x f64 snapshot times
    u32 trailer length, UTF-8 JSON trailer
        (keys self_residual, wall_time, scheme)

The file does not carry grid geometry; that lives in the run file and the
problem document.  ``attach_grid`` joins the two.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import SchemaError
from .grids import Grid, SolutionField, SolutionSet

MAGIC = b"ANUM"
VERSION = 1


@dataclass
class RawSolution:
    """Decoded solution file before any grid is attached."""

    fields: dict  # name -> (n_snapshots, *shape) float64 array
    times: np.ndarray
    meta: dict = field(default_factory=dict)


def write_solution_file(path, fields: dict, times, meta: dict) -> None:
    times = np.asarray(times, dtype="<f8")
    if times.ndim != 1:
        raise SchemaError("snapshot times must be a 1-D vector")
    chunks = [MAGIC, bytes([VERSION]), struct.pack("<I", len(fields))]
    for name, values in fields.items():
        values = np.ascontiguousarray(values, dtype="<f8")
        if values.ndim < 1 or values.shape[0] != len(times):
            raise SchemaError(
                f"{name}: leading axis {values.shape} must match {len(times)} snapshots"
            )
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<B", values.ndim))
        chunks.append(struct.pack(f"<{values.ndim}Q", *values.shape))
        chunks.append(values.tobytes())
    chunks.append(struct.pack("<I", len(times)))
    chunks.append(times.tobytes())
    trailer = json.dumps(meta, sort_keys=True).encode("utf-8")
    chunks.append(struct.pack("<I", len(trailer)))
    chunks.append(trailer)
    Path(path).write_bytes(b"".join(chunks))


class _Cursor:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise SchemaError("solution file truncated")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def read_solution_file(path) -> RawSolution:
    buf = Path(path).read_bytes()
    cur = _Cursor(buf)
    if cur.take(4) != MAGIC:
        raise SchemaError(f"{path}: bad magic, not a solution file")
    (version,) = cur.unpack("<B")
    if version != VERSION:
        raise SchemaError(f"{path}: unsupported version {version}")
    (field_count,) = cur.unpack("<I")
    if field_count > 64:
        raise SchemaError(f"{path}: implausible field count {field_count}")
    fields = {}
    for _ in range(field_count):
        (name_len,) = cur.unpack("<H")
        name = cur.take(name_len).decode("utf-8")
        (rank,) = cur.unpack("<B")
        dims = cur.unpack(f"<{rank}Q")
        count = int(np.prod(dims, dtype=np.int64)) if rank else 1
        if count > 200_000_000:
            raise SchemaError(f"{path}: field {name} too large ({count} values)")
        values = np.frombuffer(cur.take(8 * count), dtype="<f8").reshape(dims)
        fields[name] = np.array(values)  # own the memory
    (snapshot_count,) = cur.unpack("<I")
    times = np.array(np.frombuffer(cur.take(8 * snapshot_count), dtype="<f8"))
    (trailer_len,) = cur.unpack("<I")
    try:
        meta = json.loads(cur.take(trailer_len).decode("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise SchemaError(f"{path}: bad trailer: {exc}") from None
    if cur.pos != len(buf):
        raise SchemaError(f"{path}: {len(buf) - cur.pos} trailing bytes")
    for name, values in fields.items():
        if values.shape[0] != snapshot_count:
            raise SchemaError(
                f"{path}: field {name} has {values.shape[0]} snapshots, header says {snapshot_count}"
            )
    return RawSolution(fields, times, meta if isinstance(meta, dict) else {"note": meta})


def attach_grid(raw: RawSolution, grid: Grid) -> SolutionSet:
    fields = {
        name: SolutionField(name, values, grid) for name, values in raw.fields.items()
    }
    return SolutionSet(fields, raw.times, raw.meta)
