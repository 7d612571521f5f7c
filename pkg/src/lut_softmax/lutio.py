"""Binary and JSON persistence for lookup tables.

Record layout (little-endian):

    magic "LUTS" | version u16 | kind u8 | bits-per-entry u8 |
    rows u32 | cols u32 (1 for 1-D) | step/scale_ex f64 | scale_sum f64 |
    dequant_scale f64 (0 = unset) | payload (u8, or u16 LE for int16) |
    CRC32 u32 over header+payload

Multiple records concatenate into one file (a method's table pair).
"""

from __future__ import annotations

import json
import struct
import zlib

import numpy as np

from .errors import (
    ChecksumMismatch,
    InvalidParams,
    InvalidScale,
    InvalidStep,
    MalformedHeader,
    UnsupportedVersion,
)
from .luts import Lut1D, Lut2D, LutKind, lut_byte_size
from .quantization import PrecisionSpec

MAGIC = b"LUTS"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHBBIIddd")


def serialize_lut(lut: Lut1D | Lut2D) -> bytes:
    if isinstance(lut, Lut2D):
        rows, cols = lut.rows, lut.cols
        step, scale_sum = lut.scale_ex, lut.scale_sum
    else:
        rows, cols = len(lut), 1
        step, scale_sum = lut.step, 0.0
    spec = lut.spec
    header = _HEADER.pack(
        MAGIC,
        FORMAT_VERSION,
        int(lut.kind),
        spec.w,
        rows,
        cols,
        step,
        scale_sum,
        spec.dequant_scale if spec.dequant_scale is not None else 0.0,
    )
    dtype = "<u1" if spec.bytes_per_entry == 1 else "<u2"
    payload = np.ascontiguousarray(lut.entries, dtype=dtype).tobytes()
    body = header + payload
    return body + struct.pack("<I", zlib.crc32(body))


def serialize_luts(luts) -> bytes:
    return b"".join(serialize_lut(lut) for lut in luts)


def _read_record(data: bytes, offset: int):
    if len(data) - offset < _HEADER.size:
        raise MalformedHeader("truncated stream: incomplete header")
    magic, version, kind_code, bits, rows, cols, step, scale_sum, dq = _HEADER.unpack_from(
        data, offset
    )
    if magic != MAGIC:
        raise MalformedHeader(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"unsupported format version {version}")
    try:
        kind = LutKind(kind_code)
    except ValueError:
        raise UnsupportedVersion(f"unknown table kind code {kind_code}") from None
    if bits < 1 or rows < 1 or cols < 1:
        raise MalformedHeader("non-positive bits or dimensions")
    bytes_per_entry = 1 if bits <= 8 else 2
    payload_len = rows * cols * bytes_per_entry
    body_end = offset + _HEADER.size + payload_len
    if len(data) < body_end + 4:
        raise MalformedHeader("truncated stream: incomplete payload or checksum")
    (crc_stored,) = struct.unpack_from("<I", data, body_end)
    if zlib.crc32(data[offset:body_end]) != crc_stored:
        raise ChecksumMismatch("CRC32 mismatch")
    dtype = "<u1" if bytes_per_entry == 1 else "<u2"
    entries = np.frombuffer(data, dtype=dtype, count=rows * cols, offset=offset + _HEADER.size)
    try:
        spec = PrecisionSpec(bits, dq if dq != 0.0 else None)
        if kind == LutKind.SIGMA2D:
            lut = Lut2D(
                entries.reshape(rows, cols).astype(np.int64),
                spec,
                scale_ex=step,
                scale_sum=scale_sum,
                max_sum=cols * scale_sum,
            )
        else:
            if cols != 1:
                raise InvalidParams("1-D table record must have cols == 1")
            lut = Lut1D(kind, entries.astype(np.int64), spec, step=step)
    except (InvalidParams, InvalidScale, InvalidStep) as exc:
        raise MalformedHeader(f"record decodes to an invalid table: {exc}") from exc
    return lut, body_end + 4


def deserialize_luts(data: bytes) -> list:
    """Decode every record in the stream, in order."""
    luts, offset = [], 0
    while offset < len(data):
        lut, offset = _read_record(data, offset)
        luts.append(lut)
    if not luts:
        raise MalformedHeader("empty stream")
    return luts


def deserialize_lut(data: bytes):
    """Decode a stream holding exactly one record."""
    lut, consumed = _read_record(data, 0)
    if consumed != len(data):
        raise MalformedHeader(f"{len(data) - consumed} trailing bytes after record")
    return lut


def lut_to_dict(lut: Lut1D | Lut2D) -> dict:
    """JSON-ready debug dump mirroring the binary header fields."""
    two_d = isinstance(lut, Lut2D)
    return {
        "kind": lut.kind.name,
        "format_version": FORMAT_VERSION,
        "bits_per_entry": lut.spec.w,
        "precision": lut.spec.name,
        "rows": lut.rows if two_d else len(lut),
        "cols": lut.cols if two_d else 1,
        "step": lut.scale_ex if two_d else lut.step,
        "scale_sum": lut.scale_sum if two_d else 0.0,
        "max_sum": lut.max_sum if two_d else None,
        "dequant_scale": lut.spec.dequant_scale,
        "byte_size": lut_byte_size(lut),
        "entries": lut.entries.tolist(),
    }


def luts_to_json(luts) -> str:
    return json.dumps([lut_to_dict(lut) for lut in luts], indent=2)
