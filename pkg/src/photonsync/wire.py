"""Binary container and wire format for timetag packages.

One frame per package. Byte-exact layout, all integers little-endian:

    offset  size  field
    0       4     magic  b"TPK1"
    4       1     version (currently 1)
    5       1     party (0 = Alice, 1 = Bob)
    6       8     package index,   unsigned
    14      8     window start,    ps, unsigned
    22      8     window duration, ps, unsigned
    30      8     tag count,       unsigned
    38      var   payload: count delta-encoded timestamps
    38+var  4     crc32 of the payload bytes

The payload stores each timestamp as an unsigned LEB128 varint of its delta
to the previous timestamp; the first delta is relative to the window start.
Tags are sorted, so every delta is non-negative. A package file or a wire
stream is just a sequence of frames in index order.
"""
from __future__ import annotations

import io
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import TransportError
from .timetags import DataPackage, PackageStream, Party

MAGIC = b"TPK1"
VERSION = 1
_HEADER = struct.Struct("<4sBBQQQQ")
HEADER_SIZE = _HEADER.size
CRC_SIZE = 4


def encode_varints(values: np.ndarray) -> bytes:
    """Unsigned LEB128 encoding of a non-negative int64 array, vectorized."""
    vals = np.asarray(values, dtype=np.uint64)
    if vals.size == 0:
        return b""
    # bytes needed per value: ceil(bitlength / 7), at least 1
    nbits = np.zeros(vals.shape, dtype=np.int64)
    tmp = vals.copy()
    while np.any(tmp):
        nz = tmp > 0
        nbits[nz] += 7
        tmp >>= np.uint64(7)
    nbytes = np.maximum(nbits // 7, 1)
    total = int(nbytes.sum())
    out = np.zeros(total, dtype=np.uint8)
    pos = np.concatenate(([0], np.cumsum(nbytes)[:-1]))
    shifted = vals.copy()
    max_len = int(nbytes.max())
    for k in range(max_len):
        active = nbytes > k
        byte = (shifted[active] & np.uint64(0x7F)).astype(np.uint8)
        more = nbytes[active] > k + 1
        byte[more] |= 0x80
        out[pos[active] + k] = byte
        shifted[active] >>= np.uint64(7)
    return out.tobytes()


def decode_varints(payload: bytes, count: int) -> np.ndarray:
    """Inverse of encode_varints; checks that exactly `count` values fit."""
    raw = np.frombuffer(payload, dtype=np.uint8)
    ends = np.flatnonzero(raw < 0x80)
    if ends.size != count or (count and ends[-1] != raw.size - 1) or (count == 0 and raw.size):
        raise ValueError("varint payload does not hold the declared tag count")
    if count == 0:
        return np.zeros(0, dtype=np.uint64)
    starts = np.concatenate(([0], ends[:-1] + 1))
    lengths = ends - starts + 1
    values = np.zeros(count, dtype=np.uint64)
    max_len = int(lengths.max())
    for k in range(max_len):
        active = lengths > k
        byte = raw[starts[active] + k].astype(np.uint64)
        values[active] |= (byte & np.uint64(0x7F)) << np.uint64(7 * k)
    return values


def encode_frame(package: DataPackage, party: Party) -> bytes:
    deltas = np.diff(package.timestamps, prepend=np.int64(package.start))
    payload = encode_varints(deltas)
    header = _HEADER.pack(
        MAGIC,
        VERSION,
        int(party),
        package.index,
        package.start,
        package.duration,
        package.count,
    )
    return header + payload + struct.pack("<I", zlib.crc32(payload))


@dataclass(frozen=True)
class Frame:
    party: Party
    package: DataPackage
    crc_ok: bool


class FrameDecodeError(ValueError):
    pass


def read_frame(fh) -> Frame | None:
    """Read one frame from a binary stream; None at a clean end of stream."""
    header = fh.read(HEADER_SIZE)
    if not header:
        return None
    if len(header) < HEADER_SIZE:
        raise FrameDecodeError("truncated frame header")
    magic, version, party, index, start, duration, count = _HEADER.unpack(header)
    if magic != MAGIC:
        raise FrameDecodeError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FrameDecodeError(f"unsupported version {version}")
    # payload length is not in the header, so scan varints as they stream in
    payload = bytearray()
    remaining = count
    while remaining:
        b = fh.read(1)
        if not b:
            raise FrameDecodeError("truncated payload")
        payload += b
        if b[0] < 0x80:
            remaining -= 1
    crc_raw = fh.read(CRC_SIZE)
    if len(crc_raw) < CRC_SIZE:
        raise FrameDecodeError("truncated crc")
    crc_ok = struct.unpack("<I", crc_raw)[0] == zlib.crc32(bytes(payload))
    deltas = decode_varints(bytes(payload), count)
    timestamps = (start + np.cumsum(deltas.astype(np.int64))).astype(np.int64)
    package = DataPackage(
        index=index, start=start, duration=duration, timestamps=timestamps
    )
    return Frame(party=Party(party), package=package, crc_ok=crc_ok)


class BufferedFrameReader:
    """Incremental frame decoder over byte chunks (for sockets)."""

    def __init__(self):
        self._buf = bytearray()

    def feed(self, chunk: bytes) -> list[Frame]:
        self._buf += chunk
        frames = []
        while True:
            frame, consumed = self._try_decode()
            if frame is None:
                break
            frames.append(frame)
            del self._buf[:consumed]
        return frames

    def _try_decode(self) -> tuple[Frame | None, int]:
        buf = self._buf
        if len(buf) < HEADER_SIZE:
            return None, 0
        magic, version, party, index, start, duration, count = _HEADER.unpack(
            bytes(buf[:HEADER_SIZE])
        )
        if magic != MAGIC or version != VERSION:
            raise FrameDecodeError("bad frame header in stream")
        # find the end of `count` varints
        pos = HEADER_SIZE
        seen = 0
        view = memoryview(buf)
        while seen < count:
            if pos >= len(buf):
                return None, 0
            if view[pos] < 0x80:
                seen += 1
            pos += 1
        if len(buf) < pos + CRC_SIZE:
            return None, 0
        payload = bytes(view[HEADER_SIZE:pos])
        crc_ok = struct.unpack("<I", bytes(view[pos : pos + CRC_SIZE]))[0] == zlib.crc32(
            payload
        )
        deltas = decode_varints(payload, count)
        timestamps = (start + np.cumsum(deltas.astype(np.int64))).astype(np.int64)
        package = DataPackage(
            index=index, start=start, duration=duration, timestamps=timestamps
        )
        return Frame(Party(party), package, crc_ok), pos + CRC_SIZE


def write_stream(stream: PackageStream, path) -> None:
    with open(path, "wb") as fh:
        for package in stream.packages:
            fh.write(encode_frame(package, stream.party))


def read_stream(path) -> PackageStream:
    frames: list[Frame] = []
    with open(path, "rb") as fh:
        while True:
            frame = read_frame(fh)
            if frame is None:
                break
            if not frame.crc_ok:
                raise FrameDecodeError(f"crc mismatch at index {frame.package.index}")
            frames.append(frame)
    if not frames:
        raise FrameDecodeError(f"no frames in {path}")
    party = frames[0].party
    return PackageStream(party=party, packages=tuple(f.package for f in frames))
