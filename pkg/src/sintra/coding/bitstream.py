"""Byte-exact stream container: fixed header plus length/checksum-framed frames."""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

from .bac import BitstreamError

MAGIC = b"SINTRA01"
VERSION = 1

VARIANTS = ("bilinear-only", "nn-all-blocks", "nn-4x4-only", "sad", "pixdiff", "rdo")

_FLAG_SINGLE_CONTEXT = 1
_FLAG_ALL_BLOCK_SIZES = 2

# magic, version, width, height, bit_depth, planes, qp, variant,
# sad threshold, pixel-difference threshold, frame count, flags
_HEADER_FMT = "<8sHIIBBBBHHIB"
HEADER_SIZE = struct.calcsize(_HEADER_FMT)


@dataclass(frozen=True)
class StreamHeader:
    width: int
    height: int
    bit_depth: int
    planes: int
    qp: int
    variant: str
    sad_threshold: int
    pixdiff_threshold: int
    frame_count: int
    single_context: bool = False
    all_block_sizes: bool = False

    @property
    def lossless(self) -> bool:
        return self.qp == 0


def pack_header(h: StreamHeader) -> bytes:
    flags = (_FLAG_SINGLE_CONTEXT if h.single_context else 0) | (
        _FLAG_ALL_BLOCK_SIZES if h.all_block_sizes else 0)
    return struct.pack(
        _HEADER_FMT, MAGIC, VERSION, h.width, h.height, h.bit_depth, h.planes,
        h.qp, VARIANTS.index(h.variant), h.sad_threshold, h.pixdiff_threshold,
        h.frame_count, flags)


def parse_header(data: bytes) -> StreamHeader:
    if len(data) < HEADER_SIZE:
        raise BitstreamError("stream shorter than header")
    (magic, version, width, height, bit_depth, planes, qp, variant_id,
     sad_thr, pix_thr, frame_count, flags) = struct.unpack_from(_HEADER_FMT, data)
    if magic != MAGIC:
        raise BitstreamError(f"bad magic {magic!r}")
    if version != VERSION:
        raise BitstreamError(f"unsupported version {version}")
    if variant_id >= len(VARIANTS):
        raise BitstreamError(f"unknown variant id {variant_id}")
    return StreamHeader(
        width=width, height=height, bit_depth=bit_depth, planes=planes, qp=qp,
        variant=VARIANTS[variant_id], sad_threshold=sad_thr,
        pixdiff_threshold=pix_thr, frame_count=frame_count,
        single_context=bool(flags & _FLAG_SINGLE_CONTEXT),
        all_block_sizes=bool(flags & _FLAG_ALL_BLOCK_SIZES))


def frame_checksum(planes) -> int:
    crc = 0
    for p in planes:
        crc = zlib.crc32(p.astype("<u2").tobytes(), crc)
    return crc & 0xFFFFFFFF


def pack_frame(payload: bytes, checksum: int) -> bytes:
    return struct.pack("<I", len(payload)) + payload + struct.pack("<I", checksum)


def iter_frames(data: bytes):
    """Yield (payload, checksum) per frame section, validating framing."""
    pos = HEADER_SIZE
    while pos < len(data):
        if pos + 4 > len(data):
            raise BitstreamError("truncated frame length field")
        (length,) = struct.unpack_from("<I", data, pos)
        pos += 4
        if pos + length + 4 > len(data):
            raise BitstreamError("truncated frame payload")
        payload = data[pos : pos + length]
        pos += length
        (crc,) = struct.unpack_from("<I", data, pos)
        pos += 4
        yield payload, crc
