"""Pixel containers, PNM / raw-planar image I/O, block geometry and distortion metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SUPPORTED_BIT_DEPTHS = (8, 10)
BLOCK_SIZES = (4, 8, 16, 32)


class FormatError(ValueError):
    """Malformed or unsupported image file."""


@dataclass(frozen=True)
class Plane:
    """A rectangular array of unsigned samples at a fixed bit depth.

    Dimensions must be multiples of 4 (the codec's minimum block size) and
    at least 4. Sample storage is row-major uint16, frozen after construction.
    """

    width: int
    height: int
    bit_depth: int
    samples: np.ndarray

    def __post_init__(self):
        if self.bit_depth not in SUPPORTED_BIT_DEPTHS:
            raise ValueError(f"unsupported bit depth {self.bit_depth}")
        if self.width < 4 or self.height < 4 or self.width % 4 or self.height % 4:
            raise ValueError(
                f"plane dimensions must be >=4 and multiples of 4, got {self.width}x{self.height}"
            )
        arr = np.asarray(self.samples, dtype=np.uint16)
        if arr.shape != (self.height, self.width):
            raise ValueError(f"sample array shape {arr.shape} does not match "
                             f"{self.height}x{self.width}")
        if arr.size and int(arr.max()) > self.max_value:
            raise ValueError(f"sample {int(arr.max())} exceeds {self.bit_depth}-bit range")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    @property
    def max_value(self) -> int:
        return (1 << self.bit_depth) - 1


@dataclass(frozen=True)
class Frame:
    """One (grayscale) or three (4:4:4) planes of identical geometry."""

    planes: tuple[Plane, ...]

    def __post_init__(self):
        object.__setattr__(self, "planes", tuple(self.planes))
        if len(self.planes) not in (1, 3):
            raise ValueError(f"frame must have 1 or 3 planes, got {len(self.planes)}")
        p0 = self.planes[0]
        for p in self.planes[1:]:
            if (p.width, p.height, p.bit_depth) != (p0.width, p0.height, p0.bit_depth):
                raise ValueError("all planes must share dimensions and bit depth")

    @property
    def width(self) -> int:
        return self.planes[0].width

    @property
    def height(self) -> int:
        return self.planes[0].height

    @property
    def bit_depth(self) -> int:
        return self.planes[0].bit_depth


@dataclass(frozen=True)
class BlockRef:
    """Position of a square coding block inside a plane's quadtree."""

    plane_index: int
    x: int
    y: int
    size: int

    def __post_init__(self):
        if self.size not in BLOCK_SIZES:
            raise ValueError(f"block size must be one of {BLOCK_SIZES}, got {self.size}")
        if self.x % self.size or self.y % self.size or self.x < 0 or self.y < 0:
            raise ValueError(f"block origin ({self.x},{self.y}) not aligned to size {self.size}")


# ---------------------------------------------------------------------------
# image file I/O


def _read_pnm_tokens(data: bytes, count: int, pos: int) -> tuple[list[int], int]:
    """Read whitespace-separated ASCII integers, skipping '#' comments."""
    tokens = []
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos < n and data[pos : pos + 1] == b"#":
            while pos < n and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace():
            pos += 1
        if pos == start:
            raise FormatError("truncated PNM header")
        try:
            tokens.append(int(data[start:pos]))
        except ValueError as exc:
            raise FormatError(f"bad PNM header token {data[start:pos]!r}") from exc
    if pos >= n or not data[pos : pos + 1].isspace():
        raise FormatError("PNM header not terminated by whitespace")
    return tokens, pos + 1


def _bit_depth_for_maxval(maxval: int) -> int:
    if maxval == 255:
        return 8
    if maxval == 1023:
        return 10
    raise FormatError(f"unsupported PNM maxval {maxval} (need 255 or 1023)")


def _load_pnm(data: bytes, expect_magic: bytes) -> Frame:
    if data[:2] != expect_magic:
        raise FormatError(f"bad magic {data[:2]!r}, expected {expect_magic!r}")
    nplanes = 1 if expect_magic == b"P5" else 3
    (width, height, maxval), pos = _read_pnm_tokens(data, 3, 2)
    bit_depth = _bit_depth_for_maxval(maxval)
    per_sample = 1 if maxval < 256 else 2
    need = width * height * nplanes * per_sample
    payload = data[pos : pos + need]
    if len(payload) < need:
        raise FormatError(f"truncated payload: need {need} bytes, have {len(payload)}")
    if per_sample == 1:
        flat = np.frombuffer(payload, dtype=np.uint8).astype(np.uint16)
    else:
        flat = np.frombuffer(payload, dtype=">u2").astype(np.uint16)  # PNM is big-endian
    if int(flat.max(initial=0)) > maxval:
        raise FormatError(f"sample exceeds declared maxval {maxval}")
    pixels = flat.reshape(height, width, nplanes)
    planes = tuple(
        Plane(width, height, bit_depth, pixels[:, :, i]) for i in range(nplanes)
    )
    return Frame(planes)


def _load_raw_planar(data: bytes, width: int, height: int, bit_depth: int,
                     planes: int) -> Frame:
    per_sample = 1 if bit_depth == 8 else 2
    need = width * height * planes * per_sample
    if len(data) < need:
        raise FormatError(f"truncated raw payload: need {need} bytes, have {len(data)}")
    if per_sample == 1:
        flat = np.frombuffer(data[:need], dtype=np.uint8).astype(np.uint16)
    else:
        flat = np.frombuffer(data[:need], dtype="<u2").astype(np.uint16)  # little-endian
    maxval = (1 << bit_depth) - 1
    if int(flat.max(initial=0)) > maxval:
        raise FormatError(f"raw sample exceeds {bit_depth}-bit range")
    out = []
    per_plane = width * height
    for i in range(planes):
        arr = flat[i * per_plane : (i + 1) * per_plane].reshape(height, width)
        out.append(Plane(width, height, bit_depth, arr))
    return Frame(tuple(out))


def load_image(path, fmt: str | None = None, *, width: int | None = None,
               height: int | None = None, bit_depth: int | None = None,
               planes: int | None = None) -> Frame:
    """Load a PGM, PPM or raw planar image.

    For ``raw-planar`` the geometry is supplied out of band via the keyword
    arguments; PGM/PPM are self-describing.
    """
    path = str(path)
    if fmt is None:
        lower = path.lower()
        if lower.endswith(".pgm"):
            fmt = "pgm"
        elif lower.endswith(".ppm"):
            fmt = "ppm"
        else:
            fmt = "raw-planar"
    with open(path, "rb") as fh:
        data = fh.read()
    if fmt == "pgm":
        return _load_pnm(data, b"P5")
    if fmt == "ppm":
        return _load_pnm(data, b"P6")
    if fmt == "raw-planar":
        if None in (width, height, bit_depth, planes):
            raise ValueError("raw-planar requires width, height, bit_depth and planes")
        return _load_raw_planar(data, width, height, bit_depth, planes)
    raise ValueError(f"unknown format {fmt!r}")


def store_image(frame: Frame, path, fmt: str | None = None) -> None:
    """Write a frame; the load/store round trip is bit-exact."""
    path = str(path)
    if fmt is None:
        lower = path.lower()
        if lower.endswith(".pgm"):
            fmt = "pgm"
        elif lower.endswith(".ppm"):
            fmt = "ppm"
        else:
            fmt = "raw-planar"
    nplanes = len(frame.planes)
    maxval = frame.planes[0].max_value
    if fmt in ("pgm", "ppm"):
        want = 1 if fmt == "pgm" else 3
        if nplanes != want:
            raise ValueError(f"{fmt} stores {want} plane(s), frame has {nplanes}")
        magic = b"P5" if fmt == "pgm" else b"P6"
        header = magic + b"\n%d %d\n%d\n" % (frame.width, frame.height, maxval)
        stack = np.stack([p.samples for p in frame.planes], axis=-1)
        if maxval < 256:
            payload = stack.astype(np.uint8).tobytes()
        else:
            payload = stack.astype(">u2").tobytes()
        with open(path, "wb") as fh:
            fh.write(header + payload)
        return
    if fmt == "raw-planar":
        dtype = np.uint8 if frame.bit_depth == 8 else "<u2"
        with open(path, "wb") as fh:
            for p in frame.planes:
                fh.write(p.samples.astype(dtype).tobytes())
        return
    raise ValueError(f"unknown format {fmt!r}")


# ---------------------------------------------------------------------------
# geometry and metrics


def pad_plane(samples: np.ndarray, n: int) -> np.ndarray:
    """Round an array's dimensions up to multiples of n by edge replication."""
    h, w = samples.shape
    ph = (-h) % n
    pw = (-w) % n
    if not ph and not pw:
        return samples.copy()
    return np.pad(samples, ((0, ph), (0, pw)), mode="edge")


def pad_to_multiple(frame: Frame, n: int) -> Frame:
    """Pad all planes of a frame to dimension multiples of n (edge replication)."""
    if n not in BLOCK_SIZES:
        raise ValueError(f"pad multiple must be one of {BLOCK_SIZES}")
    planes = tuple(
        Plane(*_padded_dims(p.width, p.height, n), p.bit_depth, pad_plane(p.samples, n))
        for p in frame.planes
    )
    return Frame(planes)


def _padded_dims(w: int, h: int, n: int) -> tuple[int, int]:
    return (w + (-w) % n, h + (-h) % n)


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")


def sse(a, b) -> int:
    """Sum of squared sample differences."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    _check_same_shape(a, b)
    d = a - b
    return int((d * d).sum())


def sad_block(a, b) -> int:
    """Sum of absolute sample differences."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    _check_same_shape(a, b)
    return int(np.abs(a - b).sum())


def psnr(a: Plane, b: Plane) -> float:
    """Peak signal-to-noise ratio in dB; math.inf when the planes are identical."""
    if (a.width, a.height) != (b.width, b.height):
        raise ValueError("dimension mismatch")
    if a.bit_depth != b.bit_depth:
        raise ValueError("bit depth mismatch")
    err = sse(a.samples, b.samples)
    if err == 0:
        return math.inf
    peak = a.max_value
    return 10.0 * math.log10(peak * peak * a.width * a.height / err)
