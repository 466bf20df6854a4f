"""Readers and writers for the HDR input containers and the 8-bit outputs.

Rasters are numpy arrays shaped ``(height, width, 3)``, row 0 at the top.
HDR samples are stored as float32, display samples as float64 in [0, 1].
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class HdrFormatError(ValueError):
    """Base class for malformed input files.

    ``offset`` is the byte position where decoding gave up.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class BadMagicError(HdrFormatError):
    pass


class ResolutionError(HdrFormatError):
    pass


class TruncatedDataError(HdrFormatError):
    pass


class RunLengthError(HdrFormatError):
    pass


class UnsupportedFormatError(HdrFormatError):
    pass


class InvalidSampleError(HdrFormatError):
    pass


@dataclass
class HdrImage:
    """Linear-light RGB raster with finite, non-negative samples.

    ``clamped`` counts negative samples that were clipped to zero on load.
    """

    data: np.ndarray
    clamped: int = 0

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float32)
        if data.ndim != 3 or data.shape[2] != 3:
            raise ValueError(f"expected (height, width, 3) array, got {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError("image must have at least one pixel")
        if not np.all(np.isfinite(data)):
            raise ValueError("HDR samples must be finite")
        if np.any(data < 0):
            raise ValueError("HDR samples must be non-negative")
        self.data = data

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass
class LdrImage:
    """Display-referred RGB raster, samples in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 3 or data.shape[2] != 3:
            raise ValueError(f"expected (height, width, 3) array, got {data.shape}")
        if not np.all((data >= 0) & (data <= 1)):
            raise ValueError("display samples must lie in [0, 1]")
        self.data = data

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


# ---------------------------------------------------------------------------
# Radiance RGBE

_RGBE_MAGICS = (b"#?RADIANCE", b"#?RGBE")
_RESOLUTION = re.compile(rb"^-Y (\d+) \+X (\d+)$")


def _readline(buf: bytes, pos: int) -> tuple[bytes, int]:
    end = buf.find(b"\n", pos)
    if end < 0:
        raise TruncatedDataError("unterminated header line", pos)
    return buf[pos:end], end + 1


def rgbe_to_float(rgbe: np.ndarray) -> np.ndarray:
    """Decode ``(..., 4)`` uint8 RGBE quadruples to linear float32 RGB."""
    rgbe = np.asarray(rgbe, dtype=np.uint8)
    mantissa = rgbe[..., :3].astype(np.float64) / 256.0
    exponent = rgbe[..., 3:].astype(np.int32) - 128
    rgb = np.ldexp(mantissa, exponent)
    rgb[rgbe[..., 3] == 0] = 0.0
    return rgb.astype(np.float32)


def float_to_rgbe(rgb: np.ndarray) -> np.ndarray:
    """Encode linear RGB to uint8 RGBE (shared exponent, truncated mantissas)."""
    rgb = np.asarray(rgb, dtype=np.float64)
    peak = rgb.max(axis=-1)
    frac, exp = np.frexp(peak)
    out = np.zeros(rgb.shape[:-1] + (4,), dtype=np.uint8)
    valid = peak > 1e-38
    scale = np.where(valid, frac * 256.0 / np.where(valid, peak, 1.0), 0.0)
    out[..., :3] = np.clip(np.floor(rgb * scale[..., None]), 0, 255).astype(np.uint8)
    out[..., 3] = np.where(valid, exp + 128, 0).astype(np.uint8)
    return out


def _decode_rle_scanline(buf: bytes, pos: int, width: int) -> tuple[np.ndarray, int]:
    """Decode one new-style RLE scanline starting after its 4-byte marker."""
    line = np.empty((4, width), dtype=np.uint8)
    n = len(buf)
    for channel in range(4):
        row = line[channel]
        i = 0
        while i < width:
            if pos >= n:
                raise TruncatedDataError("scanline ends inside run data", pos)
            count = buf[pos]
            if count > 128:
                count -= 128
                if i + count > width:
                    raise RunLengthError(f"run of {count} overflows scanline width {width}", pos)
                if pos + 1 >= n:
                    raise TruncatedDataError("missing run value", pos + 1)
                row[i:i + count] = buf[pos + 1]
                pos += 2
            else:
                if count == 0 or i + count > width:
                    raise RunLengthError(f"literal of {count} bytes does not fit scanline width {width}", pos)
                if pos + 1 + count > n:
                    raise TruncatedDataError("literal run cut short", n)
                row[i:i + count] = np.frombuffer(buf, np.uint8, count, pos + 1)
                pos += 1 + count
            i += count
    return line.T, pos


def read_radiance_hdr(data: bytes) -> HdrImage:
    """Decode a Radiance ``.hdr`` file (flat or adaptive-RLE RGBE)."""
    if not any(data.startswith(m) for m in _RGBE_MAGICS):
        raise BadMagicError("missing #?RADIANCE / #?RGBE signature", 0)

    pos = 0
    while True:
        line, nxt = _readline(data, pos)
        if line.startswith(b"FORMAT=") and line.strip() != b"FORMAT=32-bit_rle_rgbe":
            raise UnsupportedFormatError(f"unsupported pixel format {line.decode(errors='replace')!r}", pos)
        pos = nxt
        if not line.strip():
            break

    line, nxt = _readline(data, pos)
    match = _RESOLUTION.match(line.strip())
    if match is None:
        raise ResolutionError(
            f"unsupported resolution line {line.decode(errors='replace')!r}, need '-Y H +X W'", pos)
    height, width = int(match.group(1)), int(match.group(2))
    if width < 1 or height < 1:
        raise ResolutionError("image has no pixels", pos)
    pos = nxt

    rgbe = np.empty((height, width, 4), dtype=np.uint8)
    n = len(data)
    for y in range(height):
        is_rle = (8 <= width <= 0x7FFF and pos + 4 <= n
                  and data[pos] == 2 and data[pos + 1] == 2 and not data[pos + 2] & 0x80)
        if is_rle:
            encoded_width = (data[pos + 2] << 8) | data[pos + 3]
            if encoded_width != width:
                raise RunLengthError(
                    f"scanline {y} declares width {encoded_width}, header says {width}", pos)
            rgbe[y], pos = _decode_rle_scanline(data, pos + 4, width)
        else:
            end = pos + 4 * width
            if end > n:
                raise TruncatedDataError(f"scanline {y} is truncated", n)
            rgbe[y] = np.frombuffer(data, np.uint8, 4 * width, pos).reshape(width, 4)
            pos = end
    return HdrImage(rgbe_to_float(rgbe))


def _encode_rle_channel(values: np.ndarray) -> bytearray:
    out = bytearray()
    n = len(values)
    i = 0
    while i < n:
        j = i + 1
        while j < n and j - i < 127 and values[j] == values[i]:
            j += 1
        if j - i >= 4:
            out += bytes((128 + j - i, values[i]))
            i = j
            continue
        # literal block until the next run of 4+
        start = i
        while i < n and i - start < 128:
            k = i + 1
            while k < n and k - i < 4 and values[k] == values[i]:
                k += 1
            if k - i >= 4:
                break
            i += 1
        out.append(i - start)
        out += values[start:i].tobytes()
    return out


def write_radiance_hdr(image: HdrImage, rle: bool = True) -> bytes:
    """Encode an image as a Radiance ``.hdr`` file."""
    rgbe = float_to_rgbe(image.data)
    height, width = rgbe.shape[:2]
    out = bytearray(b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n")
    out += f"-Y {height} +X {width}\n".encode()
    use_rle = rle and 8 <= width <= 0x7FFF
    for row in rgbe:
        if not use_rle:
            out += row.tobytes()
            continue
        out += bytes((2, 2, width >> 8, width & 0xFF))
        for channel in range(4):
            out += _encode_rle_channel(np.ascontiguousarray(row[:, channel]))
    return bytes(out)


# ---------------------------------------------------------------------------
# PFM

def read_pfm(data: bytes) -> HdrImage:
    """Decode a colour PFM file.

    Negative samples are clipped to zero and counted in ``HdrImage.clamped``.
    NaN and infinite samples raise :class:`InvalidSampleError`. The magnitude
    of the scale field is ignored; only its sign (byte order) is used.
    """
    pos = 0
    tokens = []
    # header: magic, width, height, scale separated by whitespace
    for _ in range(4):
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise TruncatedDataError("incomplete PFM header", pos)
        tokens.append((data[start:pos], start))
    pos += 1  # single whitespace byte before the payload

    magic, _ = tokens[0]
    if magic == b"Pf":
        raise UnsupportedFormatError("grayscale PFM (Pf) is not supported", 0)
    if magic != b"PF":
        raise BadMagicError("missing PF signature", 0)
    try:
        width, height = int(tokens[1][0]), int(tokens[2][0])
    except ValueError:
        raise ResolutionError("non-integer PFM dimensions", tokens[1][1]) from None
    if width < 1 or height < 1:
        raise ResolutionError("image has no pixels", tokens[1][1])
    try:
        scale = float(tokens[3][0])
    except ValueError:
        raise HdrFormatError("non-numeric PFM scale", tokens[3][1]) from None
    if scale == 0:
        raise HdrFormatError("PFM scale must be non-zero", tokens[3][1])

    count = width * height * 3
    if pos + 4 * count > len(data):
        raise TruncatedDataError(f"payload needs {4 * count} bytes", len(data))
    dtype = np.dtype("<f4" if scale < 0 else ">f4")
    samples = np.frombuffer(data, dtype, count, pos).astype(np.float32)
    pixels = samples.reshape(height, width, 3)[::-1]

    bad = ~np.isfinite(pixels)
    if bad.any():
        row, col, _ = np.argwhere(bad)[0]
        flat = ((height - 1 - row) * width + col) * 3
        raise InvalidSampleError(f"non-finite sample at pixel (x={col}, y={row})", pos + 4 * int(flat))
    negative = pixels < 0
    clamped = int(negative.sum())
    if clamped:
        pixels = np.where(negative, np.float32(0), pixels)
    return HdrImage(np.ascontiguousarray(pixels), clamped=clamped)


def write_pfm(image: HdrImage) -> bytes:
    """Encode as little-endian colour PFM, bottom row first."""
    header = f"PF\n{image.width} {image.height}\n-1.0\n".encode()
    payload = np.ascontiguousarray(image.data[::-1], dtype="<f4").tobytes()
    return header + payload


# ---------------------------------------------------------------------------
# 8-bit output

def quantize(values: np.ndarray) -> np.ndarray:
    """Map [0, 1] samples to uint8, rounding halves away from zero."""
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0) * 255.0
    return np.floor(v + 0.5).astype(np.uint8)


def write_ldr(image: LdrImage, format: str = "png8") -> bytes:
    """Encode a display image as 8-bit binary PPM (``"ppm"``) or PNG (``"png8"``)."""
    pixels = quantize(image.data)
    if format == "ppm":
        header = f"P6\n{image.width} {image.height}\n255\n".encode()
        return header + pixels.tobytes()
    if format == "png8":
        from PIL import Image

        buf = io.BytesIO()
        Image.fromarray(pixels, mode="RGB").save(buf, format="PNG")
        return buf.getvalue()
    raise ValueError(f"unknown output format {format!r}")


def read_ppm(data: bytes) -> LdrImage:
    """Decode a binary P6 file with maxval 255."""
    match = re.match(rb"P6\s+(\d+)\s+(\d+)\s+(\d+)\s", data)
    if match is None:
        raise BadMagicError("missing P6 header", 0)
    width, height, maxval = (int(g) for g in match.groups())
    if maxval != 255:
        raise UnsupportedFormatError(f"maxval {maxval} unsupported", match.start(3))
    pos = match.end()
    if pos + width * height * 3 > len(data):
        raise TruncatedDataError("PPM payload truncated", len(data))
    pixels = np.frombuffer(data, np.uint8, width * height * 3, pos).reshape(height, width, 3)
    return LdrImage(pixels / 255.0)


def read_hdr_file(path) -> HdrImage:
    """Read an HDR file, picking the decoder from its signature."""
    data = Path(path).read_bytes()
    if data.startswith(b"#?"):
        return read_radiance_hdr(data)
    if data[:2] in (b"PF", b"Pf"):
        return read_pfm(data)
    raise BadMagicError(f"{path}: neither Radiance nor PFM", 0)


def write_ldr_file(image: LdrImage, path) -> None:
    path = Path(path)
    fmt = "ppm" if path.suffix.lower() == ".ppm" else "png8"
    path.write_bytes(write_ldr(image, fmt))
