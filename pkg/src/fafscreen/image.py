"""Grayscale fundus image loading, validation, and re-encoding.

Supported formats: PGM (ASCII ``P2`` and binary ``P5``, maxval up to 65535)
and non-interlaced grayscale PNG at 8 or 16 bits. Color inputs are rejected
rather than converted: channel mixing would silently change sector
statistics downstream.
"""

from __future__ import annotations

import enum
import struct
import zlib
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ImageFormatError

__all__ = [
    "Laterality",
    "FafImage",
    "load_image",
    "pixel_at",
    "encode_pgm",
    "encode_png",
]

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


class Laterality(enum.Enum):
    OD = "OD"  # right eye
    OS = "OS"  # left eye
    UNKNOWN = "Unknown"

    @classmethod
    def parse(cls, text: str) -> "Laterality":
        for member in cls:
            if member.value.lower() == text.strip().lower():
                return member
        raise ValueError(f"unknown laterality {text!r} (expected OD, OS, or Unknown)")


@dataclass(frozen=True)
class FafImage:
    """Immutable grayscale raster with optional eye laterality.

    ``pixels`` is a row-major 1-D array of length ``width * height`` holding
    integers in ``[0, max_value]``. Intensities stay integral here; all
    statistics are computed in float64 downstream.
    """

    width: int
    height: int
    pixels: np.ndarray
    max_value: int
    laterality: Laterality = field(default=Laterality.UNKNOWN)

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ImageFormatError(f"non-positive image dimensions {self.width}x{self.height}")
        if not 1 <= self.max_value <= 65535:
            raise ImageFormatError(f"max_value {self.max_value} outside [1, 65535]")
        px = np.asarray(self.pixels)
        if px.ndim != 1 or px.size != self.width * self.height:
            raise ImageFormatError(
                f"pixel count {px.size} does not match {self.width}x{self.height}"
            )
        if px.size and (int(px.min()) < 0 or int(px.max()) > self.max_value):
            raise ImageFormatError("pixel value outside [0, max_value]")
        px = px.astype(np.uint16, copy=True)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    def rows(self) -> np.ndarray:
        """Pixels as a read-only (height, width) view."""
        return self.pixels.reshape(self.height, self.width)

    def with_laterality(self, laterality: Laterality) -> "FafImage":
        return replace(self, laterality=laterality)


def pixel_at(img: FafImage, x: int, y: int) -> int:
    """Intensity at column ``x``, row ``y`` (row-major indexing)."""
    if not (0 <= x < img.width and 0 <= y < img.height):
        raise IndexError(f"pixel ({x}, {y}) outside {img.width}x{img.height} image")
    return int(img.pixels[y * img.width + x])


def load_image(data: bytes, format_hint: str | None = None) -> FafImage:
    """Decode PGM or grayscale PNG bytes into a :class:`FafImage`.

    The format is sniffed from the magic bytes unless ``format_hint``
    (``"pgm"`` or ``"png"``) forces a parser. Laterality is always
    ``Unknown`` at this point; it travels as sidecar metadata.
    """
    if format_hint is not None:
        hint = format_hint.strip().lower()
        if hint == "pgm":
            return _decode_pgm(data)
        if hint == "png":
            return _decode_png(data)
        raise ImageFormatError(f"unknown format hint {format_hint!r}")
    if data[:2] in (b"P2", b"P5"):
        return _decode_pgm(data)
    if data[:8] == _PNG_SIGNATURE:
        return _decode_png(data)
    raise ImageFormatError("unrecognized image format (expected PGM P2/P5 or PNG)")


# ---------------------------------------------------------------------------
# PGM


def _pgm_tokens(data: bytes):
    """Yield whitespace-separated header/sample tokens, skipping # comments."""
    i, n = 0, len(data)
    while i < n:
        c = data[i : i + 1]
        if c in b" \t\r\n\x0b\x0c":
            i += 1
        elif c == b"#":
            j = data.find(b"\n", i)
            i = n if j < 0 else j + 1
        else:
            j = i
            while j < n and data[j : j + 1] not in b" \t\r\n\x0b\x0c#":
                j += 1
            yield data[i:j], j
            i = j


def _parse_header_int(token: bytes, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise ImageFormatError(f"malformed PGM header: bad {what} {token!r}") from None


def _decode_pgm(data: bytes) -> FafImage:
    tokens = _pgm_tokens(data)

    def next_token(what: str) -> tuple[bytes, int]:
        try:
            return next(tokens)
        except StopIteration:
            raise ImageFormatError(f"malformed PGM header: missing {what}") from None

    magic, _ = next_token("magic")
    if magic not in (b"P2", b"P5"):
        raise ImageFormatError(f"malformed PGM header: magic {magic!r}")
    width = _parse_header_int(next_token("width")[0], "width")
    height = _parse_header_int(next_token("height")[0], "height")
    maxval, maxval_end = next_token("maxval")
    maxval = _parse_header_int(maxval, "maxval")
    if width <= 0 or height <= 0:
        raise ImageFormatError(f"malformed PGM header: dimensions {width}x{height}")
    if not 1 <= maxval <= 65535:
        raise ImageFormatError(f"unsupported bit depth: PGM maxval {maxval}")
    count = width * height

    if magic == b"P2":
        values = []
        for token, _ in tokens:
            values.append(_parse_header_int(token, "sample"))
            if len(values) > count:
                raise ImageFormatError("trailing data after PGM samples")
        if len(values) < count:
            raise ImageFormatError(
                f"truncated pixel data: expected {count} samples, found {len(values)}"
            )
        px = np.array(values, dtype=np.int64)
    else:
        # exactly one whitespace byte separates the maxval from binary samples
        body = data[maxval_end + 1 :]
        itemsize = 1 if maxval < 256 else 2
        need = count * itemsize
        if len(body) < need:
            raise ImageFormatError(
                f"truncated pixel data: expected {need} bytes, found {len(body)}"
            )
        if len(body) > need:
            raise ImageFormatError("trailing data after PGM samples")
        dtype = np.uint8 if itemsize == 1 else np.dtype(">u2")
        px = np.frombuffer(body, dtype=dtype).astype(np.int64)

    if px.size and int(px.max()) > maxval:
        raise ImageFormatError("PGM sample exceeds declared maxval")
    if px.size and int(px.min()) < 0:
        raise ImageFormatError("negative PGM sample")
    return FafImage(width=width, height=height, pixels=px, max_value=maxval)


def encode_pgm(img: FafImage, ascii_format: bool = False) -> bytes:
    """Encode as binary P5 (default) or ASCII P2, preserving max_value."""
    header = f"{'P2' if ascii_format else 'P5'}\n{img.width} {img.height}\n{img.max_value}\n"
    if ascii_format:
        rows = img.rows()
        body = "\n".join(" ".join(str(int(v)) for v in row) for row in rows)
        return (header + body + "\n").encode("ascii")
    if img.max_value < 256:
        payload = img.pixels.astype(np.uint8).tobytes()
    else:
        payload = img.pixels.astype(">u2").tobytes()
    return header.encode("ascii") + payload


# ---------------------------------------------------------------------------
# PNG (grayscale, color type 0, bit depth 8 or 16, non-interlaced)


def _png_chunks(data: bytes):
    pos = 8
    while pos < len(data):
        if pos + 8 > len(data):
            raise ImageFormatError("truncated PNG chunk header")
        (length,) = struct.unpack(">I", data[pos : pos + 4])
        ctype = data[pos + 4 : pos + 8]
        end = pos + 8 + length
        if end + 4 > len(data):
            raise ImageFormatError(f"truncated PNG chunk {ctype!r}")
        payload = data[pos + 8 : end]
        (crc,) = struct.unpack(">I", data[end : end + 4])
        if zlib.crc32(ctype + payload) & 0xFFFFFFFF != crc:
            raise ImageFormatError(f"PNG chunk {ctype!r} fails CRC check")
        yield ctype, payload
        pos = end + 4


def _unfilter_scanlines(raw: bytes, width: int, height: int, bpp: int) -> bytearray:
    stride = width * bpp
    if len(raw) != (stride + 1) * height:
        raise ImageFormatError("truncated pixel data: PNG scanline payload size mismatch")
    out = bytearray(stride * height)
    prev_start = -1
    for y in range(height):
        fpos = y * (stride + 1)
        ftype = raw[fpos]
        line = raw[fpos + 1 : fpos + 1 + stride]
        opos = y * stride
        if ftype == 0:
            out[opos : opos + stride] = line
        elif ftype == 1:
            for i in range(stride):
                a = out[opos + i - bpp] if i >= bpp else 0
                out[opos + i] = (line[i] + a) & 0xFF
        elif ftype == 2:
            if y == 0:
                out[opos : opos + stride] = line
            else:
                for i in range(stride):
                    out[opos + i] = (line[i] + out[prev_start + i]) & 0xFF
        elif ftype == 3:
            for i in range(stride):
                a = out[opos + i - bpp] if i >= bpp else 0
                b = out[prev_start + i] if y > 0 else 0
                out[opos + i] = (line[i] + ((a + b) >> 1)) & 0xFF
        elif ftype == 4:
            for i in range(stride):
                a = out[opos + i - bpp] if i >= bpp else 0
                b = out[prev_start + i] if y > 0 else 0
                c = out[prev_start + i - bpp] if (y > 0 and i >= bpp) else 0
                p = a + b - c
                pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
                if pa <= pb and pa <= pc:
                    pred = a
                elif pb <= pc:
                    pred = b
                else:
                    pred = c
                out[opos + i] = (line[i] + pred) & 0xFF
        else:
            raise ImageFormatError(f"unknown PNG filter type {ftype}")
        prev_start = opos
    return out


def _decode_png(data: bytes) -> FafImage:
    if data[:8] != _PNG_SIGNATURE:
        raise ImageFormatError("malformed PNG signature")
    header = None
    idat = bytearray()
    seen_end = False
    for ctype, payload in _png_chunks(data):
        if ctype == b"IHDR":
            if len(payload) != 13:
                raise ImageFormatError("malformed PNG IHDR")
            header = struct.unpack(">IIBBBBB", payload)
        elif ctype == b"IDAT":
            idat.extend(payload)
        elif ctype == b"IEND":
            seen_end = True
            break
    if header is None:
        raise ImageFormatError("PNG missing IHDR")
    if not seen_end:
        raise ImageFormatError("truncated PNG: missing IEND")
    width, height, depth, color, comp, filt, interlace = header
    if color in (2, 3, 6):
        raise ImageFormatError(f"color PNG rejected (color type {color}); grayscale only")
    if color == 4:
        raise ImageFormatError("grayscale+alpha PNG rejected; plain grayscale only")
    if color != 0:
        raise ImageFormatError(f"malformed PNG color type {color}")
    if depth not in (8, 16):
        raise ImageFormatError(f"unsupported bit depth: PNG {depth}-bit")
    if comp != 0 or filt != 0:
        raise ImageFormatError("malformed PNG compression/filter method")
    if interlace != 0:
        raise ImageFormatError("interlaced PNG not supported")
    if width == 0 or height == 0:
        raise ImageFormatError("malformed PNG: zero dimension")
    if not idat:
        raise ImageFormatError("truncated PNG: no IDAT data")
    try:
        raw = zlib.decompress(bytes(idat))
    except zlib.error as exc:
        raise ImageFormatError(f"corrupt PNG pixel stream: {exc}") from None
    bpp = depth // 8
    flat = _unfilter_scanlines(raw, width, height, bpp)
    if depth == 8:
        px = np.frombuffer(bytes(flat), dtype=np.uint8).astype(np.int64)
        maxval = 255
    else:
        px = np.frombuffer(bytes(flat), dtype=">u2").astype(np.int64)
        maxval = 65535
    return FafImage(width=width, height=height, pixels=px, max_value=maxval)


def _png_chunk(ctype: bytes, payload: bytes) -> bytes:
    return (
        struct.pack(">I", len(payload))
        + ctype
        + payload
        + struct.pack(">I", zlib.crc32(ctype + payload) & 0xFFFFFFFF)
    )


def encode_png(img: FafImage) -> bytes:
    """Encode as non-interlaced grayscale PNG (filter 0 on every scanline).

    Requires ``max_value`` to be 255 or 65535; PGM-style intermediate
    maxvals have no PNG representation and must stay in PGM.
    """
    if img.max_value == 255:
        depth, dtype = 8, np.uint8
    elif img.max_value == 65535:
        depth, dtype = 16, np.dtype(">u2")
    else:
        raise ImageFormatError(
            f"PNG supports max_value 255 or 65535, not {img.max_value}; use PGM"
        )
    ihdr = struct.pack(">IIBBBBB", img.width, img.height, depth, 0, 0, 0, 0)
    rows = img.rows().astype(dtype)
    stride_data = bytearray()
    for y in range(img.height):
        stride_data.append(0)
        stride_data.extend(rows[y].tobytes())
    return (
        _PNG_SIGNATURE
        + _png_chunk(b"IHDR", ihdr)
        + _png_chunk(b"IDAT", zlib.compress(bytes(stride_data), 6))
        + _png_chunk(b"IEND", b"")
    )
