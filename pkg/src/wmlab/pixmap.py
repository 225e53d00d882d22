"""8-bit grayscale images: container, PGM/raw I/O, and fidelity metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PEAK = 255.0


class PixmapError(ValueError):
    pass


class MalformedHeaderError(PixmapError):
    pass


class UnsupportedMaxvalError(PixmapError):
    pass


class TruncatedPayloadError(PixmapError):
    pass


class SizeMismatchError(PixmapError):
    pass


class DimensionMismatchError(PixmapError):
    pass


@dataclass(frozen=True, eq=False)
class Pixmap:
    """Grayscale image, pixels stored row-major as uint8 (height, width)."""

    pixels: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pixels)
        if p.ndim != 2 or p.size == 0:
            raise PixmapError(f"expected nonempty 2-D pixel array, got shape {p.shape}")
        if p.dtype != np.uint8:
            if np.any((p < 0) | (p > 255)):
                raise PixmapError("pixel values outside [0, 255]")
            p = p.astype(np.uint8)
        object.__setattr__(self, "pixels", p)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def samples(self) -> np.ndarray:
        """Row-major flat view of the pixel values."""
        return self.pixels.reshape(-1)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Pixmap):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )


@dataclass(frozen=True)
class QualityReport:
    """MSE / PSNR between two equally sized images.

    psnr_db is math.inf exactly when mse == 0.
    """

    mse: float
    psnr_db: float
    sample_count: int

    @property
    def lossless(self) -> bool:
        return self.mse == 0.0


def psnr_from_mse(mse: float) -> float:
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK / mse)


def mse_from_psnr(psnr_db: float) -> float:
    if math.isinf(psnr_db):
        return 0.0
    return PEAK * PEAK / 10.0 ** (psnr_db / 10.0)


def psnr(a: Pixmap, b: Pixmap) -> QualityReport:
    """PSNR with peak 255, MSE accumulated in double precision."""
    if (a.width, a.height) != (b.width, b.height):
        raise DimensionMismatchError(
            f"{a.width}x{a.height} vs {b.width}x{b.height}"
        )
    diff = a.pixels.astype(np.float64) - b.pixels.astype(np.float64)
    mse = float(np.mean(diff * diff))
    return QualityReport(mse=mse, psnr_db=psnr_from_mse(mse), sample_count=diff.size)


def transpose(img: Pixmap) -> Pixmap:
    """Diagonal flip: output[x][y] == input[y][x], dimensions swapped."""
    return Pixmap(img.pixels.T.copy())


# --- PGM (binary P5, maxval 255) ---

_WHITESPACE = frozenset(b" \t\n\r\x0b\x0c")


def _header_tokens(data: bytes, start: int, count: int):
    """Read `count` whitespace-separated header tokens, skipping # comments."""
    pos = start
    tokens = []
    while len(tokens) < count:
        while pos < len(data) and (data[pos] in _WHITESPACE or data[pos] == ord("#")):
            if data[pos] == ord("#"):
                nl = data.find(b"\n", pos)
                if nl < 0:
                    raise MalformedHeaderError("unterminated comment")
                pos = nl + 1
            else:
                pos += 1
        if pos >= len(data):
            raise MalformedHeaderError("header ended early")
        end = pos
        while end < len(data) and data[end] not in _WHITESPACE and data[end] != ord("#"):
            end += 1
        tokens.append(data[pos:end])
        pos = end
    return tokens, pos


def read_pgm(data: bytes) -> Pixmap:
    """Parse a binary P5 PGM with maxval 255; comments in the header are accepted."""
    if data[:2] != b"P5":
        raise MalformedHeaderError("not a P5 PGM")
    try:
        (w_tok, h_tok, max_tok), pos = _header_tokens(data, 2, 3)
        width, height, maxval = int(w_tok), int(h_tok), int(max_tok)
    except MalformedHeaderError:
        raise
    except ValueError as exc:
        raise MalformedHeaderError(f"bad header token: {exc}") from None
    if width <= 0 or height <= 0:
        raise MalformedHeaderError(f"bad dimensions {width}x{height}")
    if maxval != 255:
        raise UnsupportedMaxvalError(f"maxval {maxval}, only 255 supported")
    if pos >= len(data) or data[pos] not in _WHITESPACE:
        raise MalformedHeaderError("missing whitespace after maxval")
    pos += 1
    payload = data[pos : pos + width * height]
    if len(payload) < width * height:
        raise TruncatedPayloadError(
            f"need {width * height} payload bytes, got {len(payload)}"
        )
    if len(data) - pos > width * height:
        raise MalformedHeaderError("trailing bytes after payload")
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    return Pixmap(pixels.copy())


def write_pgm(img: Pixmap) -> bytes:
    """Canonical binary P5: fixed header "P5\\n<w> <h>\\n255\\n", no comments."""
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels.tobytes()


def read_raw(data: bytes, width: int, height: int) -> Pixmap:
    """Headerless 8-bit row-major image; dimensions supplied out-of-band."""
    if width <= 0 or height <= 0:
        raise SizeMismatchError(f"bad dimensions {width}x{height}")
    if len(data) != width * height:
        raise SizeMismatchError(
            f"{len(data)} bytes does not match {width}x{height}"
        )
    pixels = np.frombuffer(data, dtype=np.uint8).reshape(height, width)
    return Pixmap(pixels.copy())


def write_raw(img: Pixmap) -> bytes:
    return img.pixels.tobytes()
