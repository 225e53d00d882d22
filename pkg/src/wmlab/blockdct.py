"""Orthonormal 8x8 block DCT-II, zigzag addressing, and the embedding band.

Pixels are level-shifted by 128 before the forward transform, so a flat
mid-gray image transforms to all-zero coefficients.  Every coefficient
has a canonical flat sample index ``block * 64 + zigzag_rank(u, v)``;
the attack math works on that flat vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import dctn, idctn

from .pixmap import Pixmap, PixmapError

BLOCK = 8
LEVEL_SHIFT = 128.0

# Standard JPEG zigzag walk: entry k is the linear index u*8+v of rank k.
ZIGZAG_ORDER = (
    0, 1, 8, 16, 9, 2, 3, 10,
    17, 24, 32, 25, 18, 11, 4, 5,
    12, 19, 26, 33, 40, 48, 41, 34,
    27, 20, 13, 6, 7, 14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36,
    29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46,
    53, 60, 61, 54, 47, 55, 62, 63,
)

_ORDER = np.asarray(ZIGZAG_ORDER, dtype=np.int64)
U_BY_RANK = _ORDER // BLOCK
V_BY_RANK = _ORDER % BLOCK
RANK_OF = np.empty((BLOCK, BLOCK), dtype=np.int64)
RANK_OF[U_BY_RANK, V_BY_RANK] = np.arange(64)

# Zigzag ranks carrying the watermark: the 12 lowest-frequency AC positions.
BAND_RANKS = tuple(range(1, 13))


class BlockShapeError(PixmapError):
    pass


@dataclass(frozen=True, eq=False)
class DctImage:
    """Per-block 8x8 DCT coefficients; coeffs has shape (n_blocks, 8, 8)."""

    coeffs: np.ndarray
    blocks_x: int
    blocks_y: int
    width: int
    height: int

    def __post_init__(self):
        if self.coeffs.shape != (self.blocks_x * self.blocks_y, BLOCK, BLOCK):
            raise BlockShapeError(
                f"coeffs shape {self.coeffs.shape} does not match "
                f"{self.blocks_x}x{self.blocks_y} blocks"
            )
        if self.width != self.blocks_x * BLOCK or self.height != self.blocks_y * BLOCK:
            raise BlockShapeError("dimensions not consistent with block counts")

    @property
    def n_blocks(self) -> int:
        return self.blocks_x * self.blocks_y

    @property
    def n_samples(self) -> int:
        return self.n_blocks * 64

    def copy(self) -> "DctImage":
        return DctImage(
            self.coeffs.copy(), self.blocks_x, self.blocks_y, self.width, self.height
        )


@dataclass(frozen=True)
class CoeffIndex:
    """One coefficient address: (block, u, v) and its flat sample index."""

    block: int
    u: int
    v: int
    flat: int


def zigzag_rank(u: int, v: int) -> int:
    if not (0 <= u < BLOCK and 0 <= v < BLOCK):
        raise IndexError(f"(u, v) = ({u}, {v}) outside the 8x8 block")
    return int(RANK_OF[u, v])


def coeff_index(block: int, u: int, v: int) -> CoeffIndex:
    return CoeffIndex(block, u, v, block * 64 + zigzag_rank(u, v))


def coeff_index_from_flat(flat: int) -> CoeffIndex:
    block, rank = divmod(flat, 64)
    return CoeffIndex(block, int(U_BY_RANK[rank]), int(V_BY_RANK[rank]), flat)


def embedding_band() -> list[tuple[int, int]]:
    """The 12 lowest-frequency AC positions in zigzag order, DC excluded."""
    return [(int(U_BY_RANK[r]), int(V_BY_RANK[r])) for r in BAND_RANKS]


def band_flat_indices(n_blocks: int) -> np.ndarray:
    """Flat indices of the embedding band, ascending (block-major)."""
    ranks = np.asarray(BAND_RANKS, dtype=np.int64)
    return (np.arange(n_blocks, dtype=np.int64)[:, None] * 64 + ranks).reshape(-1)


def forward_dct(img: Pixmap) -> DctImage:
    if img.width % BLOCK or img.height % BLOCK:
        raise BlockShapeError(
            f"{img.width}x{img.height} not divisible by {BLOCK}"
        )
    bx, by = img.width // BLOCK, img.height // BLOCK
    shifted = img.pixels.astype(np.float64) - LEVEL_SHIFT
    blocks = (
        shifted.reshape(by, BLOCK, bx, BLOCK)
        .transpose(0, 2, 1, 3)
        .reshape(by * bx, BLOCK, BLOCK)
    )
    coeffs = dctn(blocks, axes=(1, 2), norm="ortho")
    return DctImage(coeffs, bx, by, img.width, img.height)


def inverse_dct_float(d: DctImage) -> np.ndarray:
    """Pixel-domain reconstruction before rounding, as float64 (h, w)."""
    blocks = idctn(d.coeffs, axes=(1, 2), norm="ortho") + LEVEL_SHIFT
    return (
        blocks.reshape(d.blocks_y, d.blocks_x, BLOCK, BLOCK)
        .transpose(0, 2, 1, 3)
        .reshape(d.height, d.width)
    )


def quantize_u8(recon: np.ndarray) -> tuple[Pixmap, int]:
    """Round to nearest integer and clip to [0, 255]; returns the clip count."""
    rounded = np.rint(recon)
    clipped = int(np.count_nonzero((rounded < 0.0) | (rounded > 255.0)))
    return Pixmap(np.clip(rounded, 0.0, 255.0).astype(np.uint8)), clipped


def inverse_dct(d: DctImage) -> tuple[Pixmap, int]:
    """Inverse transform, +128 shift, rounding and clipping.

    Returns (image, number_of_clipped_pixels).
    """
    return quantize_u8(inverse_dct_float(d))


def flat_view(d: DctImage) -> np.ndarray:
    """Copy of all coefficients in flat order (block-major, zigzag in block)."""
    return d.coeffs[:, U_BY_RANK, V_BY_RANK].reshape(-1)


def from_flat(flat: np.ndarray, like: DctImage) -> DctImage:
    """Rebuild a DctImage from a flat coefficient vector."""
    if flat.shape != (like.n_samples,):
        raise BlockShapeError(f"flat length {flat.shape} != {like.n_samples}")
    coeffs = np.empty_like(like.coeffs)
    coeffs[:, U_BY_RANK, V_BY_RANK] = flat.reshape(like.n_blocks, 64)
    return DctImage(coeffs, like.blocks_x, like.blocks_y, like.width, like.height)
