"""Spread-spectrum watermark: keyed carriers, perceptual embedding, decoder.

Each hidden bit owns a disjoint subset of the band coefficients (TDMA):
sample i carries exactly one bit j(i), and the watermarked coefficient is

    y[i] = x[i] + a[i] * m[j(i)] * g[i]

with g the +-1 carrier and a[i] a perceptual weight.  The detector is a
decoder: it answers "yes" iff the sign-correlation decode reproduces the
reference message bit-for-bit.

A seed-keyed interleaver assigns samples to bits.  Disabling it (test
keys only) makes each bit live on just three zigzag positions, which is
what a position-focused attack exploits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from . import blockdct, kvtext, rng
from .blockdct import DctImage, band_flat_indices, flat_view, from_flat
from .pixmap import Pixmap, mse_from_psnr, psnr

KEY_FORMAT = "ssw-key/1"
BAND_VERSION = "zigzag-1-12/1"

# Frequency sensitivity table (8x8, strictly positive), the fixed base of
# the perceptual slack model.  Indexed [u][v] like the DCT coefficients.
BASE_SENSITIVITY = np.array(
    [
        [1.40, 1.01, 1.16, 1.66, 2.40, 3.43, 4.79, 6.56],
        [1.01, 1.45, 1.32, 1.52, 2.00, 2.71, 3.67, 4.93],
        [1.16, 1.32, 2.24, 2.59, 2.98, 3.64, 4.60, 5.88],
        [1.66, 1.52, 2.59, 3.77, 4.55, 5.30, 6.28, 7.60],
        [2.40, 2.00, 2.98, 4.55, 6.15, 7.46, 8.71, 10.17],
        [3.43, 2.71, 3.64, 5.30, 7.46, 9.62, 11.58, 13.51],
        [4.79, 3.67, 4.60, 6.28, 8.71, 11.58, 14.50, 17.29],
        [6.56, 4.93, 5.88, 7.60, 10.17, 13.51, 17.29, 21.15],
    ]
)

LUMINANCE_EXPONENT = 0.649
CONTRAST_EXPONENT = 0.7
LUMINANCE_FLOOR = 1e-3
# DC of an orthonormal 8x8 block DCT of (pixel - 128); adding this converts
# back to absolute luminance terms (8 * block mean).
DC_FULL_SCALE = 8.0 * 128.0


class KeySpecError(ValueError):
    pass


class CalibrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class WatermarkKey:
    """Seed-derived watermark secret.

    interleave=False is a test-only mode that disables the sample-to-bit
    interleaver, leaving each bit on a fixed, small set of positions.
    """

    seed: int
    n_bits: int = 64
    interleave: bool = True

    def __post_init__(self):
        if self.n_bits <= 0:
            raise KeySpecError(f"n_bits must be positive, got {self.n_bits}")

    def save(self) -> str:
        return kvtext.dumps(
            {
                "format": KEY_FORMAT,
                "seed": self.seed,
                "n_bits": self.n_bits,
                "band": BAND_VERSION,
                "interleave": str(self.interleave).lower(),
            }
        )

    @staticmethod
    def load(text: str) -> "WatermarkKey":
        items = kvtext.loads(text)
        if items.get("format") != KEY_FORMAT:
            raise KeySpecError(f"unsupported key format {items.get('format')!r}")
        if items.get("band", BAND_VERSION) != BAND_VERSION:
            raise KeySpecError(f"unsupported band definition {items.get('band')!r}")
        return WatermarkKey(
            seed=int(items["seed"]),
            n_bits=int(items["n_bits"]),
            interleave=kvtext.parse_bool(items.get("interleave", "true")),
        )


@dataclass(frozen=True)
class KeyMaterial:
    """Key expanded for one image geometry; pure function of (key, dims)."""

    n_bits: int
    band_flat: np.ndarray  # flat indices of the band, ascending
    bit_of: np.ndarray  # bit index owning each band sample
    carrier: np.ndarray  # +-1.0 carrier chip per band sample
    message: np.ndarray  # reference message, +-1 ints, length n_bits
    n_samples: int  # total flat samples (all coefficients)


@lru_cache(maxsize=32)
def _material(seed: int, n_bits: int, interleave: bool, width: int, height: int) -> KeyMaterial:
    if width % blockdct.BLOCK or height % blockdct.BLOCK:
        raise KeySpecError(f"dimensions {width}x{height} not divisible by 8")
    n_blocks = (width // blockdct.BLOCK) * (height // blockdct.BLOCK)
    band = band_flat_indices(n_blocks)
    m = band.size
    if n_bits > m:
        raise KeySpecError(f"n_bits {n_bits} exceeds band size {m}")
    if interleave:
        order = rng.permutation(seed, "interleave", m)
    else:
        order = np.arange(m)
    # round-robin over the (possibly permuted) band: class sizes differ by <= 1
    bit_of = np.empty(m, dtype=np.int64)
    bit_of[order] = np.arange(m) % n_bits
    carrier = rng.signs(seed, "carrier", np.arange(m))
    message = rng.signs(seed, "message", np.arange(n_bits)).astype(np.int64)
    return KeyMaterial(
        n_bits=n_bits,
        band_flat=band,
        bit_of=bit_of,
        carrier=carrier,
        message=message,
        n_samples=n_blocks * 64,
    )


def material(key: WatermarkKey, width: int, height: int) -> KeyMaterial:
    return _material(key.seed, key.n_bits, key.interleave, width, height)


@dataclass(frozen=True)
class EnergyProfile:
    """Per-sample embedding weight a[i] >= 0, zero outside the band."""

    a: np.ndarray

    def __post_init__(self):
        if np.any(self.a < 0):
            raise ValueError("energy profile has negative entries")

    def scaled(self, factor: float) -> "EnergyProfile":
        return EnergyProfile(self.a * factor)


def watson_slack(d: DctImage) -> np.ndarray:
    """Per-coefficient just-noticeable slack, flat order, strictly positive.

    Base sensitivity t(u,v) is luminance-masked by the block's relative
    brightness (floored at a small epsilon for dark blocks) and
    contrast-masked against the coefficient magnitude.
    """
    lum = d.coeffs[:, 0, 0] + DC_FULL_SCALE  # 8 * block mean, >= 0
    lum_mean = max(float(np.mean(lum)), LUMINANCE_FLOOR)
    ratio = np.maximum(lum / lum_mean, LUMINANCE_FLOOR)
    t_lum = BASE_SENSITIVITY[None, :, :] * (ratio**LUMINANCE_EXPONENT)[:, None, None]
    slack = np.maximum(
        t_lum, np.abs(d.coeffs) ** CONTRAST_EXPONENT * t_lum**0.3
    )
    return slack[:, blockdct.U_BY_RANK, blockdct.V_BY_RANK].reshape(-1)


def make_energy_profile(d: DctImage, key: WatermarkKey, k: float) -> EnergyProfile:
    """a[i] = k * slack[i] on the band, zero elsewhere."""
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    mat = material(key, d.width, d.height)
    a = np.zeros(mat.n_samples)
    slack = watson_slack(d)
    a[mat.band_flat] = k * slack[mat.band_flat]
    return EnergyProfile(a)


def embed(x: DctImage, key: WatermarkKey, profile: EnergyProfile) -> DctImage:
    mat = material(key, x.width, x.height)
    if profile.a.shape != (mat.n_samples,):
        raise ValueError("profile shape does not match the image")
    flat = flat_view(x)
    chips = mat.message[mat.bit_of] * mat.carrier
    flat[mat.band_flat] += profile.a[mat.band_flat] * chips
    return from_flat(flat, x)


def decode(y: DctImage, key: WatermarkKey) -> np.ndarray:
    """Per-bit sign correlation; exact zero decodes as +1."""
    mat = material(key, y.width, y.height)
    band = flat_view(y)[mat.band_flat]
    corr = np.bincount(mat.bit_of, weights=band * mat.carrier, minlength=mat.n_bits)
    return np.where(corr >= 0.0, 1, -1).astype(np.int64)


def detect(img: Pixmap, key: WatermarkKey) -> bool:
    """True iff the decoded message equals the reference message exactly."""
    mat = material(key, img.width, img.height)
    bits = decode(blockdct.forward_dct(img), key)
    return bool(np.array_equal(bits, mat.message))


def embed_image(
    img: Pixmap, key: WatermarkKey, k: float
) -> tuple[Pixmap, EnergyProfile]:
    """Pixel-domain embedding round trip at strength k."""
    d = blockdct.forward_dct(img)
    profile = make_energy_profile(d, key, k)
    marked, _ = blockdct.inverse_dct(embed(d, key, profile))
    return marked, profile


def calibrate_k(
    x: DctImage,
    key: WatermarkKey,
    target_psnr_db: float,
    tolerance_db: float = 0.1,
    max_iters: int = 64,
) -> float:
    """Binary search for k so the realized embedding PSNR hits the target.

    Realized PSNR is measured after rounding and clipping, against the
    image reconstructed from x.  PSNR is monotone decreasing in k.
    """
    if not math.isfinite(target_psnr_db) or target_psnr_db <= 20.0:
        raise CalibrationError(f"unreachable target {target_psnr_db} dB")
    reference, _ = blockdct.inverse_dct(x)
    mat = material(key, x.width, x.height)
    slack_band = watson_slack(x)[mat.band_flat]

    def realized(k: float) -> float:
        profile_a = np.zeros(mat.n_samples)
        profile_a[mat.band_flat] = k * slack_band
        marked, _ = blockdct.inverse_dct(embed(x, key, EnergyProfile(profile_a)))
        return psnr(reference, marked).psnr_db

    # Parseval predicts pixel MSE = k^2 * sum(slack^2) / N exactly before
    # rounding, giving a near-perfect starting bracket.
    energy = float(np.sum(slack_band**2))
    if energy == 0.0:
        raise CalibrationError("zero slack energy, cannot embed")
    k0 = math.sqrt(mse_from_psnr(target_psnr_db) * x.n_samples / energy)
    lo, hi = k0 / 2.0, k0 * 2.0
    for _ in range(8):
        if realized(lo) > target_psnr_db:
            break
        lo /= 2.0
    for _ in range(8):
        if realized(hi) < target_psnr_db:
            break
        hi *= 2.0

    for _ in range(max_iters):
        mid = 0.5 * (lo + hi)
        got = realized(mid)
        if abs(got - target_psnr_db) <= tolerance_db * 0.95:
            return mid
        if got > target_psnr_db:
            lo = mid  # too faint, push harder
        else:
            hi = mid
    raise CalibrationError(
        f"no k within {tolerance_db} dB of {target_psnr_db} dB after {max_iters} iterations"
    )


def attacker_key(true_key: WatermarkKey, seed_offset: int = 1) -> WatermarkKey:
    """A key with the right band but the wrong secret, for estimation."""
    return replace(true_key, seed=true_key.seed + seed_offset)
