"""Deterministic synthetic grayscale scenes used as test imagery.

Scenes are sums of random low-frequency cosine waves plus a little
mid-frequency detail and fine texture, mapped to mean ~128.  They are
smooth enough that a block-DCT watermark decodes reliably, while still
carrying nonzero energy in every coefficient band.
"""

from __future__ import annotations

import numpy as np

from . import rng
from .pixmap import Pixmap

FIXTURE_SEEDS = tuple(range(101, 111))


def smooth_scene(
    width: int = 512,
    height: int = 512,
    seed: int = 0,
    contrast: float = 34.0,
    detail: float = 5.0,
    texture_sigma: float = 1.2,
) -> Pixmap:
    """A smooth random scene with mild detail and fine texture."""
    y, x = np.mgrid[0:height, 0:width].astype(np.float64)

    def wave_sum(n_waves: int, min_wavelength: float, max_wavelength: float, label: str):
        k = np.arange(n_waves)
        wavelength = min_wavelength * (max_wavelength / min_wavelength) ** rng.uniform(
            seed, label + ":wl", k
        )
        angle = 2.0 * np.pi * rng.uniform(seed, label + ":ang", k)
        phase = 2.0 * np.pi * rng.uniform(seed, label + ":ph", k)
        amp = 0.5 + rng.uniform(seed, label + ":amp", k)
        field = np.zeros_like(x)
        for i in range(n_waves):
            fx = np.cos(angle[i]) / wavelength[i]
            fy = np.sin(angle[i]) / wavelength[i]
            field += amp[i] * np.cos(2.0 * np.pi * (fx * x + fy * y) + phase[i])
        return field

    base = wave_sum(10, 96.0, 512.0, "scene-base")
    base /= max(np.std(base), 1e-9)
    mid = wave_sum(4, 20.0, 64.0, "scene-mid")
    mid /= max(np.std(mid), 1e-9)

    img = 128.0 + contrast * base + detail * mid
    if texture_sigma > 0.0:
        noise = rng.gaussian(seed, "scene-texture", np.arange(x.size)).reshape(x.shape)
        img += texture_sigma * noise
    return Pixmap(np.clip(np.rint(img), 0, 255).astype(np.uint8))


def fixture_set(count: int = 10, size: int = 512) -> list[Pixmap]:
    """The standard deterministic scene collection."""
    seeds = FIXTURE_SEEDS if count <= len(FIXTURE_SEEDS) else range(101, 101 + count)
    return [smooth_scene(size, size, seed=s) for s in list(seeds)[:count]]
