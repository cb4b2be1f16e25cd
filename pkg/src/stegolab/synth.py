"""Synthetic grayscale covers for experiments and tests.

Multi-octave value noise plus a gentle illumination gradient gives images
with smooth regions, texture, and natural-looking histograms.  Everything
derives from the keyed hash of (seed, lattice index), so a given (size,
seed, texture) always yields the identical image.
"""

from __future__ import annotations

import numpy as np

from .prng import prng_mix, prng_mix_array


def _value_noise(width: int, height: int, cell: float, seed: int) -> np.ndarray:
    gw = int(width / cell) + 2
    gh = int(height / cell) + 2
    lattice = prng_mix_array(seed, np.arange(gw * gh, dtype=np.uint64))
    g = (lattice.astype(np.float64) / 2.0 ** 64).reshape(gh, gw)
    xs = np.arange(width) / cell
    ys = np.arange(height) / cell
    x0 = xs.astype(np.int64)
    y0 = ys.astype(np.int64)
    fx = xs - x0
    fy = ys - y0
    sx = fx * fx * (3.0 - 2.0 * fx)
    sy = fy * fy * (3.0 - 2.0 * fy)
    g00 = g[np.ix_(y0, x0)]
    g10 = g[np.ix_(y0, x0 + 1)]
    g01 = g[np.ix_(y0 + 1, x0)]
    g11 = g[np.ix_(y0 + 1, x0 + 1)]
    top = g00 * (1.0 - sx)[None, :] + g10 * sx[None, :]
    bot = g01 * (1.0 - sx)[None, :] + g11 * sx[None, :]
    return top * (1.0 - sy)[:, None] + bot * sy[:, None]


def synthetic_cover(width: int, height: int, seed: int, texture: float = 1.0,
                    pair_imbalance: float = 0.25, spike_prob: float = 0.0,
                    rough_fraction: float = 0.0, rough_amp: float = 0.2) -> np.ndarray:
    """Natural-looking test image.

    ``texture`` scales the fine-grain component.  ``pair_imbalance`` warps
    the quantization staircase with per-level random widths: adjacent
    intensity levels then hold genuinely unequal pixel counts, the jagged
    pair structure real photographs show (a perfectly smooth quantizer
    would balance every {2i, 2i+1} pair, which no natural capture does).
    ``spike_prob`` salts in isolated large-amplitude pixels.
    ``rough_fraction`` covers that fraction of the area with dense heavy
    grain (foliage-like patches that resist low-rank approximation) while
    the rest stays clean.
    """
    if width < 4 or height < 4:
        raise ValueError("image too small")
    field = (
        0.55 * _value_noise(width, height, max(width, height) / 5.0, prng_mix(seed, 1))
        + 0.30 * _value_noise(width, height, max(width, height) / 16.0, prng_mix(seed, 2))
        + 0.15 * _value_noise(width, height, max(width, height) / 48.0, prng_mix(seed, 3))
    )
    yy, xx = np.mgrid[0:height, 0:width]
    field = field + 0.15 * (xx / width) + 0.1 * (yy / height)
    fine = prng_mix_array(prng_mix(seed, 4), np.arange(width * height, dtype=np.uint64))
    fine = (fine.astype(np.float64) / 2.0 ** 64 - 0.5).reshape(height, width)
    field = field + texture * 0.045 * fine
    lo, hi = field.min(), field.max()
    u = (field - lo) / (hi - lo)
    if rough_fraction > 0.0:
        mask_field = _value_noise(width, height, max(width, height) / 7.0, prng_mix(seed, 7))
        cut = np.quantile(mask_field, 1.0 - rough_fraction)
        rough = mask_field > cut
        grain = prng_mix_array(prng_mix(seed, 8), np.arange(width * height, dtype=np.uint64))
        grain = (grain.astype(np.float64) / 2.0 ** 64 - 0.5).reshape(height, width)
        u = np.clip(u + rough * grain * (2.0 * rough_amp), 0.0, 1.0)
    # warped staircase: level v covers a band of width 1 +- jitter
    s = min(max(pair_imbalance, 0.0), 1.0)
    jitter = prng_mix_array(prng_mix(seed, 5), np.arange(256, dtype=np.uint64))
    widths = 1.0 - 0.75 * s + 1.5 * s * (jitter.astype(np.float64) / 2.0 ** 64)
    edges = np.cumsum(widths)
    edges /= edges[-1]
    img = np.searchsorted(edges, u * (1.0 - 1e-12), side="right").astype(np.float64)
    if spike_prob > 0.0:
        z = prng_mix_array(prng_mix(seed, 6), np.arange(width * height, dtype=np.uint64))
        uu = (z >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
        hit = (uu < spike_prob).reshape(height, width)
        amp = 20.0 + 60.0 * ((z & np.uint64(1023)).astype(np.float64) / 1023.0)
        sign = np.where((z >> np.uint64(10)) & np.uint64(1), 1.0, -1.0)
        img = img + hit * (sign * amp).reshape(height, width)
    return np.clip(img, 0, 255).astype(np.uint8)


def synthetic_corpus(count: int, width: int, height: int, master_seed: int) -> list[np.ndarray]:
    """Deterministic batch of covers with varied texture levels."""
    out = []
    for i in range(count):
        texture = 0.4 + 1.6 * (i / max(count - 1, 1))
        out.append(synthetic_cover(width, height, prng_mix(master_seed, i + 1), texture))
    return out
