"""Detection and quality metrics: histograms, chi-square pair test, PSNR,
co-occurrence matrices, pair-oscillation score, bit error rate, and the
salt-and-pepper channel used in robustness experiments.

All functions are pure; the noise channel draws from the keyed generator,
so identical seeds reproduce identical degradations.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammaincc

from .exceptions import DegenerateDataError
from .imageio import validate_image
from .prng import prng_mix_array


def histogram(img: np.ndarray) -> np.ndarray:
    """Exact 256-bin intensity counts."""
    arr = validate_image(img)
    return np.bincount(arr.ravel(), minlength=256).astype(np.int64)


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB; +inf when the images are identical."""
    x = validate_image(a).astype(np.float64)
    y = validate_image(b).astype(np.float64)
    if x.shape != y.shape:
        raise ValueError("psnr: shape mismatch %r vs %r" % (x.shape, y.shape))
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(255.0 ** 2 / mse)


def chi_square_attack(img: np.ndarray, min_expected: float = 4.0) -> tuple[float, int, float]:
    """Pair-of-values chi-square test for LSB-style embedding.

    For each intensity pair {2i, 2i+1} the expected count under full LSB
    randomization is the pair mean.  Pairs whose expectation falls below
    ``min_expected`` are dropped (standard small-count practice).  Returns
    (chi2, dof, p) where p is the upper tail of the chi-square law: values
    near 1 mean the observed pairs are as balanced as random embedding
    would make them, i.e. LSB-like stego is suspected.
    """
    h = histogram(img).astype(np.float64)
    even, odd = h[0::2], h[1::2]
    expected = (even + odd) / 2.0
    keep = expected >= min_expected
    kept = int(keep.sum())
    if kept < 2:
        raise DegenerateDataError("chi_square_attack: fewer than 2 usable pairs")
    chi2 = float(np.sum((even[keep] - expected[keep]) ** 2 / expected[keep]))
    dof = kept - 1
    p = float(gammaincc(dof / 2.0, chi2 / 2.0))
    return chi2, dof, p


def cooccurrence(img: np.ndarray, dx: int, dy: int) -> np.ndarray:
    """256x256 joint counts of intensities at spatial offset (dx, dy).

    dx is the column offset, dy the row offset; only in-bounds pairs are
    counted (no wraparound), so the total equals
    (width-|dx|) * (height-|dy|).
    """
    arr = validate_image(img)
    h, w = arr.shape
    if abs(dx) >= w or abs(dy) >= h:
        raise ValueError("offset (%d,%d) exceeds image extent" % (dx, dy))
    xs = slice(0, w - dx) if dx >= 0 else slice(-dx, w)
    xt = slice(dx, w) if dx >= 0 else slice(0, w + dx)
    ys = slice(0, h - dy) if dy >= 0 else slice(-dy, h)
    yt = slice(dy, h) if dy >= 0 else slice(0, h + dy)
    src = arr[ys, xs].astype(np.int64).ravel()
    dst = arr[yt, xt].astype(np.int64).ravel()
    counts = np.bincount(src * 256 + dst, minlength=256 * 256)
    return counts.reshape(256, 256)


def hist_change(img: np.ndarray) -> int:
    """Sum over the 128 LSB pairs of |count(2i+1) - count(2i)|."""
    h = histogram(img)
    return int(np.sum(np.abs(h[1::2] - h[0::2])))


def salt_pepper(img: np.ndarray, density: float, seed: int) -> np.ndarray:
    """Replace each pixel by 0 or 255 (equal odds) with probability ``density``.

    Per-pixel decisions come from the keyed hash of the pixel index, so the
    channel is reproducible and order-independent.
    """
    if not 0.0 <= density <= 1.0:
        raise ValueError("density must lie in [0, 1]")
    arr = validate_image(img).copy()
    flat = arr.reshape(-1)
    z = prng_mix_array(seed, np.arange(flat.size, dtype=np.uint64))
    u = (z >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
    hit = u < density
    salt = (z & np.uint64(1)).astype(bool)
    flat[hit & salt] = 255
    flat[hit & ~salt] = 0
    return arr


def snr_db(reference: np.ndarray, degraded: np.ndarray) -> float:
    """Realized signal-to-noise power ratio in dB; +inf when identical."""
    x = validate_image(reference).astype(np.float64)
    y = validate_image(degraded).astype(np.float64)
    if x.shape != y.shape:
        raise ValueError("snr_db: shape mismatch")
    noise = float(np.sum((y - x) ** 2))
    if noise == 0.0:
        return float("inf")
    return 10.0 * np.log10(float(np.sum(x ** 2)) / noise)


def ber(a, b) -> float:
    """Bit error rate: Hamming distance over length."""
    x = np.asarray(a).ravel()
    y = np.asarray(b).ravel()
    if x.size != y.size:
        raise ValueError("ber: length mismatch %d vs %d" % (x.size, y.size))
    if x.size == 0:
        return 0.0
    return float(np.count_nonzero(x.astype(np.uint8) != y.astype(np.uint8)) / x.size)
