"""LSB-family embedding: classic LSB, exhaustion-with-restoration, and the
pixel-locking variant that preserves the histogram with few forced writes.

Intensity levels pair into 128 units {2i, 2i+1}; flipping a pixel's LSB
moves it within its unit, so unit membership is embedding-invariant.  The
restoration schemes track, per unit, how many free pixels ended up on each
value; once either value reaches its quota the unit closes, and after the
message is placed every untouched free pixel is forced ("intentional"
writes) so the final counts hit the quotas exactly.  The quotas equal the
cover's free-pixel counts, which makes histogram preservation an identity,
not an approximation.

The locking variant additionally freezes, per unit, the priority prefix
(under key2) running through the surplus-majority pixels.  Frozen pixels
never change, so the extractor can recompute the identical lock set from
the stego image; the surviving free pixels have matched value counts,
which is what shrinks the intentional phase.

Three keys drive the scheme: key1 encrypts (keystream XOR), key2 ranks
pixels for locking, key3 ranks pixels for traversal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import CapacityError, CorruptStreamError
from .imageio import validate_image
from .payload import HEADER_BITS, frame_message
from .prng import KeyedPrng, prng_mix_array
from .steganalysis import hist_change, histogram, psnr


@dataclass(frozen=True)
class KeySet:
    key1: int  # message encryption
    key2: int  # lock priorities
    key3: int  # traversal order


def keystream_encrypt(msg: bytes, key1: int) -> np.ndarray:
    """Frame the message, then XOR everything with the key1 bit stream.

    Self-inverse on framed streams; the output is balanced pseudo-random
    regardless of the plaintext, which is what keeps LSB flip probability
    at one half.
    """
    frame = frame_message(msg)
    ks = KeyedPrng(key1).bits(frame.size)
    return frame ^ ks


def predict_histogram(h: np.ndarray, p: float) -> np.ndarray:
    """Expected histogram after LSB embedding with flip probability p.

    Each unit's counts mix pairwise:
    h*_2i = p*h_2i+1 + (1-p)*h_2i and symmetrically for h*_2i+1.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("flip probability must lie in [0, 1]")
    h = np.asarray(h, dtype=np.float64)
    if h.shape != (256,):
        raise ValueError("histogram must have 256 entries")
    out = np.empty_like(h)
    out[0::2] = p * h[1::2] + (1.0 - p) * h[0::2]
    out[1::2] = p * h[0::2] + (1.0 - p) * h[1::2]
    return out


# ---------------------------------------------------------------------------
# classic LSB (no histogram repair) - the baseline the attacks break


def lsb_embed(cover: np.ndarray, bits: np.ndarray, key3: int) -> np.ndarray:
    """Write bits into pixel LSBs, pixels visited in key3 priority order."""
    arr = validate_image(cover)
    flat = arr.reshape(-1).copy()
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    if bits.size > flat.size:
        raise CapacityError("need %d pixels, image has %d" % (bits.size, flat.size), flat.size)
    order = np.argsort(prng_mix_array(key3, np.arange(flat.size, dtype=np.uint64)))
    target = order[: bits.size]
    flat[target] = (flat[target] & 0xFE) | bits
    return flat.reshape(arr.shape)


def lsb_extract(stego: np.ndarray, key3: int, nbits: int) -> np.ndarray:
    arr = validate_image(stego)
    flat = arr.reshape(-1)
    if nbits > flat.size:
        raise CapacityError("requested %d bits from %d pixels" % (nbits, flat.size), flat.size)
    order = np.argsort(prng_mix_array(key3, np.arange(flat.size, dtype=np.uint64)))
    return (flat[order[:nbits]] & 1).astype(np.uint8)


# ---------------------------------------------------------------------------
# unit bookkeeping shared by the exhaustion and locking schemes


@dataclass
class LockResult:
    """Per-unit quotas plus the frozen-pixel mask (empty for no locking)."""

    skipped: np.ndarray          # bool per flat pixel index
    quota_even: np.ndarray       # int per unit: free pixels that must end on 2i
    quota_odd: np.ndarray        # int per unit: free pixels that must end on 2i+1
    majority_even: np.ndarray    # bool per unit (ties count as even)
    diff: np.ndarray             # |h_2i - h_2i+1| per unit
    skipped_minority: np.ndarray # minority pixels caught in the lock prefix


def compute_locks(img: np.ndarray, key2: int) -> LockResult:
    """Freeze each unit's key2-priority prefix through its surplus pixels.

    For a unit whose majority value has A more pixels than the minority,
    pixels are ranked by the keyed hash of their index and skipped until
    exactly A majority-value pixels are frozen; minority pixels interleaved
    in that prefix freeze too (they are the price of recomputability).  The
    remaining free pixels count h_min on the majority side and h_min - b on
    the minority side, which become the unit's value quotas.
    """
    arr = validate_image(img)
    flat = arr.reshape(-1)
    h = np.bincount(flat, minlength=256).astype(np.int64)
    skipped = np.zeros(flat.size, dtype=bool)
    quota_even = np.empty(128, dtype=np.int64)
    quota_odd = np.empty(128, dtype=np.int64)
    majority_even = np.empty(128, dtype=bool)
    diff = np.abs(h[0::2] - h[1::2])
    skipped_minority = np.zeros(128, dtype=np.int64)
    pri = prng_mix_array(key2, np.arange(flat.size, dtype=np.uint64))
    units = flat >> 1
    for i in range(128):
        he, ho = int(h[2 * i]), int(h[2 * i + 1])
        majority_even[i] = he >= ho
        if he == ho:
            quota_even[i] = he
            quota_odd[i] = ho
            continue
        a = abs(he - ho)
        maj_val = 2 * i if he > ho else 2 * i + 1
        pos = np.flatnonzero(units == i)
        order = pos[np.argsort(pri[pos])]
        is_maj = flat[order] == maj_val
        end = int(np.searchsorted(np.cumsum(is_maj), a))
        skipped[order[: end + 1]] = True
        b = (end + 1) - a
        skipped_minority[i] = b
        h_min = min(he, ho)
        if he > ho:
            quota_even[i] = h_min
            quota_odd[i] = h_min - b
        else:
            quota_odd[i] = h_min
            quota_even[i] = h_min - b
    return LockResult(skipped, quota_even, quota_odd, majority_even, diff, skipped_minority)


def no_locks(img: np.ndarray) -> LockResult:
    """Exhaustion-scheme bookkeeping: nothing frozen, quotas are the raw counts."""
    arr = validate_image(img)
    h = np.bincount(arr.reshape(-1), minlength=256).astype(np.int64)
    he, ho = h[0::2], h[1::2]
    return LockResult(
        skipped=np.zeros(arr.size, dtype=bool),
        quota_even=he.copy(),
        quota_odd=ho.copy(),
        majority_even=he >= ho,
        diff=np.abs(he - ho),
        skipped_minority=np.zeros(128, dtype=np.int64),
    )


def _free_walk_order(locks: LockResult, size: int, key3: int) -> np.ndarray:
    free = np.flatnonzero(~locks.skipped[:size])
    return free[np.argsort(prng_mix_array(key3, free.astype(np.uint64)))]


def _embed_with_quotas(flat: np.ndarray, locks: LockResult, bits: np.ndarray,
                       key3: int) -> tuple[int, int]:
    """Core writer: place bits in free pixels, close units on quota, then
    force every untouched free pixel so the quotas are met exactly.

    Mutates ``flat``; returns (bits_placed, intentional_count).  Raises
    CapacityError when the stream outlives the open units.
    """
    order = _free_walk_order(locks, flat.size, key3)
    quota_even = locks.quota_even
    quota_odd = locks.quota_odd
    tally_even = np.zeros(128, dtype=np.int64)
    tally_odd = np.zeros(128, dtype=np.int64)
    closed = (quota_even == 0) | (quota_odd == 0)
    untouched: list[list[int]] = [[] for _ in range(128)]
    nbits = bits.size
    placed = 0
    for pos in order:
        u = int(flat[pos]) >> 1
        if closed[u] or placed >= nbits:
            untouched[u].append(pos)
            continue
        b = int(bits[placed])
        placed += 1
        flat[pos] = 2 * u + b
        if b:
            tally_odd[u] += 1
            if tally_odd[u] == quota_odd[u]:
                closed[u] = True
        else:
            tally_even[u] += 1
            if tally_even[u] == quota_even[u]:
                closed[u] = True
    if placed < nbits:
        raise CapacityError(
            "message needs %d bits but only %d fit before every unit closed"
            % (nbits, placed),
            placed,
        )
    intentional = 0
    for u in range(128):
        posns = untouched[u]
        if not posns:
            continue
        need_even = int(quota_even[u] - tally_even[u])
        need_odd = int(quota_odd[u] - tally_odd[u])
        if need_even + need_odd != len(posns):  # broken bookkeeping, never expected
            raise RuntimeError("unit %d fill mismatch" % u)
        first_even = locks.majority_even[u]
        head, tail = (need_even, 2 * u), (need_odd, 2 * u + 1)
        if not first_even:
            head, tail = (need_odd, 2 * u + 1), (need_even, 2 * u)
        k = 0
        for count, value in (head, tail):
            for _ in range(count):
                flat[posns[k]] = value
                k += 1
        intentional += len(posns)
    return placed, intentional


def _extract_with_quotas(flat: np.ndarray, locks: LockResult, key1: int, key3: int) -> bytes:
    """Replay the embedding walk on the stego image and read the frame back."""
    order = _free_walk_order(locks, flat.size, key3)
    quota_even = locks.quota_even
    quota_odd = locks.quota_odd
    tally_even = np.zeros(128, dtype=np.int64)
    tally_odd = np.zeros(128, dtype=np.int64)
    closed = (quota_even == 0) | (quota_odd == 0)
    max_bits = int(np.sum(quota_even + quota_odd))
    collected = np.empty(max_bits, dtype=np.uint8)
    got = 0
    needed = None
    header_ks = KeyedPrng(key1).bits(HEADER_BITS)
    for pos in order:
        u = int(flat[pos]) >> 1
        if closed[u]:
            continue
        b = int(flat[pos]) & 1
        collected[got] = b
        got += 1
        if b:
            tally_odd[u] += 1
            if tally_odd[u] == quota_odd[u]:
                closed[u] = True
        else:
            tally_even[u] += 1
            if tally_even[u] == quota_even[u]:
                closed[u] = True
        if needed is None and got == HEADER_BITS:
            header = collected[:HEADER_BITS] ^ header_ks
            nbits = int.from_bytes(np.packbits(header).tobytes(), "big")
            if nbits % 8 or nbits > max_bits - HEADER_BITS:
                raise CorruptStreamError(
                    "implausible payload length %d: wrong keys or not a stego image" % nbits
                )
            needed = HEADER_BITS + nbits
        if needed is not None and got >= needed:
            break
    if needed is None or got < needed:
        raise CorruptStreamError("stream ended before the declared payload")
    ks = KeyedPrng(key1).bits(needed)
    plain = collected[:needed] ^ ks
    return np.packbits(plain[HEADER_BITS:]).tobytes()[: (needed - HEADER_BITS) // 8]


def _check_histogram_preserved(cover: np.ndarray, stego: np.ndarray) -> None:
    if not np.array_equal(histogram(cover), histogram(stego)):  # contract, never expected
        raise RuntimeError("histogram restoration failed")


def _report(method: str, cover, stego, keys, used_bits: int, intentional: int) -> dict:
    return {
        "method": method,
        "capacity_bits": effective_capacity(cover, keys, method),
        "used_bits": int(used_bits),
        "intentional_count": int(intentional),
        "psnr_db": float(psnr(cover, stego)),
        "hist_change": hist_change(cover),
    }


def improved_embed(cover: np.ndarray, msg: bytes, keys: KeySet) -> tuple[np.ndarray, dict]:
    """Locking scheme: encrypt, lock, place bits, then restore the histogram."""
    arr = validate_image(cover)
    bits = keystream_encrypt(msg, keys.key1)
    locks = compute_locks(arr, keys.key2)
    flat = arr.reshape(-1).copy()
    placed, intentional = _embed_with_quotas(flat, locks, bits, keys.key3)
    stego = flat.reshape(arr.shape)
    _check_histogram_preserved(arr, stego)
    return stego, _report("lsbplus-improved", arr, stego, keys, placed, intentional)


def improved_extract(stego: np.ndarray, keys: KeySet) -> bytes:
    """Recompute locks on the stego image (sound: the frozen prefix is
    value-stable and the histogram is exactly preserved), replay the walk,
    decrypt."""
    arr = validate_image(stego)
    locks = compute_locks(arr, keys.key2)
    return _extract_with_quotas(arr.reshape(-1), locks, keys.key1, keys.key3)


def lsbplus_embed(cover: np.ndarray, msg: bytes, key3: int, key1: int) -> tuple[np.ndarray, dict]:
    """Exhaustion scheme: no locks, every unit pixel is free."""
    arr = validate_image(cover)
    bits = keystream_encrypt(msg, key1)
    locks = no_locks(arr)
    flat = arr.reshape(-1).copy()
    placed, intentional = _embed_with_quotas(flat, locks, bits, key3)
    stego = flat.reshape(arr.shape)
    _check_histogram_preserved(arr, stego)
    keys = KeySet(key1=key1, key2=0, key3=key3)
    return stego, _report("lsbplus", arr, stego, keys, placed, intentional)


def lsbplus_extract(stego: np.ndarray, key3: int, key1: int) -> bytes:
    arr = validate_image(stego)
    locks = no_locks(arr)
    return _extract_with_quotas(arr.reshape(-1), locks, key1, key3)


def effective_capacity(img: np.ndarray, keys: KeySet, method: str = "lsbplus-improved") -> int:
    """Framed-bit capacity measured by a dry run of the closure simulation.

    The simulated stream is the key1 keystream itself, which any encrypted
    message approximates; a specific message may fit a few bits more or
    fewer.  Deterministic given (image, keys).
    """
    arr = validate_image(img)
    if method == "lsb":
        return arr.size
    if method == "lsbplus":
        locks = no_locks(arr)
    elif method == "lsbplus-improved":
        locks = compute_locks(arr, keys.key2)
    else:
        raise ValueError("unknown method %r" % method)
    total_free = int(np.sum(~locks.skipped))
    bits = KeyedPrng(keys.key1).bits(total_free)
    flat = arr.reshape(-1).copy()
    try:
        placed, _ = _embed_with_quotas(flat, locks, bits, keys.key3)
    except CapacityError as e:
        return e.capacity_bits
    return placed
