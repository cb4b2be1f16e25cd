"""Message framing shared by the embedding pipelines.

A framed stream is a 32-bit big-endian bit-length header followed by the
message bits, most-significant bit of each byte first.
"""

from __future__ import annotations

import numpy as np

from .exceptions import TruncatedStreamError

HEADER_BITS = 32


def frame_message(msg: bytes) -> np.ndarray:
    nbits = 8 * len(msg)
    if nbits >= 1 << HEADER_BITS:
        raise ValueError("message too long to frame")
    header = np.frombuffer(nbits.to_bytes(4, "big"), dtype=np.uint8)
    payload = np.frombuffer(msg, dtype=np.uint8)
    return np.unpackbits(np.concatenate([header, payload]))


def parse_frame(bits: np.ndarray) -> bytes:
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    if bits.size < HEADER_BITS:
        raise TruncatedStreamError("stream shorter than the 32-bit header")
    nbits = int.from_bytes(np.packbits(bits[:HEADER_BITS]).tobytes(), "big")
    if nbits > bits.size - HEADER_BITS:
        raise TruncatedStreamError(
            "header declares %d bits but only %d available" % (nbits, bits.size - HEADER_BITS)
        )
    payload = bits[HEADER_BITS : HEADER_BITS + nbits]
    return np.packbits(payload).tobytes()[: nbits // 8]
