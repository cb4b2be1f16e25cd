"""8-bit grayscale images: binary PGM codec and block/matrix conversion.

Images are plain 2-D ``numpy.uint8`` arrays (height x width, row-major).
``to_blocks`` rearranges an image into the column-per-block matrix form the
sparse-coding pipeline works on; ``from_blocks`` inverts it, quantizing
real values back to pixels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import PgmFormatError


def validate_image(img: np.ndarray) -> np.ndarray:
    arr = np.asarray(img)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError("image must be a non-empty 2-D array")
    if arr.dtype != np.uint8:
        if np.any(arr < 0) or np.any(arr > 255):
            raise ValueError("pixel intensities must lie in [0, 255]")
        arr = arr.astype(np.uint8)
    return arr


def _read_header_token(data: bytes, pos: int) -> tuple[bytes, int]:
    # skip whitespace and '#' comments that run to end of line
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c in b" \t\r\n":
            pos += 1
        elif c == b"#":
            while pos < n and data[pos : pos + 1] not in b"\r\n":
                pos += 1
        else:
            break
    start = pos
    while pos < n and data[pos : pos + 1] not in b" \t\r\n":
        pos += 1
    if start == pos:
        raise PgmFormatError("truncated PGM header")
    return data[start:pos], pos


def read_pgm(data: bytes) -> np.ndarray:
    """Parse binary PGM (magic P5, maxval <= 255) into an image array."""
    if not isinstance(data, (bytes, bytearray, memoryview)):
        raise TypeError("read_pgm expects a byte sequence")
    data = bytes(data)
    magic, pos = _read_header_token(data, 0)
    if magic != b"P5":
        raise PgmFormatError("unsupported magic %r (only binary P5 is handled)" % magic)
    fields = []
    for _ in range(3):
        tok, pos = _read_header_token(data, pos)
        try:
            fields.append(int(tok))
        except ValueError:
            raise PgmFormatError("non-numeric header field %r" % tok) from None
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise PgmFormatError("image dimensions must be positive")
    if not (0 < maxval <= 255):
        raise PgmFormatError("maxval %d out of range (1..255)" % maxval)
    # exactly one whitespace byte separates the header from the raster
    if pos >= len(data) or data[pos : pos + 1] not in b" \t\r\n":
        raise PgmFormatError("missing separator before pixel data")
    pos += 1
    raster = data[pos : pos + width * height]
    if len(raster) < width * height:
        raise PgmFormatError(
            "truncated pixel data: expected %d bytes, got %d" % (width * height, len(raster))
        )
    img = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return img.copy()


def write_pgm(img: np.ndarray) -> bytes:
    """Serialize to the canonical binary PGM form (bit-exact across platforms)."""
    arr = validate_image(img)
    height, width = arr.shape
    header = b"P5\n%d %d\n255\n" % (width, height)
    return header + arr.tobytes()


@dataclass
class BlockMatrix:
    """Column-per-block matrix view of an image.

    ``data`` has shape (block_side**2, block_count); column j holds block j
    (raster order over the block grid) vectorized by stacking the block's
    columns top to bottom, left column first.
    """

    data: np.ndarray
    block_side: int
    image_width: int
    image_height: int

    @property
    def block_count(self) -> int:
        return self.data.shape[1]

    def check(self) -> None:
        n = self.block_side
        if self.data.shape[0] != n * n:
            raise ValueError("row count %d != block_side**2" % self.data.shape[0])
        if self.image_width % n or self.image_height % n:
            raise ValueError("stored image dims not divisible by block side")
        expect = (self.image_width // n) * (self.image_height // n)
        if self.data.shape[1] != expect:
            raise ValueError("column count %d != block count %d" % (self.data.shape[1], expect))


def to_blocks(img: np.ndarray, n: int) -> BlockMatrix:
    """Split the image into n x n blocks and vectorize each into a column.

    Blocks are enumerated left-to-right, top-to-bottom; within a block the
    pixel columns are stacked top-to-bottom, left column first.  Dimensions
    that n does not divide are rejected (padding would distort capacity and
    histogram arithmetic downstream).
    """
    arr = validate_image(img)
    height, width = arr.shape
    if n <= 0:
        raise ValueError("block side must be positive")
    if height % n or width % n:
        raise ValueError("block side %d does not divide image dims %dx%d" % (n, width, height))
    by, bx = height // n, width // n
    # (by, bx, n, n) tiles; transposing each tile stacks its columns
    tiles = arr.reshape(by, n, bx, n).transpose(0, 2, 3, 1)
    data = tiles.reshape(by * bx, n * n).T.astype(np.float64)
    return BlockMatrix(data=data, block_side=n, image_width=width, image_height=height)


def from_blocks(mat: BlockMatrix) -> np.ndarray:
    """Rebuild an image from a block matrix, rounding entries to pixels.

    Rounding is nearest integer with halves away from zero, then clamping
    to [0, 255].  On integer-valued in-range data this inverts to_blocks.
    """
    mat.check()
    n = mat.block_side
    by, bx = mat.image_height // n, mat.image_width // n
    vals = mat.data
    rounded = np.copysign(np.floor(np.abs(vals) + 0.5), vals)
    clipped = np.clip(rounded, 0, 255)
    tiles = clipped.T.reshape(by, bx, n, n).transpose(0, 3, 1, 2)
    img = tiles.reshape(by * n, bx * n)
    return img.astype(np.uint8)
