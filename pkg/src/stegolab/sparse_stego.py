"""Steganography in the sparse domain: message bits ride in the low
fractional bits of the nonzero sparse-code coefficients.

Embedding: block the cover, learn a dictionary and sparse code for it,
write each framed message bit into the low fractional bits of the next
nonzero coefficient (column-major order), resynthesize, and quantize back
to pixels.  The dictionary is the extraction key.

Extraction re-codes the stego blocks with OMP over the key dictionary and
reads the fractional bits back.  Re-coding quantized pixels is lossy, so
blind recovery is noisy by nature; validation mode reads the stored
modified code instead and is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import CapacityError, PgmFormatError
from .imageio import BlockMatrix, from_blocks, to_blocks, validate_image
from .payload import HEADER_BITS, frame_message, parse_frame  # noqa: F401  (re-exported)
from .sparse_coding import Dictionary, ksvd, reconstruct, sparse_code_columns
from .steganalysis import psnr


@dataclass
class SparseStegoParams:
    block_side: int = 8
    atom_count: int = 129
    sparsity: int = 31
    ksvd_iters: int = 10
    frac_bits: int = 16
    embed_bits: int = 4
    seed: int = 0
    residual_tol: float = 0.0

    def check(self) -> None:
        n2 = self.block_side * self.block_side
        if self.block_side < 1 or self.atom_count < 1 or self.sparsity < 1:
            raise ValueError("block side, atom count and sparsity must be positive")
        if self.sparsity >= n2 / 2:
            raise ValueError(
                "sparsity %d violates the uniqueness bound (< %d/2)" % (self.sparsity, n2)
            )
        if not (1 <= self.embed_bits <= self.frac_bits <= 52):
            raise ValueError("need 1 <= embed_bits <= frac_bits <= 52")


def _fraction_fixed(c: float, frac_bits: int) -> tuple[float, int, int]:
    """Split |c| into integer part and B-bit fixed-point fraction."""
    m = abs(c)
    whole = np.floor(m)
    q = int(np.floor((m - whole) * (1 << frac_bits)))
    q = min(q, (1 << frac_bits) - 1)
    return float(whole), q, -1 if c < 0 else 1


def embed_bit_in_coeff(c: float, bit: int, frac_bits: int = 16, embed_bits: int = 4) -> float:
    """Replace the low ``embed_bits`` of the fixed-point fraction with the bit.

    The bit is replicated across all replaced positions (the extractor takes
    a majority vote).  Sign and integer part are untouched, so the
    perturbation is below 2**(embed_bits - frac_bits).
    """
    if c == 0.0:
        raise ValueError("only nonzero coefficients carry payload")
    if bit not in (0, 1):
        raise ValueError("bit must be 0 or 1")
    whole, q, sign = _fraction_fixed(c, frac_bits)
    mask = (1 << embed_bits) - 1
    q &= ~mask
    if bit:
        q |= mask
    return sign * (whole + q / (1 << frac_bits))


def extract_bit_from_coeff(c: float, frac_bits: int = 16, embed_bits: int = 4) -> int:
    """Majority vote over the low ``embed_bits`` of the fixed-point fraction.

    Exact ties resolve to 0.
    """
    if c == 0.0:
        raise ValueError("only nonzero coefficients carry payload")
    _, q, _ = _fraction_fixed(c, frac_bits)
    low = q & ((1 << embed_bits) - 1)
    ones = bin(low).count("1")
    return 1 if 2 * ones > embed_bits else 0


def nonzero_positions(code: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(rows, cols) of nonzeros ordered column-major: column, then row."""
    cols, rows = np.nonzero(code.T)
    return rows, cols


def capacity(p: SparseStegoParams, block_count: int) -> tuple[int, int]:
    """(J*t0 ceiling on realizable capacity, J*n^2/2 theoretical bound) in bits."""
    exact = block_count * p.sparsity
    theoretical = (block_count * p.block_side * p.block_side) // 2
    return exact, theoretical


@dataclass
class SparseEmbedResult:
    stego: np.ndarray
    key: Dictionary
    code: np.ndarray  # modified sparse code (the oracle for validation mode)
    report: dict = field(default_factory=dict)


def sparse_embed(cover: np.ndarray, msg: bytes, p: SparseStegoParams) -> SparseEmbedResult:
    """Full embedding pipeline; returns stego, key dictionary, modified code."""
    p.check()
    cover = validate_image(cover)
    blocks = to_blocks(cover, p.block_side)
    learned = ksvd(blocks.data, p.atom_count, p.sparsity, p.ksvd_iters, p.seed,
                   residual_tol=p.residual_tol)
    code = learned.code.copy()
    rows, cols = nonzero_positions(code)
    nnz = rows.size
    frame = frame_message(msg)
    if frame.size > nnz:
        raise CapacityError(
            "framed message needs %d bits, capacity is %d" % (frame.size, nnz), nnz
        )
    for t in range(frame.size):
        i, j = int(rows[t]), int(cols[t])
        code[i, j] = embed_bit_in_coeff(code[i, j], int(frame[t]), p.frac_bits, p.embed_bits)
    recon = reconstruct(learned.dictionary, code)
    stego = from_blocks(BlockMatrix(recon, p.block_side, blocks.image_width, blocks.image_height))
    cap_ceiling, cap_theory = capacity(p, blocks.block_count)
    report = {
        "capacity_bits": int(nnz),
        "capacity_ceiling_bits": cap_ceiling,
        "capacity_theoretical_bits": cap_theory,
        "used_bits": int(frame.size),
        "psnr_db": float(psnr(cover, stego)),
        "ksvd_objective": float(learned.objective),
    }
    return SparseEmbedResult(stego=stego, key=learned.dictionary, code=code, report=report)


def sparse_extract_bits(stego: np.ndarray, key: Dictionary, p: SparseStegoParams) -> np.ndarray:
    """Blind path: re-code the stego blocks with OMP and read all payload bits."""
    p.check()
    key.check()
    blocks = to_blocks(validate_image(stego), p.block_side)
    if key.atom_dim != p.block_side * p.block_side:
        raise ValueError("key atom dim %d != block size %d" % (key.atom_dim, p.block_side ** 2))
    code = sparse_code_columns(key.atoms, blocks.data, p.sparsity, p.residual_tol)
    return code_payload_bits(code, p)


def code_payload_bits(code: np.ndarray, p: SparseStegoParams) -> np.ndarray:
    """Payload bits carried by a sparse code, in embedding order."""
    rows, cols = nonzero_positions(code)
    bits = np.empty(rows.size, dtype=np.uint8)
    for t in range(rows.size):
        bits[t] = extract_bit_from_coeff(float(code[rows[t], cols[t]]), p.frac_bits, p.embed_bits)
    return bits


def sparse_extract(stego: np.ndarray, key: Dictionary, p: SparseStegoParams,
                   oracle_code: np.ndarray | None = None) -> tuple[bytes, dict]:
    """Recover the message; with ``oracle_code`` the stored code is read directly.

    Returns (message bytes, diagnostics).  Blind mode is expected to be
    noisy: re-estimating the code from quantized pixels dominates the error.
    """
    if oracle_code is not None:
        bits = code_payload_bits(np.asarray(oracle_code, dtype=np.float64), p)
        mode = "oracle"
    else:
        bits = sparse_extract_bits(stego, key, p)
        mode = "blind"
    msg = parse_frame(bits)
    diag = {"mode": mode, "bits_available": int(bits.size), "message_bits": 8 * len(msg)}
    return msg, diag


CODE_MAGIC = b"SCODE1\n"


def dump_code(code: np.ndarray) -> bytes:
    """Serialize a sparse-code matrix (SCODE1: dims line + row-major doubles)."""
    code = np.asarray(code, dtype=np.float64)
    header = CODE_MAGIC + b"%d %d\n" % code.shape
    return header + np.ascontiguousarray(code, dtype="<f8").tobytes()


def load_code(data: bytes) -> np.ndarray:
    if not data.startswith(CODE_MAGIC):
        raise PgmFormatError("not an SCODE1 file")
    rest = data[len(CODE_MAGIC):]
    nl = rest.find(b"\n")
    if nl < 0:
        raise PgmFormatError("truncated SCODE1 header")
    try:
        k, j = (int(t) for t in rest[:nl].split())
    except ValueError:
        raise PgmFormatError("bad SCODE1 dimension line") from None
    body = rest[nl + 1:]
    if len(body) != k * j * 8:
        raise PgmFormatError("SCODE1 payload size mismatch")
    return np.frombuffer(body, dtype="<f8").reshape(k, j).astype(np.float64)
