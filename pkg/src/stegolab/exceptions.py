"""Exception types shared across the package."""


class StegolabError(Exception):
    """Base class for errors raised by this package."""


class PgmFormatError(StegolabError):
    """Malformed or unsupported PGM data."""


class CapacityError(StegolabError):
    """Message does not fit the carrier; carries the measured capacity."""

    def __init__(self, message: str, capacity_bits: int):
        super().__init__(message)
        self.capacity_bits = capacity_bits


class TruncatedStreamError(StegolabError):
    """Embedded bit stream ends before the declared payload length."""


class CorruptStreamError(StegolabError):
    """Extraction with wrong keys or from a non-stego image."""


class DegenerateDataError(StegolabError):
    """Input has no usable variation (constant image, rank-deficient data)."""
