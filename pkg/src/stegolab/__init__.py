"""Steganography and watermark-security workbench.

Three families of primitives share this package:

* sparse-domain steganography: block images, learn a dictionary (K-SVD),
  hide message bits in the fractional bits of the sparse coefficients;
* histogram-preserving LSB embedding: classic LSB, exhaustion with
  intentional restoration, and the pixel-locking variant, plus the
  chi-square attack they answer to;
* ICA tooling: FastICA, quantization watermarking in a learned block
  basis, spread-spectrum models, and blind/informed carrier-estimation
  attacks.

Everything stochastic flows from an explicit 64-bit seed through the
SplitMix64 generator, so runs replay bit-exactly.
"""

from . import (  # noqa: F401
    bench,
    ica,
    ica_watermark,
    imageio,
    lsb_stego,
    payload,
    prng,
    sparse_coding,
    sparse_stego,
    steganalysis,
    synth,
)

__version__ = "0.1.0"
