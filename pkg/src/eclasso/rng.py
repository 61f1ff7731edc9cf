"""Seeded random streams.

Every random quantity is drawn from its own Philox-4x64 stream keyed by a
64-bit substream seed::

    substream_seed = int.from_bytes(blake2b(f"{seed}/{label1}/{label2}...",
                                            digest_size=8).digest(), "little")

so replicates, columns and noise vectors never share state and can be
generated in any order. Uniforms are 53-bit: u = (k + 0.5) / 2**53 with k
uniform on [0, 2**53), which keeps u strictly inside (0, 1). Normal variates
use the inverse CDF, ``scipy.special.ndtri(u)``.
"""

import hashlib

import numpy as np
from scipy.special import ndtri

DEFAULT_SEED = 20240229
_TWO53 = float(2**53)


def derive_seed(seed, *labels):
    key = "/".join(str(x) for x in (int(seed),) + labels)
    return int.from_bytes(hashlib.blake2b(key.encode(), digest_size=8).digest(), "little")


def stream(seed, *labels):
    """Independent generator for the substream ``labels`` of ``seed``."""
    return np.random.Generator(np.random.Philox(key=derive_seed(seed, *labels)))


def uniform_open(gen, size):
    k = gen.integers(0, 2**53, size=size, dtype=np.uint64)
    return (k.astype(np.float64) + 0.5) / _TWO53


def standard_normal(gen, size):
    return ndtri(uniform_open(gen, size))
