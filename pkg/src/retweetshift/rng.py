"""Deterministic random number generation for the whole toolkit.

Every stochastic operation takes an explicit integer seed and draws from a
numpy PCG64 generator.  Independent substreams are derived with
:class:`numpy.random.SeedSequence` keyed on (seed, crc32(label), ...), so any
part of the pipeline can be re-run in isolation and reproduce exactly the
stream it saw inside a full run.
"""

from __future__ import annotations

import zlib

import numpy as np


def generator(seed: int, *labels: str) -> np.random.Generator:
    """Return a PCG64 generator for `seed`, split by the given stream labels."""
    keys = [seed & 0xFFFFFFFF] + [zlib.crc32(lab.encode("utf-8")) for lab in labels]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(keys)))


def substream_seed(seed: int, *labels: str) -> int:
    """Derive a 32-bit child seed for ops that take a plain integer seed."""
    ss = np.random.SeedSequence(
        [seed & 0xFFFFFFFF] + [zlib.crc32(lab.encode("utf-8")) for lab in labels]
    )
    return int(ss.generate_state(1, dtype=np.uint32)[0])
