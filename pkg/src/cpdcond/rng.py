"""Counter-based random streams.

Every sampling routine in this package takes an explicit
:class:`numpy.random.Generator`.  Campaigns additionally need one
independent stream *per sample index* so that results do not depend on
how work is scheduled across processes: ``substream(master_seed, i)``
keys a Philox counter-based generator on the pair ``(master_seed, i)``
and is reproducible on any machine and any worker count.
"""

from __future__ import annotations

import numpy as np


def rng_from_seed(seed: int) -> np.random.Generator:
    """Top-level generator for a 64-bit seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def substream(master_seed: int, index: int) -> np.random.Generator:
    """Independent stream for sample ``index`` under ``master_seed``.

    Streams for distinct ``(master_seed, index)`` pairs are statistically
    independent, and the map is pure: the same pair always yields a
    generator producing the same draws.
    """
    if index < 0:
        raise ValueError("sample index must be nonnegative")
    seq = np.random.SeedSequence(entropy=(int(master_seed), int(index)))
    return np.random.Generator(np.random.Philox(seq))
