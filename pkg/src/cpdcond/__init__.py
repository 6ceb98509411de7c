"""Condition numbers of CP tensor decompositions.

The package computes regular and angular condition numbers of canonical
polyadic (CP) decompositions, samples Gaussian rank-r tensors in perfect
tensor spaces by acceptance-rejection with homotopy continuation, and
fits power-law tails to the resulting condition-number distributions.
"""

from cpdcond.tensors import (
    CPDecomposition,
    DenseTensor,
    Rank1Term,
    Shape,
    cpd_eval,
    outer_product,
    rank1_inner,
    random_cpd,
    random_gaussian_tensor,
    shape_constants,
)
from cpdcond.rng import rng_from_seed, substream

__version__ = "0.1.0"

__all__ = [
    "CPDecomposition",
    "DenseTensor",
    "Rank1Term",
    "Shape",
    "cpd_eval",
    "outer_product",
    "rank1_inner",
    "random_cpd",
    "random_gaussian_tensor",
    "shape_constants",
    "rng_from_seed",
    "substream",
    "__version__",
]
