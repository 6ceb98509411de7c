"""Shared construction helpers for the test suite."""

import numpy as np

from cpdcond import Rank1Term


def random_unit(rng, n):
    g = rng.standard_normal(n)
    return g / np.linalg.norm(g)


def svd_complement(u: np.ndarray) -> np.ndarray:
    """Independent complement construction (nullspace of u^T by SVD)."""
    _, _, vt = np.linalg.svd(u[None, :])
    return vt[1:].T


def cross_orthogonal_pair(rng, dims):
    """Two rank-one terms whose factors are orthogonal in every mode."""
    us, vs = [], []
    for n in dims:
        u = random_unit(rng, n)
        g = rng.standard_normal(n)
        v = g - (g @ u) * u
        v /= np.linalg.norm(v)
        us.append(u)
        vs.append(v)
    return Rank1Term(1.0, tuple(us)), Rank1Term(1.0, tuple(vs))


def nearby_pair(rng, dims, eps):
    """Rank-one terms at factor angle about eps in every mode."""
    us, vs = [], []
    for n in dims:
        u = random_unit(rng, n)
        w = rng.standard_normal(n)
        w -= (w @ u) * u
        w /= np.linalg.norm(w)
        v = np.cos(eps) * u + np.sin(eps) * w
        us.append(u)
        vs.append(v)
    return Rank1Term(1.0, tuple(us)), Rank1Term(1.0, tuple(vs))
