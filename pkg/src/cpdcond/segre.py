"""Tangent spaces of the cone of rank-one tensors.

At a rank-one point ``u_1 x ... x u_d`` (unit factors) the tangent
space of the rank-one cone has the orthonormal basis

    [ U | L_1 | ... | L_d ],

where ``U`` is the vectorized rank-one point itself and the mode-``k``
block ``L_k`` replaces ``u_k`` by an orthonormal basis of its
complement.  Orthonormality follows from the product formula for inner
products of rank-one tensors.  Concatenating the bases of all terms of
a decomposition gives the Terracini matrix whose smallest singular
value controls the condition number.
"""

from __future__ import annotations

import warnings
from functools import reduce
from itertools import combinations

import numpy as np

from cpdcond.tensors import CPDecomposition, Rank1Term, Shape


def orthonormal_complement(u: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the complement of a unit vector.

    Columns are the trailing ``n - 1`` columns of the Householder
    reflector that maps ``u`` onto ``-sign(u_0) e_0``; the sign choice
    avoids cancellation.  The construction is deterministic in ``u``.
    """
    u = np.asarray(u, dtype=np.float64).ravel()
    n = u.size
    nrm = float(np.linalg.norm(u))
    if abs(nrm - 1.0) > 1e-9:
        raise ValueError(f"expected a unit vector, got norm {nrm:.3e}")
    sign = 1.0 if u[0] >= 0.0 else -1.0
    v = u.copy()
    v[0] += sign
    h = np.eye(n) - (2.0 / (v @ v)) * np.outer(v, v)
    return h[:, 1:]


def tangent_basis(term: Rank1Term) -> np.ndarray:
    """Orthonormal tangent basis at a rank-one term.

    Returns a ``(ambient_dim, segre_dim)`` matrix with column order
    ``[U, mode-1 block, ..., mode-d block]``.  The scale of the term is
    ignored: the basis depends only on the factor directions.
    """
    factors = [np.asarray(f) for f in term.factors]
    cols = [reduce(np.kron, factors)]
    for k in range(len(factors)):
        pieces = list(factors)
        pieces[k] = orthonormal_complement(factors[k])
        block = reduce(np.kron, [p if p.ndim == 2 else p[:, None] for p in pieces])
        cols.append(block)
    return np.hstack([c if c.ndim == 2 else c[:, None] for c in cols])


def terracini(cpd: CPDecomposition) -> np.ndarray:
    """Terracini matrix: tangent bases of all terms, side by side.

    Shape ``(ambient_dim, r * segre_dim)``.  When ``r * segre_dim``
    exceeds the ambient dimension the columns cannot be independent and
    the smallest singular value is zero; a warning is emitted.
    """
    shape = cpd.shape
    if cpd.rank * shape.segre_dim > shape.ambient_dim:
        warnings.warn(
            f"rank {cpd.rank} in {shape}: {cpd.rank} * {shape.segre_dim} > "
            f"{shape.ambient_dim}, Terracini matrix is necessarily singular",
            stacklevel=2,
        )
    return np.hstack([tangent_basis(t) for t in cpd.terms])


def _krank(mat: np.ndarray) -> int:
    """Largest k such that every k columns of ``mat`` are independent."""
    r = mat.shape[1]
    for k in range(min(r, mat.shape[0]), 0, -1):
        if all(_numeric_rank(mat[:, list(idx)]) == k for idx in combinations(range(r), k)):
            return k
    return 0


def _numeric_rank(mat: np.ndarray) -> int:
    s = np.linalg.svd(mat, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > 1e-10 * s[0]))


def kruskal_certify(cpd: CPDecomposition) -> tuple[bool, tuple[int, int, int]]:
    """Sufficient identifiability certificate for third-order tensors.

    Computes the k-rank of each factor matrix by brute-force subset rank
    tests and checks ``r <= (k_1 + k_2 + k_3 - 2) / 2`` with every
    ``k_ell > 1``.  Returns ``(certified, (k_1, k_2, k_3))``; a False
    result is inconclusive, not a proof of non-identifiability.
    """
    if cpd.shape.order != 3:
        raise ValueError("the certificate applies to third-order tensors only")
    kranks = []
    for mode in range(3):
        mat = np.column_stack([t.factors[mode] for t in cpd.terms])
        kranks.append(_krank(mat))
    k1, k2, k3 = kranks
    ok = all(k > 1 for k in kranks) and 2 * cpd.rank <= k1 + k2 + k3 - 2
    return ok, (k1, k2, k3)
