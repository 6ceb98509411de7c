"""Regular and angular condition numbers of CP decompositions.

The regular condition number of an r-term decomposition is the
reciprocal of the smallest singular value of its Terracini matrix (all
per-term tangent bases side by side).  The angular condition number
removes the scale directions: with ``M`` the unit rank-one terms and
``L`` the scaled mode-tangent blocks, it is ``1/sigma_min((I - M M+) L)``.

The angular formula is proved for rank 2; for ``r > 2`` this module
adopts the same projector expression as the operational definition.

Condition numbers are reported as ``+inf`` once the relevant smallest
singular value drops below ``1e-14`` times the largest; reports carry
the raw singular values alongside the sentinel so callers can censor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cpdcond.tensors import CPDecomposition
from cpdcond.segre import tangent_basis

# relative threshold under which a matrix counts as singular
SINGULAR_RTOL = 1e-14


@dataclass(frozen=True)
class ConditionReport:
    """Computed condition numbers with their raw singular values.

    Fields not computed by the producing call are ``None``.  A ``reason``
    is set when a sentinel was forced structurally (e.g. more tangent
    columns than ambient dimensions).
    """

    kappa: float | None = None
    kappa_angular: float | None = None
    sigma_min_regular: float | None = None
    sigma_min_angular: float | None = None
    reason: str | None = None


def sigma_min(mat: np.ndarray) -> float:
    """Smallest singular value (over the column space) via full SVD."""
    return float(np.linalg.svd(mat, compute_uv=False)[-1])


def q_value(mat: np.ndarray, *, return_flag: bool = False):
    """Product of all but the smallest singular value.

    Equals ``sqrt(det(M^T M)) / sigma_min`` for injective ``M``; the
    product form stays finite when the matrix is (nearly) singular.
    When ``return_flag`` is set, also returns whether the smallest
    singular value was below ``SINGULAR_RTOL`` times the largest.
    """
    s = np.linalg.svd(mat, compute_uv=False)
    q = float(np.prod(s[:-1]))
    if return_flag:
        return q, bool(s[-1] <= SINGULAR_RTOL * s[0])
    return q


def _invert_sigma(smin: float, smax: float) -> float:
    if smin <= SINGULAR_RTOL * smax:
        return float("inf")
    return 1.0 / smin


def kappa(cpd: CPDecomposition) -> ConditionReport:
    """Regular condition number, 1/sigma_min of the Terracini matrix."""
    shape = cpd.shape
    if cpd.rank * shape.segre_dim > shape.ambient_dim:
        return ConditionReport(
            kappa=float("inf"),
            sigma_min_regular=0.0,
            reason=f"{cpd.rank} * {shape.segre_dim} tangent columns exceed "
            f"{shape.ambient_dim} ambient dimensions",
        )
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        u = np.hstack([tangent_basis(t) for t in cpd.terms])
    s = np.linalg.svd(u, compute_uv=False)
    return ConditionReport(
        kappa=_invert_sigma(float(s[-1]), float(s[0])),
        sigma_min_regular=float(s[-1]),
    )


def _angular_parts(cpd: CPDecomposition) -> tuple[np.ndarray, np.ndarray]:
    """Unit rank-one columns M and scaled mode-tangent blocks L."""
    m_cols, l_blocks = [], []
    for t in cpd.terms:
        basis = tangent_basis(t)
        m_cols.append(basis[:, 0])
        l_blocks.append(t.scale * basis[:, 1:])
    return np.column_stack(m_cols), np.hstack(l_blocks)


def kappa_angular(cpd: CPDecomposition) -> ConditionReport:
    """Angular condition number via the projector formula."""
    m, l = _angular_parts(cpd)
    # project L off the span of M; SVD-based so rank-deficient M is fine
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    keep = s > SINGULAR_RTOL * s[0] if s[0] > 0 else np.zeros_like(s, dtype=bool)
    ub = u[:, keep]
    proj = l - ub @ (ub.T @ l)
    sv = np.linalg.svd(proj, compute_uv=False)
    return ConditionReport(
        kappa_angular=_invert_sigma(float(sv[-1]), float(sv[0])),
        sigma_min_angular=float(sv[-1]),
    )


def condition_report(cpd: CPDecomposition) -> ConditionReport:
    """Both condition numbers in one report."""
    reg = kappa(cpd)
    ang = kappa_angular(cpd)
    return ConditionReport(
        kappa=reg.kappa,
        kappa_angular=ang.kappa_angular,
        sigma_min_regular=reg.sigma_min_regular,
        sigma_min_angular=ang.sigma_min_angular,
        reason=reg.reason,
    )


def volume(mat: np.ndarray) -> float:
    """sqrt(det(M^T M)), computed as the product of all singular values."""
    return float(np.prod(np.linalg.svd(mat, compute_uv=False)))


def jacobian_rank2(cpd: CPDecomposition) -> float:
    """Jacobian determinant of the two-term parameterization.

    Equals ``lambda^(S-1) * mu^(S-1) * vol(Terracini)`` with ``S`` the
    tangent-cone dimension of the shape; the equivalent direct form
    ``vol([lambda*L_1, mu*L_2, U_1, U_2])`` is exercised by the oracle
    suite.
    """
    if cpd.rank != 2:
        raise ValueError("Jacobian formula applies to two-term decompositions")
    lam, mu = (t.scale for t in cpd.terms)
    sigma = cpd.shape.segre_dim
    u = np.hstack([tangent_basis(t) for t in cpd.terms])
    return lam ** (sigma - 1) * mu ** (sigma - 1) * volume(u)
