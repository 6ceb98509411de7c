import numpy as np
import pytest

from cpdcond import CPDecomposition, Rank1Term, Shape, random_cpd, rng_from_seed
from cpdcond.segre import (
    kruskal_certify,
    orthonormal_complement,
    tangent_basis,
    terracini,
)


from helpers import cross_orthogonal_pair, random_unit, svd_complement


# ---- orthonormal_complement -------------------------------------------------


def test_complement_of_e1():
    q = orthonormal_complement(np.array([1.0, 0.0, 0.0]))
    # columns span {e2, e3}
    assert np.allclose(q[0, :], 0.0, atol=1e-14)
    assert np.allclose(q.T @ q, np.eye(2), atol=1e-14)


def test_complement_orthogonal_to_u():
    rng = rng_from_seed(31)
    for n in (2, 3, 7):
        for _ in range(25):
            u = random_unit(rng, n)
            q = orthonormal_complement(u)
            assert q.shape == (n, n - 1)
            assert np.linalg.norm(u @ q) <= 1e-14
            assert np.allclose(q.T @ q, np.eye(n - 1), atol=1e-13)


def test_complement_completes_to_orthogonal_matrix():
    rng = rng_from_seed(32)
    for _ in range(25):
        u = random_unit(rng, 5)
        full = np.column_stack([u, orthonormal_complement(u)])
        assert abs(abs(np.linalg.det(full)) - 1.0) <= 1e-12


def test_complement_stable_near_negative_e1():
    u = np.array([-1.0 + 1e-12, np.sqrt(2e-12), 0.0])
    u /= np.linalg.norm(u)
    q = orthonormal_complement(u)
    assert np.linalg.norm(u @ q) <= 1e-13
    assert np.allclose(q.T @ q, np.eye(2), atol=1e-13)


def test_complement_rejects_non_unit():
    with pytest.raises(ValueError):
        orthonormal_complement(np.array([1.0, 1.0]))


# ---- tangent_basis ----------------------------------------------------------


def test_tangent_basis_at_standard_rank_one():
    term = Rank1Term(
        1.0, (np.array([1.0, 0.0]), np.array([1.0, 0.0]), np.array([1.0, 0.0]))
    )
    b = tangent_basis(term)
    assert b.shape == (8, 4)
    # flat indices of e111, e211, e121, e112 in row-major (2,2,2)
    want = np.zeros((8, 4))
    for col, flat in enumerate([0, 4, 2, 1]):
        want[flat, col] = 1.0
    # complement of e1 may point along -e2; compare up to column signs
    for col in range(4):
        s = np.sign(b[:, col][np.argmax(np.abs(b[:, col]))])
        assert np.allclose(s * b[:, col], want[:, col], atol=1e-14)


def test_tangent_basis_orthonormal():
    rng = rng_from_seed(33)
    for dims in [(2, 2, 2), (3, 4, 2), (3, 3, 3, 2)]:
        cpd = random_cpd(Shape(dims), 1, rng)
        b = tangent_basis(cpd.terms[0])
        sigma = cpd.shape.segre_dim
        assert b.shape == (cpd.shape.ambient_dim, sigma)
        assert np.allclose(b.T @ b, np.eye(sigma), atol=1e-10)
        # first column is the unit rank-one tensor itself
        unit = Rank1Term(1.0, cpd.terms[0].factors)
        np.testing.assert_allclose(b[:, 0], unit.dense().values, atol=1e-13)


def test_tangent_span_invariant_under_complement_choice():
    rng = rng_from_seed(34)
    cpd = random_cpd(Shape((3, 3, 2)), 1, rng)
    term = cpd.terms[0]
    b1 = tangent_basis(term)

    # rebuild with an SVD-based complement instead of Householder
    from functools import reduce

    factors = [np.asarray(f) for f in term.factors]
    cols = [reduce(np.kron, factors)]
    for k in range(3):
        pieces = [f[:, None] for f in factors]
        pieces[k] = svd_complement(factors[k])
        cols.append(reduce(np.kron, pieces))
    b2 = np.hstack([c if c.ndim == 2 else c[:, None] for c in cols])

    assert np.allclose(b1 @ b1.T, b2 @ b2.T, atol=1e-10)


def test_tangent_basis_ignores_scale():
    rng = rng_from_seed(35)
    cpd = random_cpd(Shape((3, 2, 2)), 1, rng)
    t = cpd.terms[0]
    b1 = tangent_basis(t)
    b2 = tangent_basis(Rank1Term(7.3 * t.scale, t.factors))
    assert np.array_equal(b1, b2)


# ---- terracini ---------------------------------------------------------------


def test_terracini_rank_one_has_unit_sigma_min():
    rng = rng_from_seed(36)
    cpd = random_cpd(Shape((3, 3, 2)), 1, rng)
    s = np.linalg.svd(terracini(cpd), compute_uv=False)
    assert abs(s[-1] - 1.0) <= 1e-12


def test_terracini_cross_orthogonal_gram_identity():
    rng = rng_from_seed(37)
    shape = Shape((3, 3, 3))
    t1, t2 = cross_orthogonal_pair(rng, shape.dims)
    u = terracini(CPDecomposition(shape, (t1, t2)))
    assert np.allclose(u.T @ u, np.eye(2 * shape.segre_dim), atol=1e-10)


def test_terracini_coincident_terms_singular():
    rng = rng_from_seed(38)
    cpd = random_cpd(Shape((2, 2, 2)), 1, rng)
    doubled = CPDecomposition(cpd.shape, (cpd.terms[0], cpd.terms[0]))
    s = np.linalg.svd(terracini(doubled), compute_uv=False)
    assert s[-1] <= 1e-8


def test_terracini_warns_when_overcomplete():
    rng = rng_from_seed(39)
    cpd = random_cpd(Shape((2, 2, 2)), 3, rng)  # 3*4 > 8
    with pytest.warns(UserWarning):
        terracini(cpd)


def test_terracini_orthogonal_equivariance():
    rng = rng_from_seed(40)
    shape = Shape((3, 4, 2))
    cpd = random_cpd(shape, 2, rng)
    qs = []
    for n in shape.dims:
        m = rng.standard_normal((n, n))
        q, _ = np.linalg.qr(m)
        qs.append(q)
    rotated = CPDecomposition(
        shape,
        tuple(
            Rank1Term(t.scale, tuple(q @ f for q, f in zip(qs, t.factors)))
            for t in cpd.terms
        ),
    )
    s0 = np.linalg.svd(terracini(cpd), compute_uv=False)
    s1 = np.linalg.svd(terracini(rotated), compute_uv=False)
    np.testing.assert_allclose(s0, s1, atol=1e-10)


# ---- kruskal_certify -----------------------------------------------------------


def test_kruskal_generic_222_rank2_certified():
    rng = rng_from_seed(41)
    ok, kranks = kruskal_certify(random_cpd(Shape((2, 2, 2)), 2, rng))
    assert ok
    assert kranks == (2, 2, 2)


def test_kruskal_shared_first_factor_not_certified():
    rng = rng_from_seed(42)
    cpd = random_cpd(Shape((3, 3, 3)), 2, rng)
    a, b = cpd.terms
    shared = CPDecomposition(
        cpd.shape, (a, Rank1Term(b.scale, (a.factors[0], b.factors[1], b.factors[2])))
    )
    ok, kranks = kruskal_certify(shared)
    assert not ok
    assert kranks[0] == 1


def test_kruskal_333_rank4_not_certified():
    rng = rng_from_seed(43)
    ok, kranks = kruskal_certify(random_cpd(Shape((3, 3, 3)), 4, rng))
    assert not ok  # 2*4 = 8 > 3+3+3-2 = 7
    assert kranks == (3, 3, 3)


def test_kruskal_rejects_other_orders():
    rng = rng_from_seed(44)
    with pytest.raises(ValueError):
        kruskal_certify(random_cpd(Shape((2, 2, 2, 2)), 2, rng))
