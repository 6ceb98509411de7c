import numpy as np
import pytest

from cpdcond import CPDecomposition, Rank1Term, Shape, random_cpd, rng_from_seed
from cpdcond.condition import (
    condition_report,
    jacobian_rank2,
    kappa,
    kappa_angular,
    q_value,
    sigma_min,
    volume,
)
from cpdcond.segre import tangent_basis, terracini

from helpers import cross_orthogonal_pair, nearby_pair, random_unit


# ---- sigma_min / q_value ----------------------------------------------------


def test_sigma_min_identity():
    assert sigma_min(np.eye(3)) == pytest.approx(1.0)


def test_sigma_min_diag():
    assert sigma_min(np.diag([3.0, 2.0, 0.5])) == pytest.approx(0.5)


def test_sigma_min_matches_rayleigh_search():
    # ||M v|| >= sigma_min for every unit v, so random probes bound from above;
    # inverse iteration on M^T M (no SVD) then drives a probe to the minimum
    rng = rng_from_seed(51)
    m = rng.standard_normal((8, 8))
    want = sigma_min(m)
    gram = m.T @ m
    probes = [random_unit(rng, 8) for _ in range(10_000)]
    assert want <= min(np.linalg.norm(m @ v) for v in probes) + 1e-12

    best = np.inf
    for v in probes[:20]:
        for _ in range(50):
            v = np.linalg.solve(gram, v)
            v /= np.linalg.norm(v)
        best = min(best, np.linalg.norm(m @ v))
    assert abs(best - want) <= 1e-3 * (1 + want)


def test_q_value_identity():
    assert q_value(np.eye(4)) == pytest.approx(1.0)


def test_q_value_diag_2_3():
    m = np.zeros((5, 2))
    m[0, 0], m[1, 1] = 2.0, 3.0
    assert q_value(m) == pytest.approx(3.0)


def test_q_value_two_formula_cross_check():
    rng = rng_from_seed(52)
    for _ in range(50):
        m = rng.standard_normal((10, 4))
        q = q_value(m)
        want = np.sqrt(np.linalg.det(m.T @ m)) / sigma_min(m)
        assert abs(q - want) <= 1e-9 * abs(want)


def test_q_value_flags_near_singular():
    m = np.zeros((4, 2))
    m[0, 0] = 1.0
    m[1, 1] = 1e-16
    q, flagged = q_value(m, return_flag=True)
    assert flagged
    assert q == pytest.approx(1.0)


# ---- kappa -------------------------------------------------------------------


def test_kappa_rank_one_is_one():
    rng = rng_from_seed(53)
    rep = kappa(random_cpd(Shape((3, 3, 2)), 1, rng))
    assert rep.kappa == pytest.approx(1.0, abs=1e-12)
    assert rep.sigma_min_regular == pytest.approx(1.0, abs=1e-12)


def test_kappa_cross_orthogonal_is_one():
    rng = rng_from_seed(54)
    shape = Shape((3, 3, 3))
    t1, t2 = cross_orthogonal_pair(rng, shape.dims)
    rep = kappa(CPDecomposition(shape, (t1, t2)))
    assert rep.kappa == pytest.approx(1.0, abs=1e-10)


def test_kappa_diverges_towards_coincident_terms():
    rng = rng_from_seed(55)
    shape = Shape((3, 3, 2))
    values = []
    for eps in (0.1, 0.05, 0.025):
        t1, t2 = nearby_pair(rng_from_seed(999), shape.dims, eps)
        values.append(kappa(CPDecomposition(shape, (t1, t2))).kappa)
    assert values[0] < values[1] < values[2]


def test_kappa_overcomplete_is_inf_with_reason():
    rng = rng_from_seed(56)
    rep = kappa(random_cpd(Shape((2, 2, 2)), 3, rng))
    assert rep.kappa == float("inf")
    assert rep.reason is not None


def test_kappa_coincident_terms_inf_sentinel():
    rng = rng_from_seed(57)
    cpd = random_cpd(Shape((2, 2, 2)), 1, rng)
    doubled = CPDecomposition(cpd.shape, (cpd.terms[0], cpd.terms[0]))
    rep = kappa(doubled)
    assert rep.kappa == float("inf")
    assert rep.sigma_min_regular <= 1e-8


def test_kappa_positive_scale_invariance():
    rng = rng_from_seed(58)
    cpd = random_cpd(Shape((3, 3, 2)), 2, rng)
    scaled = CPDecomposition(
        cpd.shape, tuple(Rank1Term(7.5 * t.scale, t.factors) for t in cpd.terms)
    )
    assert kappa(cpd).kappa == kappa(scaled).kappa  # bit-identical: scale unused


# ---- kappa_angular -----------------------------------------------------------


def test_kappa_angular_cross_orthogonal_unit_scales():
    rng = rng_from_seed(59)
    shape = Shape((3, 3, 3))
    t1, t2 = cross_orthogonal_pair(rng, shape.dims)
    rep = kappa_angular(CPDecomposition(shape, (t1, t2)))
    assert rep.kappa_angular == pytest.approx(1.0, abs=1e-10)


def test_kappa_angular_cross_orthogonal_scales_half_two():
    rng = rng_from_seed(60)
    shape = Shape((3, 3, 3))
    t1, t2 = cross_orthogonal_pair(rng, shape.dims)
    cpd = CPDecomposition(
        shape, (Rank1Term(0.5, t1.factors), Rank1Term(2.0, t2.factors))
    )
    rep = kappa_angular(cpd)
    assert rep.kappa_angular == pytest.approx(2.0, abs=1e-10)


def test_kappa_angular_inverse_homogeneous_in_tensor_scale():
    rng = rng_from_seed(61)
    cpd = random_cpd(Shape((3, 3, 2)), 2, rng)
    t = 3.7
    scaled = CPDecomposition(
        cpd.shape, tuple(Rank1Term(t * q.scale, q.factors) for q in cpd.terms)
    )
    a = kappa_angular(cpd).kappa_angular
    b = kappa_angular(scaled).kappa_angular
    assert b == pytest.approx(a / t, rel=1e-10)


def test_condition_report_combines_both():
    rng = rng_from_seed(62)
    cpd = random_cpd(Shape((3, 3, 2)), 2, rng)
    rep = condition_report(cpd)
    assert rep.kappa == kappa(cpd).kappa
    assert rep.kappa_angular == kappa_angular(cpd).kappa_angular
    assert rep.kappa == pytest.approx(1.0 / rep.sigma_min_regular)


# ---- orthogonal invariance -----------------------------------------------------


def test_condition_numbers_orthogonal_invariant():
    rng = rng_from_seed(63)
    shape = Shape((3, 4, 2))
    cpd = random_cpd(shape, 2, rng)
    qs = [np.linalg.qr(rng.standard_normal((n, n)))[0] for n in shape.dims]
    rotated = CPDecomposition(
        shape,
        tuple(
            Rank1Term(t.scale, tuple(q @ f for q, f in zip(qs, t.factors)))
            for t in cpd.terms
        ),
    )
    assert kappa(rotated).kappa == pytest.approx(kappa(cpd).kappa, rel=1e-10)
    assert kappa_angular(rotated).kappa_angular == pytest.approx(
        kappa_angular(cpd).kappa_angular, rel=1e-10
    )


# ---- interlacing ----------------------------------------------------------------


def test_sigma_min_interlacing_on_concatenation():
    rng = rng_from_seed(64)
    shape = Shape((4, 4, 2))
    for _ in range(200):
        a = random_cpd(shape, 1, rng)
        b = random_cpd(shape, 1, rng)
        u, v = terracini(a), terracini(b)
        joint = np.hstack([u, v])
        s_joint = sigma_min(joint)
        assert s_joint <= min(sigma_min(u), sigma_min(v)) + 1e-12


# ---- rank-2 jacobian -------------------------------------------------------------


def test_jacobian_rank2_cross_orthogonal_unit():
    rng = rng_from_seed(65)
    shape = Shape((2, 2, 2))
    t1, t2 = cross_orthogonal_pair(rng, shape.dims)
    assert jacobian_rank2(CPDecomposition(shape, (t1, t2))) == pytest.approx(
        1.0, abs=1e-10
    )


def test_jacobian_rank2_scaling_law():
    rng = rng_from_seed(66)
    shape = Shape((2, 2, 2))  # segre_dim 4
    t1, t2 = cross_orthogonal_pair(rng, shape.dims)
    cpd = CPDecomposition(
        shape, (Rank1Term(2.0, t1.factors), Rank1Term(1.0, t2.factors))
    )
    assert jacobian_rank2(cpd) == pytest.approx(8.0, rel=1e-10)


def test_jacobian_rank2_coincident_is_zero():
    rng = rng_from_seed(67)
    cpd = random_cpd(Shape((2, 2, 2)), 1, rng)
    doubled = CPDecomposition(cpd.shape, (cpd.terms[0], cpd.terms[0]))
    assert abs(jacobian_rank2(doubled)) <= 1e-8


def test_jacobian_rank2_direct_assembly_cross_check():
    rng = rng_from_seed(68)
    shape = Shape((3, 3, 2))
    for _ in range(25):
        cpd = random_cpd(shape, 2, rng)
        got = jacobian_rank2(cpd)
        # direct form: vol([lam*L1, mu*L2, U1, U2])
        blocks, units = [], []
        for t in cpd.terms:
            basis = tangent_basis(t)
            units.append(basis[:, 0])
            blocks.append(t.scale * basis[:, 1:])
        q = np.hstack(blocks + [np.column_stack(units)])
        assert got == pytest.approx(volume(q), rel=1e-9)


def test_jacobian_rank2_rejects_other_ranks():
    rng = rng_from_seed(69)
    with pytest.raises(ValueError):
        jacobian_rank2(random_cpd(Shape((2, 2, 2)), 1, rng))
