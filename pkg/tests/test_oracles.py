"""Oracle-suite tests: closed-form edge cases plus the random sweeps."""

import math

import numpy as np
import pytest

from cpdcond.condition import volume
from cpdcond.oracles import (
    ORACLE_NAMES,
    OracleReport,
    _pair_at_distances,
    _paired_tangent_frames,
    _point,
    _project_off,
    _split_theta_integral,
    _tangent_blocks,
    check_cos_inequality,
    check_gram_blocks,
    check_integral_bound_scaling,
    check_jacobian_factorization,
    check_norm_sandwich,
    check_q_lower_bound,
    check_vol_factorization,
    polar_identity_checks,
    q_bound_epsilon_sweep,
    quad_check_polar_identities,
    run_suite,
)
from cpdcond.rng import rng_from_seed
from cpdcond.tensors import Shape

from helpers import cross_orthogonal_pair, random_unit

CUBE = Shape((2, 2, 2))


def frame_parts(us, vs):
    """Sum/difference columns of the paired frame for direct inspection."""
    ubases, vbases = _paired_tangent_frames(us, vs)
    pu, pv = _point(us), _point(vs)
    l1 = _tangent_blocks(us, ubases)
    l2 = _tangent_blocks(vs, vbases)
    rt2 = math.sqrt(2.0)
    return (pu + pv) / rt2, (pu - pv) / rt2, (l1 - l2) / rt2, (l1 + l2) / rt2


# ---------------------------------------------------------------------------
# report type


def test_report_invariant_enforced():
    with pytest.raises(ValueError):
        OracleReport("bad", 1, 2.0, 1.0, True)


def test_report_line_shows_verdict():
    report = OracleReport("some_oracle", 5, 0.5, 1.0, True)
    assert "PASS" in report.line()
    assert "some_oracle" in report.line()


# ---------------------------------------------------------------------------
# volume factorization


def test_vol_factorization_cross_orthogonal_is_one():
    rng = rng_from_seed(11)
    t_u, t_v = cross_orthogonal_pair(rng, CUBE.dims)
    us, vs = list(t_u.factors), list(t_v.factors)
    m = np.column_stack([_point(us), _point(vs)])
    left = np.hstack([_tangent_blocks(us), _tangent_blocks(vs)])
    q_full = np.hstack([left, m])
    assert volume(q_full) == pytest.approx(1.0, abs=1e-12)
    assert volume(m) * volume(_project_off(m, left)) == pytest.approx(1.0, abs=1e-12)


def test_vol_factorization_coincident_is_zero():
    rng = rng_from_seed(12)
    us = [random_unit(rng, n) for n in CUBE.dims]
    m = np.column_stack([_point(us), _point(us)])
    left = np.hstack([_tangent_blocks(us), _tangent_blocks(us)])
    assert volume(np.hstack([left, m])) == pytest.approx(0.0, abs=1e-8)
    assert volume(m) * volume(_project_off(m, left)) == pytest.approx(0.0, abs=1e-8)


def test_vol_factorization_random_sweep():
    report = check_vol_factorization(1000, rng_from_seed(0))
    assert report.passed
    assert report.max_violation <= 1e-9


# ---------------------------------------------------------------------------
# Jacobian factorization


def test_jacobian_factorization_orthogonal_identity_case():
    rng = rng_from_seed(13)
    t_u, t_v = cross_orthogonal_pair(rng, CUBE.dims)
    us, vs = list(t_u.factors), list(t_v.factors)
    frame = np.hstack(
        [_tangent_blocks(us), _tangent_blocks(vs), _point(us)[:, None], _point(vs)[:, None]]
    )
    assert volume(frame) == pytest.approx(1.0, abs=1e-12)


def test_jacobian_factorization_degenerate_case():
    rng = rng_from_seed(14)
    us = [random_unit(rng, n) for n in CUBE.dims]
    lam, mu = 2.5, 0.3
    frame = np.hstack(
        [
            lam * _tangent_blocks(us),
            mu * _tangent_blocks(us),
            _point(us)[:, None],
            _point(us)[:, None],
        ]
    )
    sigma = CUBE.segre_dim
    unscaled = np.hstack(
        [_tangent_blocks(us), _tangent_blocks(us), _point(us)[:, None], _point(us)[:, None]]
    )
    assert volume(frame) == pytest.approx(0.0, abs=1e-8)
    assert lam ** (sigma - 1) * mu ** (sigma - 1) * volume(unscaled) == pytest.approx(
        0.0, abs=1e-8
    )


def test_jacobian_factorization_random_sweep():
    report = check_jacobian_factorization(1000, rng_from_seed(0))
    assert report.passed
    assert report.max_violation <= 1e-9


# ---------------------------------------------------------------------------
# Gram block structure


def test_gram_a_columns_direct():
    rng = rng_from_seed(15)
    us, vs = _pair_at_distances(rng, CUBE.dims, (0.04, 0.038, 0.037))
    a_dn, a_up, r_dn, r_up = frame_parts(us, vs)
    z = float(np.prod([u @ v for u, v in zip(us, vs)]))
    assert abs(a_dn @ a_up) <= 1e-14
    assert a_dn @ a_dn == pytest.approx(1.0 + z, abs=1e-13)
    assert a_up @ a_up == pytest.approx(1.0 - z, abs=1e-13)


def test_gram_r_cross_block_vanishes():
    rng = rng_from_seed(16)
    us, vs = _pair_at_distances(rng, (3, 3, 2), (0.05, 0.048, 0.046))
    _, _, r_dn, r_up = frame_parts(us, vs)
    assert np.abs(r_dn.T @ r_up).max() <= 1e-12


def test_gram_blocks_oracle():
    report = check_gram_blocks(400, rng_from_seed(0))
    assert report.passed
    assert report.max_violation <= 1e-12


# ---------------------------------------------------------------------------
# norm sandwich


def test_norm_sandwich_equal_tuples_all_zero():
    rng = rng_from_seed(17)
    us = [random_unit(rng, n) for n in CUBE.dims]
    lead = np.linalg.norm(us[0] - us[0])
    tens = np.linalg.norm(_point(us) - _point(us))
    assert lead == 0.0 and tens == 0.0


def test_norm_sandwich_left_bound_tight_for_one_mode():
    rng = rng_from_seed(18)
    us, moved = _pair_at_distances(rng, CUBE.dims, (0.05, 0.0, 0.0))
    vs = [moved[0], us[1], us[2]]
    lead = np.linalg.norm(us[0] - vs[0])
    tens = np.linalg.norm(_point(us) - _point(vs))
    assert tens == pytest.approx(lead, abs=1e-12)


def test_norm_sandwich_oracle():
    report = check_norm_sandwich(400, rng_from_seed(0))
    assert report.passed


# ---------------------------------------------------------------------------
# q lower bound


def test_q_lower_bound_near_coincident():
    report = check_q_lower_bound(200, rng_from_seed(0), epsilon=0.01)
    assert report.passed


def test_q_lower_bound_moderate_epsilon():
    report = check_q_lower_bound(400, rng_from_seed(1), epsilon=0.05)
    assert report.passed
    assert report.tolerance == 0.0


def test_q_bound_formula_scaling_in_segre_dim():
    # with d fixed, raising the tangent-cone dimension by one multiplies
    # the bound by (s/2)
    s = 0.08
    d = 3
    bound = lambda sigma: 2.0 ** (-2 * d) * (0.5 * s) ** (sigma - 1)
    assert bound(Shape((3, 3, 2)).segre_dim) / bound(CUBE.segre_dim) == pytest.approx(
        (0.5 * s) ** 2
    )


def test_q_bound_epsilon_sweep_shape():
    grid = (0.2, 0.1, 0.05)
    held = q_bound_epsilon_sweep(50, rng_from_seed(2), grid)
    assert set(held) == set(grid)
    assert held[0.05] is True


# ---------------------------------------------------------------------------
# polar-coordinate reductions


@pytest.fixture(scope="module")
def polar_errors():
    return polar_identity_checks(256, rng_from_seed(0))


def test_polar_closed_forms_tight(polar_errors):
    closed = {k: v for k, v in polar_errors.items() if "equal" in k or "orth" in k}
    assert closed, "expected closed-form cases in the check set"
    assert max(closed.values()) <= 1e-8


def test_polar_random_pairs_agree(polar_errors):
    random_cases = {k: v for k, v in polar_errors.items() if "random" in k}
    assert random_cases
    assert max(random_cases.values()) <= 1e-6


def test_quad_oracle_passes():
    report = quad_check_polar_identities(rng=rng_from_seed(0))
    assert report.passed
    assert report.trials == 16


def test_quad_grid_size_validated():
    with pytest.raises(ValueError):
        quad_check_polar_identities(grid_size=100)


# ---------------------------------------------------------------------------
# cosine product inequality


def test_cos_inequality_zero_violations():
    report = check_cos_inequality(64)
    assert report.passed
    assert report.max_violation == 0.0


def test_cos_equality_at_origin():
    for d in (1, 2, 3, 4):
        assert 1.0 - 0.0 / (7.0 * d) == 1.0


def test_cos_d1_right_endpoint():
    theta = 0.5 * math.pi
    assert math.cos(theta) <= 1.0 - theta**2 / 7.0
    assert 1.0 - theta**2 / 7.0 == pytest.approx(1.0 - math.pi**2 / 28.0)


# ---------------------------------------------------------------------------
# compensated scaling sweeps


def test_scaling_oracle_passes():
    report = check_integral_bound_scaling(pair_count=6, rng=rng_from_seed(3))
    assert report.passed
    assert report.tolerance == 1.5


def test_blend_integral_antipodal_bounded():
    # y = -x: the blend norm is (1 + sin 2t)^(1/2), never small
    a = 2.0
    integral = _split_theta_integral(lambda t: (1.0 + np.sin(2.0 * t)) ** (-0.5 * a))
    assert 0.5 * math.pi * 2.0 ** (-0.5 * a) <= integral <= 0.5 * math.pi


def test_blend_integral_diverges_but_product_is_flat():
    a = 2.0
    integrals = []
    for s in (0.2, 0.1, 0.05, 0.025):
        h = 1.0 - 0.5 * s * s
        integrals.append(
            _split_theta_integral(lambda t: (1.0 - np.sin(2.0 * t) * h) ** (-0.5 * a))
        )
    assert integrals[-1] / integrals[0] > 4.0
    compensated = [i * s for i, s in zip(integrals, (0.2, 0.1, 0.05, 0.025))]
    ratios = [b / a_ for a_, b in zip(compensated, compensated[1:])]
    assert max(ratios) <= 1.5


def test_scaling_rejects_exponent_below_one():
    with pytest.raises(ValueError):
        check_integral_bound_scaling(a_values=(0.5,), rng=rng_from_seed(0))


# ---------------------------------------------------------------------------
# suite runner


def test_run_suite_order_and_pass():
    reports = run_suite(trials=100, seed=0)
    assert [r.name for r in reports] == list(ORACLE_NAMES)
    assert all(r.passed for r in reports)


def test_run_suite_only_selection():
    reports = run_suite(trials=10, seed=0, only=("check_cos_inequality",))
    assert len(reports) == 1
    assert reports[0].name == "check_cos_inequality"


def test_run_suite_unknown_name():
    with pytest.raises(ValueError):
        run_suite(trials=10, seed=0, only=("not_an_oracle",))


def test_run_suite_deterministic():
    assert run_suite(trials=50, seed=4) == run_suite(trials=50, seed=4)
