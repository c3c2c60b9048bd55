import math

import numpy as np
import pytest

from lrtrpo.errors import NumericError
from lrtrpo.trustregion import (
    FisherOperator,
    StepDiagnostics,
    TrustRegionConfig,
    conjugate_gradient,
    fisher_vector_product,
    surrogate_gradient,
    sampled_surrogate,
    trust_region_update,
)

from conftest import assert_close_rel, fd_gradient, make_batch, random_policy


# ----- surrogate gradient ------------------------------------------------


def test_surrogate_gradient_zero_advantages():
    p = random_policy(0)
    batch = make_batch(p, 50, seed=1)
    batch.advantages = np.zeros_like(batch.advantages)
    np.testing.assert_allclose(surrogate_gradient(batch, p), 0.0)


def test_surrogate_gradient_single_sample():
    p = random_policy(2)
    batch = make_batch(p, 1, seed=3, adv_scale=2.0)
    g = surrogate_gradient(batch, p)
    s = p.score_matrix(batch.rows, batch.cols, batch.actions)[0]
    np.testing.assert_allclose(g, s * batch.advantages[0], atol=1e-12)


@pytest.mark.parametrize("state_dep", [False, True])
def test_surrogate_gradient_finite_differences(state_dep):
    # oracle: FD of the importance-weighted surrogate at theta_old
    p = random_policy(4, state_dep_sigma=state_dep)
    batch = make_batch(p, 40, seed=5)
    g = surrogate_gradient(batch, p)

    def surrogate_of(theta):
        return sampled_surrogate(batch, p, p.with_flat(theta))

    fd = fd_gradient(surrogate_of, p.to_flat().values, h=1e-6)
    assert_close_rel(g, fd, rel_tol=1e-5, abs_tol=1e-9)


def test_surrogate_gradient_ratio_self_check():
    p = random_policy(6)
    batch = make_batch(p, 20, seed=7)
    batch.old_log_probs = batch.old_log_probs + 0.1  # not frozen under p
    with pytest.raises(NumericError):
        surrogate_gradient(batch, p)


def test_surrogate_gradient_empty_buffer():
    p = random_policy(8)
    batch = make_batch(p, 1, seed=9)
    batch.rows = batch.cols = np.zeros(0, dtype=int)
    batch.actions = batch.advantages = batch.old_log_probs = np.zeros(0)
    with pytest.raises(ValueError):
        surrogate_gradient(batch, p)


# ----- Fisher-vector product ---------------------------------------------


def test_fvp_zero_vector():
    p = random_policy(10)
    batch = make_batch(p, 30, seed=11)
    v = np.zeros(p.n_params)
    np.testing.assert_allclose(fisher_vector_product(batch, p, v, 0.5), 0.0)


def test_fvp_single_sample_rank_one():
    p = random_policy(12)
    batch = make_batch(p, 1, seed=13)
    s = p.score_matrix(batch.rows, batch.cols, batch.actions)[0]
    rng = np.random.default_rng(14)
    v = rng.normal(size=p.n_params)
    got = fisher_vector_product(batch, p, v, damping=0.0)
    np.testing.assert_allclose(got, s * (s @ v), atol=1e-12)


def test_fvp_matches_dense_fim_oracle():
    # small layout (<= 50 params) lets the FIM be materialized exactly
    p = random_policy(15, grid=None)
    assert p.n_params <= 50
    batch = make_batch(p, 60, seed=16)
    scores = p.score_matrix(batch.rows, batch.cols, batch.actions)
    for damping in (0.0, 1e-2):
        h_dense = scores.T @ scores / len(scores) + damping * np.eye(p.n_params)
        rng = np.random.default_rng(17)
        for _ in range(5):
            v = rng.normal(size=p.n_params)
            got = fisher_vector_product(batch, p, v, damping)
            np.testing.assert_allclose(got, h_dense @ v, atol=1e-10)


def test_fvp_linearity_symmetry_psd():
    p = random_policy(18)
    batch = make_batch(p, 40, seed=19)
    apply_h = FisherOperator(batch, p, damping=1e-3)
    rng = np.random.default_rng(20)
    u = rng.normal(size=p.n_params)
    v = rng.normal(size=p.n_params)
    a, b = 0.7, -1.3
    np.testing.assert_allclose(apply_h(a * u + b * v),
                               a * apply_h(u) + b * apply_h(v), atol=1e-10)
    assert u @ apply_h(v) == pytest.approx(v @ apply_h(u), abs=1e-10)
    assert v @ apply_h(v) >= 0.0


def test_fvp_length_mismatch():
    p = random_policy(21)
    batch = make_batch(p, 10, seed=22)
    with pytest.raises(ValueError):
        fisher_vector_product(batch, p, np.zeros(p.n_params + 1))


# ----- conjugate gradient --------------------------------------------------


def test_cg_identity_single_iteration():
    g = np.array([1.0, -2.0, 3.0])
    x, resid = conjugate_gradient(lambda v: v, g, cg_iters=1)
    np.testing.assert_allclose(x, g, atol=1e-12)
    assert resid <= 1e-12


def test_cg_matches_direct_solve():
    rng = np.random.default_rng(23)
    for trial in range(5):
        a = rng.normal(size=(20, 20))
        h = a @ a.T + 0.5 * np.eye(20)  # SPD
        g = rng.normal(size=20)
        x, _ = conjugate_gradient(lambda v: h @ v, g, cg_iters=60, cg_tol=1e-14)
        expected = np.linalg.solve(h, g)  # oracle: dense direct solver
        assert np.abs(x - expected).max() < 1e-8


def test_cg_zero_rhs():
    calls = []

    def apply_h(v):
        calls.append(1)
        return v

    x, resid = conjugate_gradient(apply_h, np.zeros(4))
    np.testing.assert_allclose(x, 0.0)
    assert resid == 0.0
    assert not calls  # zero iterations


def test_cg_nonpositive_curvature_raises():
    g = np.ones(3)
    with pytest.raises(NumericError):
        conjugate_gradient(lambda v: -v, g)


# ----- trust-region update --------------------------------------------------


def default_cfg(**kw):
    return TrustRegionConfig(**kw)


def test_update_identity_on_zero_advantages():
    p = random_policy(24)
    batch = make_batch(p, 30, seed=25)
    batch.advantages = np.zeros_like(batch.advantages)
    new, diag = trust_region_update(p, batch, default_cfg())
    assert new is p
    assert diag.kl_after == 0.0
    assert diag.step_scale == 0.0
    assert diag.accepted


def test_update_boundary_step_closed_form():
    # H = I, g = e1, delta = 0.5: CG returns e1 and the boundary scaling
    # sqrt(2 * delta / x.Hx) leaves the full step at e1 with |step|^2 = 2 delta
    delta = 0.5
    g = np.zeros(5)
    g[0] = 1.0
    x, _ = conjugate_gradient(lambda v: v, g, cg_iters=1)
    step = math.sqrt(2.0 * delta / (x @ x)) * x
    np.testing.assert_allclose(step, g)
    assert step @ step == pytest.approx(2.0 * delta)


def test_update_full_step_sits_on_model_boundary():
    # when no backtracking triggers, the accepted step satisfies
    # step . H step = 2 delta (the quadratic model's constraint boundary)
    p = random_policy(26)
    batch = make_batch(p, 200, seed=27, adv_scale=0.1)
    cfg = default_cfg(delta=1e-3, cg_iters=30)
    new, diag = trust_region_update(p, batch, cfg)
    assert diag.accepted
    if diag.n_backtracks == 0:
        step = new.to_flat().values - p.to_flat().values
        apply_h = FisherOperator(batch, p, cfg.damping)
        assert step @ apply_h(step) == pytest.approx(2 * cfg.delta, rel=1e-9)


@pytest.mark.parametrize("state_dep", [False, True])
def test_update_accepted_step_contract(state_dep):
    for seed in range(5):
        p = random_policy(30 + seed, state_dep_sigma=state_dep)
        batch = make_batch(p, 150, seed=40 + seed)
        cfg = default_cfg()
        new, diag = trust_region_update(p, batch, cfg)
        if not diag.accepted:
            continue
        assert diag.kl_after <= cfg.delta * 1.05
        assert diag.surrogate_after >= diag.surrogate_before
        # recomputed KL agrees with the diagnostics
        assert p.kl_at(new, batch.rows, batch.cols) == pytest.approx(
            diag.kl_after, abs=1e-12)


def test_update_reject_path_keeps_policy():
    p = random_policy(50)
    batch = make_batch(p, 50, seed=51)
    cfg = default_cfg(max_backtracks=0)
    new, diag = trust_region_update(p, batch, cfg)
    assert new is p
    assert not diag.accepted
    assert diag.step_scale == 0.0
    assert diag.n_backtracks == 0


def test_update_backtracks_under_tight_radius():
    p = random_policy(52)
    batch = make_batch(p, 100, seed=53, adv_scale=5.0)
    loose = trust_region_update(p, batch, default_cfg(delta=1e-2))[1]
    tight = trust_region_update(p, batch, default_cfg(delta=1e-6))[1]
    assert tight.kl_after <= 1e-6 * 1.05 or not tight.accepted
    if loose.accepted and tight.accepted:
        assert tight.step_scale <= loose.step_scale + 1e-12


def test_diagnostics_fields():
    d = StepDiagnostics(1.0, 2.0, 0.005, 1e-11, 0.8, 1, True)
    assert d.surrogate_after >= d.surrogate_before
    assert d.kl_after <= 0.01
