"""Tests for the iterated projection-subtraction transform."""

import numpy as np
import pytest

from bscount.iterbs import (
    ProjectionStep,
    bs_step,
    inv_sqrt_one_minus,
    iterate,
    projection_step,
    r_operator,
    step_from_top_eigenpair,
)
from bscount.linop import SymOperator, count_evs, rank_one_projection, sym


def random_k_total(rng, dim, top_scale=0.9):
    """Random symmetric operator with spectrum inside (-1, top_scale)."""
    q = np.linalg.qr(rng.standard_normal((dim, dim)))[0]
    lam = rng.uniform(-0.8, top_scale, size=dim)
    return sym((q.T * lam) @ q)


def split_with_spectral_projection(rng, k_total):
    """Split K into K_part + L_part with a rank-one spectral K_part channel.

    K_part is built in a random orthonormal basis with a designated top
    eigenvalue mu in (0, 1); L_part is the remainder.
    """
    dim = k_total.dim
    q = np.linalg.qr(rng.standard_normal((dim, dim)))[0]
    mu = float(rng.uniform(0.3, 0.95))
    lam = rng.uniform(-0.5, mu - 0.1, size=dim)
    lam[0] = mu
    k_part = sym((q * lam) @ q.T)
    p = SymOperator(np.outer(q[:, 0], q[:, 0]))
    return projection_step(k_total, k_part, p, mu)


# ---------------------------------------------------------------------------
# inv_sqrt_one_minus / r_operator


def test_inv_sqrt_small_mu_is_near_identity():
    p = rank_one_projection(np.array([1.0, 0.0, 0.0]))
    out = inv_sqrt_one_minus(p, 1e-14)
    np.testing.assert_allclose(out.entries, np.eye(3), atol=1e-15 * 10)


def test_inv_sqrt_rank_one_closed_form():
    p = rank_one_projection(np.array([1.0, 0.0]))
    out = inv_sqrt_one_minus(p, 0.75)
    np.testing.assert_allclose(out.entries, np.diag([2.0, 1.0]), atol=1e-12)


def test_inv_sqrt_algebraic_identity():
    rng = np.random.default_rng(5)
    f = rng.standard_normal(6)
    p = rank_one_projection(f)
    mu = 0.5
    w = inv_sqrt_one_minus(p, mu).entries
    product = w @ w @ (np.eye(6) - mu * p.entries)
    np.testing.assert_allclose(product, np.eye(6), atol=1e-12)


def test_inv_sqrt_higher_rank_projection():
    q = np.linalg.qr(np.random.default_rng(6).standard_normal((5, 5)))[0][:, :2]
    p = SymOperator(q @ q.T)
    mu = 0.36
    w = inv_sqrt_one_minus(p, mu).entries
    product = w @ w @ (np.eye(5) - mu * p.entries)
    np.testing.assert_allclose(product, np.eye(5), atol=1e-12)


def test_inv_sqrt_rejects_bad_mu():
    p = rank_one_projection(np.array([1.0, 0.0]))
    for mu in (0.0, 1.0, 1.5, -0.2):
        with pytest.raises(ValueError, match="mu"):
            inv_sqrt_one_minus(p, mu)


def test_r_operator_is_projection_multiple():
    # mu = 0.75 makes 1/sqrt(1-mu) - 1 = 1, so R equals P itself
    p = rank_one_projection(np.array([0.0, 1.0]))
    r = r_operator(p, 0.75)
    np.testing.assert_allclose(r.entries, p.entries, atol=1e-12)


def test_r_operator_commutes_and_absorbs():
    rng = np.random.default_rng(8)
    f = rng.standard_normal(7)
    p = rank_one_projection(f)
    r = r_operator(p, 0.6).entries
    np.testing.assert_allclose(r @ p.entries, r, atol=1e-12)
    np.testing.assert_allclose(p.entries @ r, r, atol=1e-12)
    np.testing.assert_allclose(r @ (np.eye(7) - p.entries), np.zeros((7, 7)),
                               atol=1e-12)


def test_r_operator_vanishes_with_mu():
    p = rank_one_projection(np.array([1.0, 0.0]))
    r = r_operator(p, 1e-15)
    assert np.linalg.norm(r.entries) <= 1e-12


# ---------------------------------------------------------------------------
# ProjectionStep validation


def test_step_rejects_non_projection():
    k = sym(np.diag([0.5, 0.1]))
    with pytest.raises(ValueError, match="projection"):
        ProjectionStep(p=sym(0.5 * np.eye(2)), mu=0.5, k_part=k,
                       l_part=sym(np.zeros((2, 2))))


def test_step_rejects_non_spectral_projection():
    # P projects onto e1 but K_part's eigenvector at mu is rotated away
    theta = 0.4
    q = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    k_part = sym((q * [0.5, 0.1]) @ q.T)
    with pytest.raises(ValueError, match="spectral"):
        ProjectionStep(p=rank_one_projection(np.array([1.0, 0.0])), mu=0.5,
                       k_part=k_part, l_part=sym(np.zeros((2, 2))))


def test_step_rejects_mu_out_of_range():
    k = sym(np.diag([1.2, 0.0]))
    with pytest.raises(ValueError, match="mu"):
        ProjectionStep(p=rank_one_projection(np.array([1.0, 0.0])), mu=1.2,
                       k_part=k, l_part=sym(np.zeros((2, 2))))


# ---------------------------------------------------------------------------
# bs_step count invariance


def test_bs_step_orthogonal_channel_preserves_count():
    # T acts on a block orthogonal to P: counts above 1 unchanged
    t = sym(np.diag([1.5, 1.2, 0.3, 0.0]))
    p = rank_one_projection(np.array([0.0, 0.0, 0.0, 1.0]))
    step = ProjectionStep(p=p, mu=0.5, k_part=sym(0.5 * p.entries),
                          l_part=sym(t.entries - 0.5 * p.entries))
    t1 = bs_step(t, step)
    assert count_evs(t1, ">", 1.0) == count_evs(t, ">", 1.0) == 2
    # on ran(P) the transformed operator sits at -mu/(1-mu)
    val = t1.entries[3, 3]
    assert val == pytest.approx(-0.5 / 0.5, abs=1e-12)


def test_bs_step_count_invariance_random():
    rng = np.random.default_rng(31)
    for _ in range(50):
        dim = int(rng.integers(3, 14))
        k = random_k_total(rng, dim, top_scale=1.6)
        lam, vec = np.linalg.eigh(k.entries)
        # pick a positive eigenvalue below 1 as the subtraction channel
        ok = (lam > 0.05) & (lam < 0.95)
        if not np.any(ok):
            continue
        j = int(np.nonzero(ok)[0][-1])
        step = projection_step(
            k, k, SymOperator(np.outer(vec[:, j], vec[:, j])), float(lam[j]))
        t1 = bs_step(k, step)
        assert count_evs(t1, ">", 1.0) == count_evs(k, ">", 1.0)


def test_two_orthogonal_steps_preserve_count():
    rng = np.random.default_rng(37)
    dim = 10
    q = np.linalg.qr(rng.standard_normal((dim, dim)))[0]
    lam = rng.uniform(-0.5, 1.8, size=dim)
    lam[0], lam[1] = 0.7, 0.4
    k = sym((q * lam) @ q.T)
    base = count_evs(k, ">", 1.0)
    t = k
    for j in (0, 1):
        p = SymOperator(np.outer(q[:, j], q[:, j]))
        step = projection_step(k, k, p, float(lam[j]))
        t = bs_step(t, step)
        assert count_evs(t, ">", 1.0) == base


# ---------------------------------------------------------------------------
# iterate: recurrence vs conjugation


def test_iterate_zero_weight_limit():
    # all mu -> 0: every stage stays at K_total and M_k ~ 0
    rng = np.random.default_rng(41)
    k = random_k_total(rng, 8)
    steps = []
    for j in range(3):
        e = np.zeros(8)
        e[j] = 1.0
        mu = 1e-12
        p = rank_one_projection(e)
        steps.append(ProjectionStep(p=p, mu=mu, k_part=sym(mu * p.entries),
                                    l_part=sym(k.entries - mu * p.entries)))
    stages = iterate(k, steps)
    for stage in stages:
        assert np.linalg.norm(stage.m.entries) <= 1e-10
        assert np.linalg.norm(stage.t.entries - k.entries) <= 1e-10


def test_iterate_full_subsystem_kills_m():
    # K_1 = K_total, L_1 = 0: M_1 = 0 and the count is preserved
    rng = np.random.default_rng(43)
    k = random_k_total(rng, 9)
    step = step_from_top_eigenpair(k, k)
    stages = iterate(k, [step])
    assert np.linalg.norm(stages[0].m.entries) <= 1e-10
    assert count_evs(stages[0].t, ">", 1.0) == count_evs(k, ">", 1.0)


def test_iterate_three_spectral_steps_consistency_and_count():
    rng = np.random.default_rng(47)
    for _ in range(20):
        k = random_k_total(rng, 12, top_scale=1.5)
        base = count_evs(k, ">", 1.0)
        stages = []
        t_ref = k
        steps = []
        for _ in range(3):
            steps.append(split_with_spectral_projection(rng, k))
        stages = iterate(k, steps)
        assert len(stages) == 3
        for stage in stages:
            assert stage.consistency_residual <= 1e-8
            assert count_evs(stage.t, ">", 1.0) == base


def test_iterate_rejects_wrong_split():
    rng = np.random.default_rng(53)
    k = random_k_total(rng, 6)
    step = split_with_spectral_projection(rng, k)
    other = sym(k.entries + 0.5 * np.eye(6))
    with pytest.raises(ValueError, match="K_part"):
        iterate(other, [step])


def test_step_from_top_eigenpair_requires_valid_mu():
    k = sym(np.diag([1.4, 0.2]))
    with pytest.raises(ValueError, match="not in"):
        step_from_top_eigenpair(k, k)
