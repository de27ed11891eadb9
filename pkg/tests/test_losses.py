import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import random_paired_batch
from faircon.errors import ConfigError
from faircon.losses import (
    LossConfig,
    PairedBatch,
    conditional_infonce_loss,
    grad_check,
    one_stage_loss,
    pretrain_loss,
    sup_contrastive_loss,
)


def make_batch(z, labels, attrs, n=None):
    n = n if n is not None else len(labels) // 2
    return PairedBatch(np.asarray(z, float), np.asarray(labels), np.asarray(attrs), n)


# --- closed forms -----------------------------------------------------------


def test_identical_embeddings_same_label_closed_form():
    """Four identical rows, one label: every softmax is uniform over 3 rows."""
    z = np.tile(np.array([[0.6, 0.8]]), (4, 1))
    batch = make_batch(z, [0, 0, 0, 0], [0, 1, 0, 1])
    loss, dz = sup_contrastive_loss(batch, tau=0.5)
    assert loss == pytest.approx(4 * math.log(3), abs=1e-12)
    assert np.allclose(dz, 0.0, atol=1e-12)


def test_identical_embeddings_single_cell_closed_form():
    # one (attr, label) cell of size 4, uniform ratios 1/3, coefficient 1/3 per row
    z = np.tile(np.array([[1.0, 0.0]]), (4, 1))
    batch = make_batch(z, [1, 1, 1, 1], [0, 0, 0, 0])
    loss, dz = conditional_infonce_loss(batch, tau=0.5)
    assert loss == pytest.approx(4.0 / 3.0 * math.log(3), abs=1e-12)
    assert np.allclose(dz, 0.0, atol=1e-12)


def test_singleton_cells_give_exact_zero():
    """A cell holding only one anchor/view pair contributes 0, not just small."""
    rng = np.random.default_rng(3)
    z = rng.normal(size=(4, 5))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    batch = make_batch(z, [0, 1, 0, 1], [0, 0, 0, 0])  # distinct (attr,label) per pair
    loss, dz = conditional_infonce_loss(batch, tau=0.7)
    assert loss == 0.0
    assert np.all(dz == 0.0)


def test_two_row_batch_label_loss_is_zero():
    rng = np.random.default_rng(11)
    z = rng.normal(size=(2, 4))
    batch = make_batch(z, [1, 1], [0, 0])
    loss, dz = sup_contrastive_loss(batch, tau=1.0)
    assert loss == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(dz, 0.0, atol=1e-12)


# --- agreement with the loop oracles ---------------------------------------


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 5), st.integers(2, 4))
def test_label_loss_matches_loop(seed, n_anchors, dim):
    rng = np.random.default_rng(seed)
    z, labels, attrs = random_paired_batch(rng, n_anchors, dim)
    batch = make_batch(z, labels, attrs, n_anchors)
    loss, _ = sup_contrastive_loss(batch, tau=0.5)
    ref = oracles.sup_loss_loop(z.tolist(), labels.tolist(), 0.5)
    assert loss == pytest.approx(ref, rel=1e-10, abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 5), st.floats(0.2, 3.0))
def test_pair_conditional_loss_matches_loop(seed, n_anchors, tau):
    rng = np.random.default_rng(seed)
    z, labels, attrs = random_paired_batch(rng, n_anchors, dim=4)
    batch = make_batch(z, labels, attrs, n_anchors)
    loss, _ = conditional_infonce_loss(batch, tau)
    ref = oracles.cond_loss_loop(z.tolist(), labels.tolist(), attrs.tolist(), tau)
    assert loss == pytest.approx(ref, rel=1e-10, abs=1e-10)


def test_losses_invariant_under_anchor_permutation():
    rng = np.random.default_rng(5)
    z, labels, attrs = random_paired_batch(rng, n_anchors=5, dim=4)
    n = 5
    perm = rng.permutation(n)
    full = np.concatenate([perm, perm + n])
    batch = make_batch(z, labels, attrs, n)
    shuffled = make_batch(z[full], labels[full], attrs[full], n)
    for fn in (lambda b: sup_contrastive_loss(b, 0.5), lambda b: conditional_infonce_loss(b, 0.5)):
        assert fn(batch)[0] == pytest.approx(fn(shuffled)[0], rel=1e-12)


# --- gradients --------------------------------------------------------------


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_label_loss_gradient(seed):
    rng = np.random.default_rng(seed)
    z, labels, attrs = random_paired_batch(rng, n_anchors=4, dim=5)
    batch = make_batch(z, labels, attrs, 4)
    report = grad_check(lambda b: sup_contrastive_loss(b, 0.5), batch)
    assert report.max_error < 1e-6


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_pair_conditional_gradient(seed):
    rng = np.random.default_rng(seed)
    z, labels, attrs = random_paired_batch(rng, n_anchors=4, dim=5)
    batch = make_batch(z, labels, attrs, 4)
    report = grad_check(lambda b: conditional_infonce_loss(b, 0.3), batch)
    assert report.max_error < 1e-6


def test_joint_objective_gradients_including_logits():
    rng = np.random.default_rng(9)
    z, labels, attrs = random_paired_batch(rng, n_anchors=3, dim=4)
    batch = make_batch(z, labels, attrs, 3)
    logits = rng.normal(size=(6, 2))
    cfg = LossConfig(tau=0.5, lam=1.5, gamma=0.3)
    report = grad_check(lambda b, lg: one_stage_loss(b, lg, cfg), batch, logits=logits)
    assert report.logits_error is not None
    assert report.max_error < 1e-6


# --- composition ------------------------------------------------------------


def test_pretrain_loss_is_weighted_sum():
    rng = np.random.default_rng(21)
    z, labels, attrs = random_paired_batch(rng, n_anchors=4, dim=4)
    batch = make_batch(z, labels, attrs, 4)
    cfg = LossConfig(tau=0.5, lam=2.5)
    total, d_total = pretrain_loss(batch, cfg)
    l_sup, d_sup = sup_contrastive_loss(batch, 0.5)
    l_cond, d_cond = conditional_infonce_loss(batch, 0.5)
    assert total == pytest.approx(l_sup + 2.5 * l_cond, rel=1e-12)
    assert np.allclose(d_total, d_sup + 2.5 * d_cond, atol=1e-12)


def test_joint_objective_reduces_to_cross_entropy():
    rng = np.random.default_rng(22)
    z, labels, attrs = random_paired_batch(rng, n_anchors=3, dim=4)
    batch = make_batch(z, labels, attrs, 3)
    logits = rng.normal(size=(6, 3))
    loss, dz, d_logits = one_stage_loss(batch, logits, LossConfig(gamma=0.0, lam=0.0))
    shifted = logits - logits.max(axis=1, keepdims=True)
    logp = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    assert loss == pytest.approx(float(-logp[np.arange(6), batch.labels].mean()), rel=1e-12)
    assert np.all(dz == 0.0)
    assert np.abs(d_logits).max() > 0


def test_joint_objective_pure_contrastive_leaves_logits_alone():
    rng = np.random.default_rng(23)
    z, labels, attrs = random_paired_batch(rng, n_anchors=3, dim=4)
    batch = make_batch(z, labels, attrs, 3)
    logits = rng.normal(size=(6, 2))
    _, _, d_logits = one_stage_loss(batch, logits, LossConfig(gamma=1.0, lam=0.0))
    assert np.all(d_logits == 0.0)


# --- validation -------------------------------------------------------------


def test_batch_rejects_mismatched_pairing():
    z = np.zeros((4, 3))
    with pytest.raises(ConfigError):
        PairedBatch(z, np.array([0, 1, 1, 0]), np.zeros(4, dtype=int), 2)
    with pytest.raises(ConfigError):
        PairedBatch(z, np.array([0, 1, 0, 1]), np.array([0, 0, 1, 0]), 2)


def test_batch_rejects_non_finite_and_bad_shapes():
    with pytest.raises(ConfigError):
        PairedBatch(np.full((4, 3), np.nan), np.zeros(4, int), np.zeros(4, int), 2)
    with pytest.raises(ConfigError):
        PairedBatch(np.zeros((3, 2)), np.zeros(3, int), np.zeros(3, int), 2)
    with pytest.raises(ConfigError):
        PairedBatch(np.zeros((0, 2)), np.zeros(0, int), np.zeros(0, int), 0)


def test_partner_index_round_trips():
    z = np.zeros((6, 2))
    batch = PairedBatch(z, np.zeros(6, int), np.zeros(6, int), 3)
    partner = batch.partner_index()
    assert partner.tolist() == [3, 4, 5, 0, 1, 2]
    assert np.array_equal(partner[partner], np.arange(6))


def test_unit_norm_check():
    batch = PairedBatch(np.eye(2), np.zeros(2, int), np.zeros(2, int), 1)
    batch.check_unit_norm()
    bad = PairedBatch(2 * np.eye(2), np.zeros(2, int), np.zeros(2, int), 1)
    with pytest.raises(ConfigError):
        bad.check_unit_norm()


def test_loss_config_validation():
    with pytest.raises(ConfigError):
        LossConfig(tau=0.0).validate()
    with pytest.raises(ConfigError):
        LossConfig(lam=-1.0).validate()
    with pytest.raises(ConfigError):
        LossConfig(gamma=1.5).validate()
    with pytest.raises(ConfigError):
        sup_contrastive_loss(PairedBatch(np.eye(2), np.zeros(2, int), np.zeros(2, int), 1), tau=-1.0)
