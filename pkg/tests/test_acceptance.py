"""Acceptance gate: ten numbered criteria, each printing one verdict line.

Tolerances are pinned here and intentionally not shared with the unit tests;
where a criterion involves a derived quantity the check runs against the
independent loop oracles in ``oracles.py`` or against finite differences.
"""

from __future__ import annotations

import json
import math
import time

import numpy as np
import pytest

import oracles
from conftest import ACCEPTANCE_LINES, random_paired_batch
from faircon.augment import group_masking_lexicon
from faircon.cli import main as cli_main
from faircon.data import generate_synthetic, standard_biased_config
from faircon.encoder import (
    EncoderConfig,
    cross_entropy_batch,
    encode_batch,
    encode_batch_backward,
    init_classifier,
    init_encoder,
)
from faircon.fairness import PredictionRecord, evaluate_predictions
from faircon.infobounds import (
    Critic,
    check_kl_variational,
    check_mixture_kl_bound,
    conditional_infonce_exact,
    joint_from_process,
    mutual_information,
    random_process,
    run_equality_suite,
    run_mixture_suite,
    run_monotone_suite,
    run_sandwich_suite,
    run_upper_bound_suite,
    summarize_suite,
)
from faircon.losses import (
    LossConfig,
    PairedBatch,
    conditional_infonce_loss,
    grad_check,
    one_stage_loss,
    pretrain_loss,
    sup_contrastive_loss,
)
from faircon.train import benchmark_train_config, evaluate_model, train

TOL = 1e-9


def _verdict(num: int, ok: bool, detail: str) -> None:
    line = f"CRITERION {num:2d}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(np.abs(a).max(initial=0.0), np.abs(b).max(initial=0.0), 1e-12)
    return float(np.abs(np.asarray(a) - np.asarray(b)).max(initial=0.0) / scale)


# --- 1: two-sided group-information bound ----------------------------------


def test_criterion_01_sandwich_bound():
    t0 = time.perf_counter()
    rows = run_sandwich_suite(1000, seed=202, workers=1)
    elapsed = time.perf_counter() - t0
    worst = max(r["slack"] for r in rows)
    failures = summarize_suite(rows)["failures"]

    eq_rows = run_equality_suite(200, seed=203, workers=1)
    eq_eps = max(r["epsilon"] for r in eq_rows)
    eq_gap = max(r["equality_gap"] for r in eq_rows)

    ok = (
        failures == 0
        and worst <= TOL
        and elapsed < 60.0
        and eq_eps == 0.0
        and eq_gap <= TOL
    )
    _verdict(
        1,
        ok,
        f"1000/1000 joints inside the sandwich (worst slack {worst:.2e}), "
        f"200/200 zero-residual joints at equality (gap {eq_gap:.2e}), "
        f"{elapsed:.1f}s single-threaded",
    )


# --- 2: expected-log-loss upper bound --------------------------------------


def test_criterion_02_logloss_upper_bound():
    rows = run_upper_bound_suite(500, seed=204, workers=1)
    summary = summarize_suite(rows)
    finite = [r for r in rows if not r["infinite"]]
    worst = max((r["lhs"] - r["rhs"]) for r in finite)
    ok = summary["failures"] == 0 and worst <= TOL
    _verdict(
        2,
        ok,
        f"500/500 joints bounded ({summary['infinite']} infinite flagged, "
        f"worst finite slack {worst:.2e})",
    )


# --- 3: exact contrastive lower bound and tuple-size monotonicity ----------


def test_criterion_03_contrastive_lower_bound():
    held = total = 0
    zero_at_one = True
    for j in range(20):
        rng = np.random.default_rng([205, j])
        joint = joint_from_process(random_process(rng, n_inputs=4, n_codes=3))
        cmi = mutual_information(joint, "view", "code", ("attr", "label"))
        for _ in range(100):
            critic = Critic(rng.uniform(-3.0, 3.0, size=(3, 3)))
            total += 1
            held += conditional_infonce_exact(joint, critic, 2) <= cmi + TOL
        probe = Critic(rng.uniform(-3.0, 3.0, size=(3, 3)))
        zero_at_one &= conditional_infonce_exact(joint, probe, 1) == 0.0

    mono_rows = run_monotone_suite(20, seed=206, workers=1)
    mono_fail = summarize_suite(mono_rows)["failures"]
    starts_zero = all(r["starts_at_zero"] for r in mono_rows)

    ok = held == total == 2000 and zero_at_one and mono_fail == 0 and starts_zero
    _verdict(
        3,
        ok,
        f"{held}/{total} random critics below the conditional information at "
        f"pair size 2; values start at 0 and grow with tuple size on 20/20 "
        f"shared-input joints",
    )


# --- 4: KL variational identity --------------------------------------------


def test_criterion_04_kl_variational_identity():
    worst_gap = worst_excess = -math.inf
    for i in range(50):
        rng = np.random.default_rng([207, i])
        p = rng.random(6) + 0.05
        q = rng.random(6) + 0.05
        rep = check_kl_variational(p / p.sum(), q / q.sum(), n_critics=100, rng=rng)
        worst_gap = max(worst_gap, rep.identity_gap)
        worst_excess = max(worst_excess, rep.max_excess_over_kl)
    ok = worst_gap <= TOL and worst_excess <= TOL
    _verdict(
        4,
        ok,
        f"optimal critic attains the divergence on 50/50 pairs (worst gap "
        f"{worst_gap:.2e}); 5000 sampled critics never exceed it (worst excess "
        f"{worst_excess:.2e})",
    )


# --- 5: mixture-of-products convexity bound --------------------------------


def test_criterion_05_mixture_bound():
    rows = run_mixture_suite(500, seed=208, workers=1)
    summary = summarize_suite(rows)

    rng = np.random.default_rng(209)
    single = random_process(rng, n_groups=1, n_labels=1, n_inputs=4, n_codes=3)
    rep = check_mixture_kl_bound(joint_from_process(single))
    degenerate_equal = (not rep.infinite) and abs(rep.lhs - rep.rhs) <= TOL

    ok = summary["failures"] == 0 and degenerate_equal
    _verdict(
        5,
        ok,
        f"500/500 joints bounded; single-cell case is an equality "
        f"(gap {abs(rep.lhs - rep.rhs):.2e})",
    )


# --- 6: gradient audits -----------------------------------------------------

H = 1e-5
GRAD_TOL = 1e-4


def _loss_audits(seed: int) -> float:
    rng = np.random.default_rng([210, seed])
    z, labels, attrs = random_paired_batch(rng, n_anchors=4, dim=5)
    batch = PairedBatch(z, labels, attrs, 4)
    cfg = LossConfig(tau=0.7, lam=2.0, gamma=0.4)
    worst = 0.0
    for fn in (
        lambda b: sup_contrastive_loss(b, cfg.tau),
        lambda b: conditional_infonce_loss(b, cfg.tau),
        lambda b: pretrain_loss(b, cfg),
    ):
        worst = max(worst, grad_check(fn, batch, step=H).max_error)
    logits = rng.normal(size=(8, 3))
    rep = grad_check(lambda b, lg: one_stage_loss(b, lg, cfg), batch, logits, step=H)
    return max(worst, rep.max_error)


def _ce_audit(seed: int) -> float:
    rng = np.random.default_rng([211, seed])
    clf = init_classifier(4, 3, rng)
    z = rng.normal(size=(6, 4))
    labels = rng.integers(0, 3, size=6)
    _, grads, dz = cross_entropy_batch(clf, z, labels)
    worst = 0.0
    num_dz = np.zeros_like(z)
    for idx in np.ndindex(z.shape):
        zp, zm = z.copy(), z.copy()
        zp[idx] += H
        zm[idx] -= H
        num_dz[idx] = (
            cross_entropy_batch(clf, zp, labels)[0]
            - cross_entropy_batch(clf, zm, labels)[0]
        ) / (2 * H)
    worst = max(worst, _rel(dz, num_dz))
    for name, tensor in clf.tensors().items():
        num = np.zeros_like(tensor)
        for idx in np.ndindex(tensor.shape):
            orig = tensor[idx]
            tensor[idx] = orig + H
            lp = cross_entropy_batch(clf, z, labels)[0]
            tensor[idx] = orig - H
            lm = cross_entropy_batch(clf, z, labels)[0]
            tensor[idx] = orig
            num[idx] = (lp - lm) / (2 * H)
        worst = max(worst, _rel(grads.tensors()[name], num))
    return worst


def _encoder_audit(seed: int) -> float:
    rng = np.random.default_rng([212, seed])
    params = init_encoder(12, EncoderConfig(embed_dim=4, hidden_dim=5, out_dim=3), rng)
    toks = [list(rng.integers(0, 12, size=int(rng.integers(2, 7)))) for _ in range(6)]
    weights = rng.normal(size=(6, 3))  # L = sum(weights * Z) probes every output
    _, cache = encode_batch(params, toks)
    grads = encode_batch_backward(cache, weights)
    worst = 0.0
    for name, tensor in params.tensors().items():
        num = np.zeros_like(tensor)
        for idx in np.ndindex(tensor.shape):
            orig = tensor[idx]
            tensor[idx] = orig + H
            lp = float((weights * encode_batch(params, toks)[0]).sum())
            tensor[idx] = orig - H
            lm = float((weights * encode_batch(params, toks)[0]).sum())
            tensor[idx] = orig
            num[idx] = (lp - lm) / (2 * H)
        worst = max(worst, _rel(grads.tensors()[name], num))
    return worst


def test_criterion_06_gradient_audits():
    worst = 0.0
    for seed in range(20):
        worst = max(worst, _loss_audits(seed), _ce_audit(seed), _encoder_audit(seed))
    ok = worst < GRAD_TOL
    _verdict(
        6,
        ok,
        f"six analytic gradients match central differences over 20 seeds "
        f"(worst relative error {worst:.2e} at step {H:g})",
    )


# --- 7: closed-form loss anchors -------------------------------------------


def test_criterion_07_closed_form_anchors():
    same = np.tile(np.array([[0.6, 0.8]]), (4, 1))
    sup, _ = sup_contrastive_loss(PairedBatch(same, [0, 0, 0, 0], [0, 1, 0, 1], 2), 0.5)
    cond, _ = conditional_infonce_loss(PairedBatch(same, [1, 1, 1, 1], [0, 0, 0, 0], 2), 0.5)

    rng = np.random.default_rng(213)
    z = rng.normal(size=(4, 5))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    singleton, dz = conditional_infonce_loss(PairedBatch(z, [0, 1, 0, 1], [0, 0, 0, 0], 2), 0.7)

    sup_err = abs(sup - 4 * math.log(3))
    cond_err = abs(cond - 4.0 / 3.0 * math.log(3))
    ok = sup_err <= TOL and cond_err <= TOL and singleton == 0.0 and np.all(dz == 0.0)
    _verdict(
        7,
        ok,
        f"identical-row batch hits 4*ln3 (err {sup_err:.2e}) and (4/3)*ln3 "
        f"(err {cond_err:.2e}); singleton cells give exactly 0",
    )


# --- 8: fairness metrics against a brute-force counter ----------------------


def _random_records(rng) -> tuple[list[PredictionRecord], int, int]:
    num_classes = int(rng.integers(2, 4))
    num_groups = int(rng.integers(2, 4))
    records = [
        # one true example per (group, class) keeps every rate defined
        PredictionRecord(c, int(rng.integers(num_classes)), g)
        for g in range(num_groups)
        for c in range(num_classes)
    ]
    for _ in range(int(rng.integers(20, 100))):
        records.append(
            PredictionRecord(
                int(rng.integers(num_classes)),
                int(rng.integers(num_classes)),
                int(rng.integers(num_groups)),
            )
        )
    return records, num_classes, num_groups


def test_criterion_08_fairness_oracle():
    agreed = 0
    for i in range(200):
        rng = np.random.default_rng([214, i])
        records, num_classes, num_groups = _random_records(rng)
        m = evaluate_predictions(records, num_classes, num_groups)

        gaps = oracles.eo_gaps_loop(records, num_classes, num_groups)
        classes = [1] if num_classes == 2 else list(range(num_classes))
        want_tpr = sum(gaps[c][0] for c in classes)
        want_fpr = sum(gaps[c][1] for c in classes)
        if num_classes == 2:
            want_f1 = oracles.f1_loop(records, 1)
        else:
            want_f1 = sum(oracles.f1_loop(records, c) for c in classes) / num_classes

        per_class_sum = sum(c.delta_tpr + c.delta_fpr for c in m.per_class)
        agreed += (
            abs(m.delta_tpr - want_tpr) <= 1e-12
            and abs(m.delta_fpr - want_fpr) <= 1e-12
            and abs(m.delta_eo - (want_tpr + want_fpr)) <= 1e-12
            and abs(m.f1 - want_f1) <= 1e-12
            and abs(m.delta_eo - per_class_sum) <= 1e-12
        )
    ok = agreed == 200
    _verdict(
        8,
        ok,
        f"{agreed}/200 random prediction sets match the brute-force counter "
        f"to 1e-12; summed gap equals the per-class sum throughout",
    )


# --- 9: the pair-conditional weight shrinks the gap -------------------------


def test_criterion_09_fairness_direction():
    t0 = time.perf_counter()
    synth = standard_biased_config(seed=0)
    corpus = generate_synthetic(synth)
    lexicon = group_masking_lexicon(synth)

    means: dict[float, tuple[float, float]] = {}
    for lam in (0.0, 5.0):
        deo, f1 = [], []
        for seed in range(5):
            model = train(corpus, benchmark_train_config(lam=lam, seed=seed), lexicon)
            metrics = evaluate_model(model, corpus.test)
            deo.append(metrics.delta_eo)
            f1.append(metrics.f1)
        means[lam] = (sum(deo) / 5, sum(f1) / 5)
    elapsed = time.perf_counter() - t0

    gap_shrinks = means[5.0][0] < means[0.0][0]
    f1_drop = means[0.0][1] - means[5.0][1]
    ok = gap_shrinks and f1_drop <= 0.15 and elapsed < 1200.0
    _verdict(
        9,
        ok,
        f"5-seed mean equalized-odds gap {means[0.0][0]:.3f} -> {means[5.0][0]:.3f} "
        f"as the pair-loss weight goes 0 -> 5; mean F1 {means[0.0][1]:.3f} -> "
        f"{means[5.0][1]:.3f} (drop {f1_drop:+.3f}); {elapsed:.0f}s",
    )


# --- 10: byte-identical artifacts on rerun ----------------------------------

REPRO_TOML = """\
[synth]
n_train = 160
n_val = 60
n_test = 80
doc_len = 8
vocab_size = 40
seed = 3

[encoder]
embed_dim = 8
hidden_dim = 8
out_dim = 4

[train]
anchors_per_batch = 8
pretrain_epochs = 2
finetune_epochs = 2

[sweep]
lambdas = [0.0, 1.0]
seeds = [0]
"""


def test_criterion_10_reproducibility(tmp_path):
    toml = tmp_path / "cfg.toml"
    toml.write_text(REPRO_TOML, encoding="utf-8")

    def run_twice(argv_for, files):
        outs = []
        for rep in ("a", "b"):
            out = tmp_path / f"{files[0]}_{rep}"
            assert cli_main(argv_for(out)) == 0
            outs.append(out)
        return all(
            (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes() for f in files[1]
        )

    gen_same = run_twice(
        lambda out: ["gen", "--config", str(toml), "--out", str(out)],
        ("gen", ("train.jsonl", "val.jsonl", "test.jsonl", "lexicon.json")),
    )
    train_same = run_twice(
        lambda out: ["train", "--config", str(toml), "--out", str(out)],
        ("train", ("checkpoint.json", "history.json")),
    )
    sweep_same = run_twice(
        lambda out: ["sweep", "--config", str(toml), "--out", str(out)],
        ("sweep", ("rows.csv", "aggregate.csv")),
    )
    bounds_same = run_twice(
        lambda out: ["verify-bounds", "--trials", "30", "--seed", "5", "--out", str(out)],
        ("bounds", ("bounds_report.json",)),
    )

    ok = gen_same and train_same and sweep_same and bounds_same
    _verdict(
        10,
        ok,
        "rerun artifacts byte-identical for gen, train, sweep, and "
        "verify-bounds (JSONL, JSON checkpoints, CSVs, bound reports)",
    )
