"""Training regimes, evaluation, and hyperparameter sweeps.

Two regimes share one batch pipeline (stratified anchor batches, each row
paired with a fresh augmented view every epoch):

* two-stage: contrastively pretrain the encoder, freeze it, then fit a
  linear softmax head with cross-entropy on the frozen codes;
* one-stage: jointly optimize the cross-entropy/contrastive blend end to end.

Both early-stop on a validation signal (stage-one objective value for
pretraining, F1 afterwards) and restore the best checkpoint seen.
All randomness descends from a single integer seed through fixed derivation
tags, so a rerun reproduces every batch, view, and update bit for bit.

The contrastive losses are defined as sums over the 2N batch rows; the
optimizers here descend the per-row mean (the same objective rescaled by
1/2N, with identical minimizers) so step sizes stay batch-size invariant
and comparable to the cross-entropy term in the joint regime.  Histories
report the per-row value.
"""

from __future__ import annotations

import csv
import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .augment import AugmentStrategy, SynonymLexicon, make_pair_batch
from .data import Corpus, Dataset, stratified_batches
from .encoder import (
    AdamState,
    ClassifierGrads,
    ClassifierParams,
    EncoderConfig,
    EncoderParams,
    adam_step,
    classifier_logits,
    cross_entropy_batch,
    encode_batch,
    encode_batch_backward,
    init_classifier,
    init_encoder,
    sgd_step,
)
from .errors import ConfigError, TrainingDivergedError
from .fairness import MetricsRecord, PredictionRecord, evaluate_predictions, f1_scores
from .losses import LossConfig, PairedBatch, one_stage_loss, pretrain_loss

MODES = ("two_stage", "one_stage")
OPTIMIZERS = ("sgd", "adam")

# Seed derivation tags: every stream is default_rng([seed, tag, ...]).
_TAG_ENC_INIT = 0
_TAG_CLF_INIT = 1
_TAG_BATCHES = 2
_TAG_AUGMENT = 3
_TAG_VAL_BATCHES = 4
_TAG_VAL_AUGMENT = 5
_TAG_FINETUNE = 6


@dataclass
class TrainConfig:
    mode: str = "two_stage"
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    augment: AugmentStrategy = field(default_factory=AugmentStrategy)
    anchors_per_batch: int = 32
    pretrain_epochs: int = 15
    finetune_epochs: int = 10
    learning_rate: float = 0.1
    finetune_learning_rate: float = 0.5
    optimizer: str = "sgd"
    patience: int = 3
    seed: int = 0

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"optimizer must be one of {OPTIMIZERS}")
        self.encoder.validate()
        self.loss.validate()
        if self.anchors_per_batch < 2:
            raise ConfigError("anchors_per_batch must be >= 2")
        if self.pretrain_epochs < 1 or self.finetune_epochs < 1:
            raise ConfigError("epoch counts must be >= 1")
        if self.learning_rate <= 0 or self.finetune_learning_rate <= 0:
            raise ConfigError("learning rates must be positive")
        if self.patience < 1:
            raise ConfigError("patience must be >= 1")


@dataclass
class TrainedModel:
    encoder: EncoderParams
    classifier: ClassifierParams
    num_classes: int
    config: TrainConfig
    history: list[dict] = field(default_factory=list)

    @property
    def epochs_ran(self) -> int:
        return len(self.history)


def benchmark_train_config(lam: float, seed: int) -> TrainConfig:
    """Frozen two-stage setup for fairness/accuracy trade-off experiments.

    Meant to be paired with ``standard_biased_config`` corpora and a
    ``group_masking_lexicon``: full-rate synonym replacement then hands the
    pair loss a group-blind view of every anchor, so its alignment pull acts
    on exactly the group-identifying directions.  The flat temperature keeps
    within-cell contrast weak relative to that pull; at 0.5 the
    instance-discrimination force re-encodes group tokens and the equalized
    odds gap moves the wrong way.  Only the pair-loss weight and seed vary
    across experiment arms.
    """
    return TrainConfig(
        mode="two_stage",
        encoder=EncoderConfig(),
        loss=LossConfig(tau=2.0, lam=lam, gamma=0.5),
        augment=AugmentStrategy(kind="synonym_replace", rate=1.0),
        anchors_per_batch=32,
        pretrain_epochs=15,
        finetune_epochs=10,
        learning_rate=1.0,
        finetune_learning_rate=0.5,
        optimizer="sgd",
        patience=3,
        seed=seed,
    )


def _epoch_pair_batches(dataset, cfg, lexicon, epoch):
    """Yield 2N-example paired batches for one epoch; views are resampled
    every epoch from the epoch-tagged augmentation stream."""
    idx_batches = stratified_batches(
        dataset, cfg.anchors_per_batch, [cfg.seed, _TAG_BATCHES, epoch]
    )
    for b, idxs in enumerate(idx_batches):
        anchors = [dataset.examples[i] for i in idxs]
        yield make_pair_batch(
            anchors, cfg.augment, lexicon, [cfg.seed, _TAG_AUGMENT, epoch, b]
        )


def _paired_forward(encoder, examples, n_anchors):
    z, cache = encode_batch(encoder, [ex.tokens for ex in examples])
    batch = PairedBatch(
        z,
        np.array([ex.label for ex in examples]),
        np.array([ex.attr for ex in examples]),
        n_anchors,
    )
    return batch, cache


def _make_stepper(cfg: TrainConfig, params):
    if cfg.optimizer == "sgd":
        return lambda p, g, lr: sgd_step(p, g, lr)
    state = AdamState.for_params(params)
    return lambda p, g, lr: adam_step(p, g, state, lr)


def _check_finite(loss, where):
    if not np.isfinite(loss):
        raise TrainingDivergedError(f"non-finite loss at {where}")


def _ce_from_logits(logits: np.ndarray, labels: np.ndarray) -> float:
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return float(-log_probs[np.arange(len(labels)), labels].mean())


def _pretrain_val_loss(encoder, corpus, cfg, lexicon):
    """Mean stage-one objective over a frozen validation pairing.

    Batch composition and views derive from fixed tags rather than the epoch,
    so successive epochs score the identical validation quantity and early
    stopping compares like with like.
    """
    total, count = 0.0, 0
    idx_batches = stratified_batches(
        corpus.val, cfg.anchors_per_batch, [cfg.seed, _TAG_VAL_BATCHES]
    )
    for b, idxs in enumerate(idx_batches):
        anchors = [corpus.val.examples[i] for i in idxs]
        examples = make_pair_batch(
            anchors, cfg.augment, lexicon, [cfg.seed, _TAG_VAL_AUGMENT, b]
        )
        batch, _ = _paired_forward(encoder, examples, cfg.anchors_per_batch)
        loss, _ = pretrain_loss(batch, cfg.loss)
        total += loss / batch.size
        count += 1
    if count == 0:
        raise ConfigError("validation split too small for one batch")
    return total / count


def encode_dataset(encoder: EncoderParams, dataset: Dataset) -> np.ndarray:
    z, _ = encode_batch(encoder, [ex.tokens for ex in dataset.examples])
    return z


def predict_dataset(model: TrainedModel, dataset: Dataset) -> list[PredictionRecord]:
    z = encode_dataset(model.encoder, dataset)
    preds = classifier_logits(model.classifier, z).argmax(axis=1)
    return [
        PredictionRecord(ex.label, int(p), ex.attr)
        for ex, p in zip(dataset.examples, preds)
    ]


def evaluate_model(model: TrainedModel, dataset: Dataset) -> MetricsRecord:
    return evaluate_predictions(
        predict_dataset(model, dataset), dataset.num_classes, dataset.num_groups
    )


def _val_f1(encoder, classifier, dataset) -> float:
    z = encode_dataset(encoder, dataset)
    preds = classifier_logits(classifier, z).argmax(axis=1)
    records = [
        PredictionRecord(ex.label, int(p), ex.attr)
        for ex, p in zip(dataset.examples, preds)
    ]
    return f1_scores(records, dataset.num_classes)


def run_two_stage(corpus: Corpus, cfg: TrainConfig, lexicon: SynonymLexicon | None) -> TrainedModel:
    cfg.validate()
    corpus.train.validate()
    encoder = init_encoder(
        corpus.train.vocab_size, cfg.encoder, np.random.default_rng([cfg.seed, _TAG_ENC_INIT])
    )
    stepper = _make_stepper(cfg, encoder)
    history: list[dict] = []

    best_val = np.inf
    best_encoder = encoder.copy()
    since_best = 0
    for epoch in range(cfg.pretrain_epochs):
        epoch_loss, n_batches = 0.0, 0
        for examples in _epoch_pair_batches(corpus.train, cfg, lexicon, epoch):
            batch, cache = _paired_forward(encoder, examples, cfg.anchors_per_batch)
            loss, dz = pretrain_loss(batch, cfg.loss)
            _check_finite(loss, f"pretrain epoch {epoch} batch {n_batches}")
            grads = encode_batch_backward(cache, dz / batch.size)
            stepper(encoder, grads, cfg.learning_rate)
            epoch_loss += loss / batch.size
            n_batches += 1
        val_loss = _pretrain_val_loss(encoder, corpus, cfg, lexicon)
        history.append(
            {
                "stage": 1,
                "epoch": epoch,
                "train_loss": epoch_loss / max(n_batches, 1),
                "val_loss": val_loss,
            }
        )
        if val_loss < best_val - 1e-12:
            best_val = val_loss
            best_encoder = encoder.copy()
            since_best = 0
        else:
            since_best += 1
            if since_best >= cfg.patience:
                break
    encoder = best_encoder  # frozen from here on

    classifier = init_classifier(
        cfg.encoder.out_dim,
        corpus.train.num_classes,
        np.random.default_rng([cfg.seed, _TAG_CLF_INIT]),
    )
    clf_stepper = _make_stepper(cfg, classifier)
    # The encoder is frozen, so codes are computed once and minibatched.
    z_train = encode_dataset(encoder, corpus.train)
    y_train = corpus.train.labels()
    batch_rows = 2 * cfg.anchors_per_batch
    best_f1 = -np.inf
    best_clf = classifier.copy()
    since_best = 0
    for epoch in range(cfg.finetune_epochs):
        order = np.random.default_rng([cfg.seed, _TAG_FINETUNE, epoch]).permutation(
            len(y_train)
        )
        epoch_loss, n_batches = 0.0, 0
        for start in range(0, len(order) - batch_rows + 1, batch_rows):
            rows = order[start : start + batch_rows]
            loss, grads, _ = cross_entropy_batch(classifier, z_train[rows], y_train[rows])
            _check_finite(loss, f"finetune epoch {epoch} batch {n_batches}")
            clf_stepper(classifier, grads, cfg.finetune_learning_rate)
            epoch_loss += loss
            n_batches += 1
        f1 = _val_f1(encoder, classifier, corpus.val)
        history.append(
            {
                "stage": 2,
                "epoch": epoch,
                "train_loss": epoch_loss / max(n_batches, 1),
                "val_f1": f1,
            }
        )
        if f1 > best_f1 + 1e-12:
            best_f1 = f1
            best_clf = classifier.copy()
            since_best = 0
        else:
            since_best += 1
            if since_best >= cfg.patience:
                break

    return TrainedModel(encoder, best_clf, corpus.train.num_classes, cfg, history)


def run_one_stage(corpus: Corpus, cfg: TrainConfig, lexicon: SynonymLexicon | None) -> TrainedModel:
    cfg.validate()
    corpus.train.validate()
    encoder = init_encoder(
        corpus.train.vocab_size, cfg.encoder, np.random.default_rng([cfg.seed, _TAG_ENC_INIT])
    )
    classifier = init_classifier(
        cfg.encoder.out_dim,
        corpus.train.num_classes,
        np.random.default_rng([cfg.seed, _TAG_CLF_INIT]),
    )
    enc_step = _make_stepper(cfg, encoder)
    clf_step = _make_stepper(cfg, classifier)
    history: list[dict] = []
    best_f1 = -np.inf
    best = (encoder.copy(), classifier.copy())
    since_best = 0
    for epoch in range(cfg.pretrain_epochs):
        epoch_loss, n_batches = 0.0, 0
        for examples in _epoch_pair_batches(corpus.train, cfg, lexicon, epoch):
            batch, cache = _paired_forward(encoder, examples, cfg.anchors_per_batch)
            logits = classifier_logits(classifier, batch.z)
            loss, dz, d_logits = one_stage_loss(batch, logits, cfg.loss)
            _check_finite(loss, f"one-stage epoch {epoch} batch {n_batches}")
            # Descend the per-row mean: the cross-entropy component of the
            # formula is already a row mean, so only the contrastive part and
            # its gradient get the 1/2N rescale.
            ce = _ce_from_logits(logits, batch.labels)
            mean_obj = (1.0 - cfg.loss.gamma) * ce + (
                loss - (1.0 - cfg.loss.gamma) * ce
            ) / batch.size
            # Chain the classifier through the logits; codes get both paths.
            clf_grads = ClassifierGrads(batch.z.T @ d_logits, d_logits.sum(axis=0))
            dz = dz / batch.size + d_logits @ classifier.w.T
            enc_grads = encode_batch_backward(cache, dz)
            enc_step(encoder, enc_grads, cfg.learning_rate)
            clf_step(classifier, clf_grads, cfg.learning_rate)
            epoch_loss += mean_obj
            n_batches += 1
        f1 = _val_f1(encoder, classifier, corpus.val)
        history.append(
            {
                "stage": 1,
                "epoch": epoch,
                "train_loss": epoch_loss / max(n_batches, 1),
                "val_f1": f1,
            }
        )
        if f1 > best_f1 + 1e-12:
            best_f1 = f1
            best = (encoder.copy(), classifier.copy())
            since_best = 0
        else:
            since_best += 1
            if since_best >= cfg.patience:
                break
    encoder, classifier = best
    return TrainedModel(encoder, classifier, corpus.train.num_classes, cfg, history)


def train(corpus: Corpus, cfg: TrainConfig, lexicon: SynonymLexicon | None) -> TrainedModel:
    runner = run_two_stage if cfg.mode == "two_stage" else run_one_stage
    return runner(corpus, cfg, lexicon)


# ---------------------------------------------------------------------------
# Sweeps.

ROW_FIELDS = (
    "mode",
    "lambda",
    "gamma",
    "tau",
    "batch",
    "augment",
    "seed",
    "f1",
    "delta_tpr",
    "delta_fpr",
    "delta_eo",
    "epochs_ran",
    "status",
)

AGG_FIELDS = (
    "mode",
    "lambda",
    "gamma",
    "tau",
    "batch",
    "augment",
    "n_ok",
    "f1_mean",
    "f1_std",
    "delta_tpr_mean",
    "delta_tpr_std",
    "delta_fpr_mean",
    "delta_fpr_std",
    "delta_eo_mean",
    "delta_eo_std",
)


def _sweep_cell(args) -> dict:
    corpus, cfg, lexicon = args
    key = {
        "mode": cfg.mode,
        "lambda": cfg.loss.lam,
        "gamma": cfg.loss.gamma,
        "tau": cfg.loss.tau,
        "batch": cfg.anchors_per_batch,
        "augment": cfg.augment.kind,
        "seed": cfg.seed,
    }
    start = time.perf_counter()
    try:
        model = train(corpus, cfg, lexicon)
        metrics = evaluate_model(model, corpus.test)
        row = {
            **key,
            "f1": metrics.f1,
            "delta_tpr": metrics.delta_tpr,
            "delta_fpr": metrics.delta_fpr,
            "delta_eo": metrics.delta_eo,
            "epochs_ran": model.epochs_ran,
            "status": "ok",
        }
    except (ConfigError, TrainingDivergedError, FloatingPointError) as err:
        row = {
            **key,
            "f1": None,
            "delta_tpr": None,
            "delta_fpr": None,
            "delta_eo": None,
            "epochs_ran": 0,
            "status": f"failed: {err}",
        }
    row["wall_seconds"] = time.perf_counter() - start
    return row


def sweep(
    corpus: Corpus,
    base_cfg: TrainConfig,
    lexicon: SynonymLexicon | None,
    seeds: list[int],
    lambdas: list[float] | None = None,
    taus: list[float] | None = None,
    batch_sizes: list[int] | None = None,
    augment_kinds: list[str] | None = None,
    modes: list[str] | None = None,
    workers: int = 1,
) -> tuple[list[dict], list[dict]]:
    """Cross product of the provided axes; absent axes pin to ``base_cfg``.

    Returns (rows, aggregates).  A failed cell keeps its row with a status
    message and empty metrics instead of aborting the sweep.  Row order is
    the deterministic grid order regardless of worker count.
    """
    lambdas = lambdas if lambdas is not None else [base_cfg.loss.lam]
    taus = taus if taus is not None else [base_cfg.loss.tau]
    batch_sizes = batch_sizes if batch_sizes is not None else [base_cfg.anchors_per_batch]
    augment_kinds = augment_kinds if augment_kinds is not None else [base_cfg.augment.kind]
    modes = modes if modes is not None else [base_cfg.mode]
    if not seeds:
        raise ConfigError("need at least one seed")

    cells = []
    for mode, lam, tau, batch, kind, seed in itertools.product(
        modes, lambdas, taus, batch_sizes, augment_kinds, seeds
    ):
        cfg = replace(
            base_cfg,
            mode=mode,
            seed=seed,
            anchors_per_batch=batch,
            loss=replace(base_cfg.loss, lam=lam, tau=tau),
            augment=AugmentStrategy(kind, base_cfg.augment.rate),
        )
        cfg.validate()
        cells.append((corpus, cfg, lexicon))

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_sweep_cell, cells))
    else:
        rows = [_sweep_cell(c) for c in cells]

    aggregates = aggregate_rows(rows)
    return rows, aggregates


def aggregate_rows(rows: list[dict]) -> list[dict]:
    """Mean and sample std over seeds for every non-seed grid point."""
    groups: dict[tuple, list[dict]] = {}
    order: list[tuple] = []
    for row in rows:
        key = tuple(row[k] for k in ("mode", "lambda", "gamma", "tau", "batch", "augment"))
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row)
    out = []
    for key in order:
        ok = [r for r in groups[key] if r["status"] == "ok"]
        agg = dict(zip(("mode", "lambda", "gamma", "tau", "batch", "augment"), key))
        agg["n_ok"] = len(ok)
        for metric in ("f1", "delta_tpr", "delta_fpr", "delta_eo"):
            vals = np.array([r[metric] for r in ok], dtype=float)
            if len(vals) == 0:
                agg[f"{metric}_mean"] = None
                agg[f"{metric}_std"] = None
            else:
                agg[f"{metric}_mean"] = float(vals.mean())
                agg[f"{metric}_std"] = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
        out.append(agg)
    return out


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_rows_csv(rows: list[dict], path: str | Path) -> None:
    """Per-run results; deterministic byte-for-byte given identical rows.

    Wall-clock timing is deliberately kept out of this file (see
    :func:`write_timing_csv`) so reruns of a deterministic sweep produce
    identical artifacts.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(ROW_FIELDS)
        for row in rows:
            w.writerow([_csv_cell(row[k]) for k in ROW_FIELDS])


def write_aggregate_csv(aggs: list[dict], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(AGG_FIELDS)
        for agg in aggs:
            w.writerow([_csv_cell(agg[k]) for k in AGG_FIELDS])


def write_timing_csv(rows: list[dict], path: str | Path) -> None:
    """Optional sidecar with wall-clock seconds; varies run to run by nature."""
    fields = ("mode", "lambda", "gamma", "tau", "batch", "augment", "seed", "wall_seconds")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(fields)
        for row in rows:
            w.writerow([_csv_cell(row[k]) for k in fields])


def metrics_payload(metrics: MetricsRecord, cfg: TrainConfig, split: str) -> dict:
    """Flat JSON document for one evaluated run."""
    return {
        "seed": cfg.seed,
        "split": split,
        "lambda": cfg.loss.lam,
        "gamma": cfg.loss.gamma,
        "tau": cfg.loss.tau,
        **metrics.to_dict(),
    }


METRIC_CSV_FIELDS = (
    "seed",
    "split",
    "lambda",
    "gamma",
    "tau",
    "f1",
    "delta_tpr",
    "delta_fpr",
    "delta_eo",
)


def write_metrics_csv(payload: dict, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(METRIC_CSV_FIELDS)
        w.writerow([_csv_cell(payload[k]) for k in METRIC_CSV_FIELDS])
