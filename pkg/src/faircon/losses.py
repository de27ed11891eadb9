"""Contrastive training objectives with exact analytic gradients.

A paired batch holds 2N rows: N anchors followed by their N augmented views,
row i + N pairing with row i.  Both objectives share the pattern

    score s_ij = z_i . z_j / tau,
    dL/dZ = (G + G^T) Z / tau   where G_ij = dL/ds_ij,

so each loss builds its G matrix and one matmul produces the gradient.
Gradients flow into anchors and views alike.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


@dataclass
class LossConfig:
    tau: float = 0.5
    lam: float = 0.0  # weight on the pair-conditional term
    gamma: float = 0.5  # blend between cross-entropy and contrastive parts

    def validate(self) -> None:
        if not self.tau > 0:
            raise ConfigError("tau must be positive")
        if self.lam < 0:
            raise ConfigError("lam must be non-negative")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError("gamma must lie in [0, 1]")


@dataclass
class PairedBatch:
    """2N embeddings with labels and group attrs; rows [N:] are views of [:N]."""

    z: np.ndarray  # (2N, d)
    labels: np.ndarray  # (2N,)
    attrs: np.ndarray  # (2N,)
    n_anchors: int

    def __post_init__(self) -> None:
        self.z = np.asarray(self.z, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        self.attrs = np.asarray(self.attrs, dtype=int)
        n = self.n_anchors
        if n < 1:
            raise ConfigError("need at least one anchor")
        if self.z.ndim != 2 or self.z.shape[0] != 2 * n:
            raise ConfigError(f"z must be (2N, d) with N={n}; got {self.z.shape}")
        if self.labels.shape != (2 * n,) or self.attrs.shape != (2 * n,):
            raise ConfigError("labels and attrs must have shape (2N,)")
        if not np.isfinite(self.z).all():
            raise ConfigError("non-finite embedding")
        if not (
            np.array_equal(self.labels[:n], self.labels[n:])
            and np.array_equal(self.attrs[:n], self.attrs[n:])
        ):
            raise ConfigError("view i+N must share label and attr with anchor i")

    @property
    def size(self) -> int:
        return 2 * self.n_anchors

    def partner_index(self) -> np.ndarray:
        n = self.n_anchors
        return np.concatenate([np.arange(n) + n, np.arange(n)])

    def check_unit_norm(self, atol: float = 1e-6) -> None:
        norms = np.linalg.norm(self.z, axis=1)
        if not np.allclose(norms, 1.0, atol=atol):
            raise ConfigError("embeddings are not unit-norm")


def _scores(z: np.ndarray, tau: float) -> np.ndarray:
    return (z @ z.T) / tau


def _masked_softmax(s: np.ndarray, mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise softmax of s restricted to mask; returns (probs, log normalizer).

    Max-subtraction per row keeps the exponentials in range.  Rows whose mask
    is empty are the caller's error; guarded upstream.
    """
    neg = np.where(mask, s, -np.inf)
    m = neg.max(axis=1, keepdims=True)
    e = np.exp(neg - m)
    e[~mask] = 0.0
    denom = e.sum(axis=1, keepdims=True)
    log_norm = np.log(denom[:, 0]) + m[:, 0]
    return e / denom, log_norm


def sup_contrastive_loss(batch: PairedBatch, tau: float) -> tuple[float, np.ndarray]:
    """Label-level contrastive objective and its gradient dL/dZ.

    Each anchor attracts every other same-label row against all 2N - 1
    non-self rows, with the positive set averaged by 1/(count of same-label
    companions).  A batch of two rows has a single positive that is also the
    whole denominator's only competitor, so the loss is identically zero there.
    """
    if not tau > 0:
        raise ConfigError("tau must be positive")
    z, y = batch.z, batch.labels
    m = batch.size
    s = _scores(z, tau)
    off_diag = ~np.eye(m, dtype=bool)
    pos = (y[:, None] == y[None, :]) & off_diag
    n_pos = pos.sum(axis=1)
    if (n_pos == 0).any():
        raise ConfigError("an anchor has no same-label companion")  # pairing makes this unreachable
    probs, log_norm = _masked_softmax(s, off_diag)
    coeff = 1.0 / n_pos
    # loss_i = log_norm_i - coeff_i * sum of positive scores (coeff * |pos| = 1)
    loss = float(np.sum(log_norm - coeff * (s * pos).sum(axis=1)))
    g = probs - coeff[:, None] * pos
    dz = (g + g.T) @ z / tau
    return loss, dz


def conditional_infonce_loss(batch: PairedBatch, tau: float) -> tuple[float, np.ndarray]:
    """Pair-conditional contrastive objective and its gradient dL/dZ.

    Each row's sole positive is its augmentation partner; the normalizer runs
    only over other rows sharing the anchor's (attr, label) cell.  The partner
    always qualifies, so the term is defined for every row.  When a cell holds
    nothing beyond one anchor/view pair the ratio is positive-over-positive
    and that pair contributes exactly zero loss and zero gradient.
    """
    if not tau > 0:
        raise ConfigError("tau must be positive")
    z, y, a = batch.z, batch.labels, batch.attrs
    m = batch.size
    partner = batch.partner_index()
    s = _scores(z, tau)
    off_diag = ~np.eye(m, dtype=bool)
    cell = (y[:, None] == y[None, :]) & (a[:, None] == a[None, :]) & off_diag
    n_cell = cell.sum(axis=1)  # >= 1: the partner always qualifies
    probs, log_norm = _masked_softmax(s, cell)
    coeff = 1.0 / n_cell
    pos_scores = s[np.arange(m), partner]
    loss = float(np.sum(coeff * (log_norm - pos_scores)))
    g = coeff[:, None] * probs
    g[np.arange(m), partner] -= coeff
    dz = (g + g.T) @ z / tau
    return loss, dz


def pretrain_loss(batch: PairedBatch, cfg: LossConfig) -> tuple[float, np.ndarray]:
    """Stage-one objective: label term plus lam times the pair-conditional term."""
    cfg.validate()
    l_sup, d_sup = sup_contrastive_loss(batch, cfg.tau)
    if cfg.lam == 0.0:
        return l_sup, d_sup
    l_cond, d_cond = conditional_infonce_loss(batch, cfg.tau)
    return l_sup + cfg.lam * l_cond, d_sup + cfg.lam * d_cond


def one_stage_loss(
    batch: PairedBatch, logits: np.ndarray, cfg: LossConfig
) -> tuple[float, np.ndarray, np.ndarray]:
    """Joint objective (1-gamma) CE + gamma label term + lam pair term.

    ``logits`` are treated as an independent input (the caller chains the
    classifier Jacobian); returns (loss, dL/dZ, dL/dlogits).  Cross-entropy
    averages over all 2N rows, views included.
    """
    cfg.validate()
    logits = np.asarray(logits, dtype=float)
    m = batch.size
    if logits.ndim != 2 or logits.shape[0] != m:
        raise ConfigError(f"logits must have {m} rows")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    ce = float(-log_probs[np.arange(m), batch.labels].mean())
    d_logits = np.exp(log_probs)
    d_logits[np.arange(m), batch.labels] -= 1.0
    d_logits *= (1.0 - cfg.gamma) / m

    l_sup, d_sup = sup_contrastive_loss(batch, cfg.tau)
    dz = cfg.gamma * d_sup
    loss = (1.0 - cfg.gamma) * ce + cfg.gamma * l_sup
    if cfg.lam != 0.0:
        l_cond, d_cond = conditional_infonce_loss(batch, cfg.tau)
        loss += cfg.lam * l_cond
        dz += cfg.lam * d_cond
    return loss, dz, d_logits


@dataclass
class GradCheckReport:
    """Worst central-difference relative error over all checked inputs."""

    z_error: float
    logits_error: float | None
    step: float

    @property
    def max_error(self) -> float:
        errs = [self.z_error]
        if self.logits_error is not None:
            errs.append(self.logits_error)
        return max(errs)

    def to_dict(self) -> dict:
        return {
            "z_error": self.z_error,
            "logits_error": self.logits_error,
            "step": self.step,
            "max_error": self.max_error,
        }


def _rel_err(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(
        float(np.abs(analytic).max(initial=0.0)),
        float(np.abs(numeric).max(initial=0.0)),
        1e-12,
    )
    return float(np.abs(analytic - numeric).max(initial=0.0) / scale)


def grad_check(
    loss_fn,
    batch: PairedBatch,
    logits: np.ndarray | None = None,
    step: float = 1e-5,
) -> GradCheckReport:
    """Audit analytic gradients against central finite differences.

    ``loss_fn(batch, ...)`` must return (loss, dz) or, when ``logits`` is
    given, (loss, dz, dlogits).  Perturbed embeddings bypass unit-norm
    assumptions on purpose; the losses are smooth off the sphere.
    """

    def rebuilt(z):
        return PairedBatch(z, batch.labels.copy(), batch.attrs.copy(), batch.n_anchors)

    if logits is None:
        loss, dz = loss_fn(rebuilt(batch.z.copy()))
    else:
        loss, dz, d_logits = loss_fn(rebuilt(batch.z.copy()), logits)

    num_dz = np.zeros_like(batch.z)
    for idx in np.ndindex(batch.z.shape):
        zp = batch.z.copy()
        zp[idx] += step
        zm = batch.z.copy()
        zm[idx] -= step
        if logits is None:
            lp = loss_fn(rebuilt(zp))[0]
            lm = loss_fn(rebuilt(zm))[0]
        else:
            lp = loss_fn(rebuilt(zp), logits)[0]
            lm = loss_fn(rebuilt(zm), logits)[0]
        num_dz[idx] = (lp - lm) / (2 * step)
    z_err = _rel_err(dz, num_dz)

    logits_err = None
    if logits is not None:
        num_dl = np.zeros_like(logits)
        for idx in np.ndindex(logits.shape):
            gp = logits.copy()
            gp[idx] += step
            gm = logits.copy()
            gm[idx] -= step
            num_dl[idx] = (
                loss_fn(rebuilt(batch.z.copy()), gp)[0]
                - loss_fn(rebuilt(batch.z.copy()), gm)[0]
            ) / (2 * step)
        logits_err = _rel_err(d_logits, num_dl)

    return GradCheckReport(z_err, logits_err, step)
