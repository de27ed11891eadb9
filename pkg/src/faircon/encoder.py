"""Tiny text encoder and linear classifier with hand-written gradients.

Forward path: embedding lookup, mean pool over positions, one tanh hidden
layer, linear projection, L2 normalization onto the unit sphere.  Backward
passes are explicit numpy; no autograd anywhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError

DEGENERATE_NORM = 1e-30


@dataclass
class EncoderConfig:
    embed_dim: int = 32
    hidden_dim: int = 64
    out_dim: int = 32

    def validate(self) -> None:
        if min(self.embed_dim, self.hidden_dim, self.out_dim) < 1:
            raise ConfigError("encoder dims must be positive")


@dataclass
class EncoderParams:
    embedding: np.ndarray  # (vocab, embed)
    w1: np.ndarray  # (embed, hidden)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden, out)
    b2: np.ndarray  # (out,)

    def tensors(self) -> dict[str, np.ndarray]:
        return {
            "embedding": self.embedding,
            "w1": self.w1,
            "b1": self.b1,
            "w2": self.w2,
            "b2": self.b2,
        }

    def copy(self) -> "EncoderParams":
        return EncoderParams(**{k: v.copy() for k, v in self.tensors().items()})


@dataclass
class ClassifierParams:
    w: np.ndarray  # (out, classes)
    b: np.ndarray  # (classes,)

    def tensors(self) -> dict[str, np.ndarray]:
        return {"w": self.w, "b": self.b}

    def copy(self) -> "ClassifierParams":
        return ClassifierParams(self.w.copy(), self.b.copy())


def init_encoder(vocab_size: int, cfg: EncoderConfig, rng: np.random.Generator) -> EncoderParams:
    """Unit-scale embeddings, fan-balanced uniform layer weights, zero biases.

    Keeps the pre-normalization output near unit norm at the start; a tiny
    norm there would blow up gradients through the unit-sphere projection
    (its Jacobian divides by that norm) and collapse training in one step.
    """
    cfg.validate()
    if vocab_size < 1:
        raise ConfigError("vocab_size must be positive")

    def fan_uniform(n_in, n_out):
        limit = np.sqrt(6.0 / (n_in + n_out))
        return rng.uniform(-limit, limit, size=(n_in, n_out))

    return EncoderParams(
        embedding=rng.uniform(-1.0, 1.0, size=(vocab_size, cfg.embed_dim)),
        w1=fan_uniform(cfg.embed_dim, cfg.hidden_dim),
        b1=np.zeros(cfg.hidden_dim),
        w2=fan_uniform(cfg.hidden_dim, cfg.out_dim),
        b2=np.zeros(cfg.out_dim),
    )


def init_classifier(out_dim: int, num_classes: int, rng: np.random.Generator) -> ClassifierParams:
    return ClassifierParams(
        w=rng.uniform(-0.08, 0.08, size=(out_dim, num_classes)),
        b=np.zeros(num_classes),
    )


@dataclass
class BatchCache:
    """Everything the backward pass needs from one batched forward."""

    params: EncoderParams
    token_lists: list[tuple[int, ...]]
    pooled: np.ndarray  # (B, embed)
    hidden: np.ndarray  # (B, hidden)
    pre_norm: np.ndarray  # (B, out)
    norms: np.ndarray  # (B,)
    z: np.ndarray  # (B, out)
    degenerate: np.ndarray  # (B,) bool


def encode_batch(params: EncoderParams, token_lists) -> tuple[np.ndarray, BatchCache]:
    """Encode a list of token sequences to unit-norm rows of Z.

    A zero-norm pre-normalization output falls back to the first basis vector
    and is flagged; its gradient contribution is zeroed on the way back.
    """
    vocab = params.embedding.shape[0]
    pooled = np.empty((len(token_lists), params.embedding.shape[1]))
    toks = []
    for b, seq in enumerate(token_lists):
        seq = tuple(int(t) for t in seq)
        if not seq:
            raise ConfigError(f"sequence {b} is empty")
        if min(seq) < 0 or max(seq) >= vocab:
            raise ConfigError(f"sequence {b}: token id outside [0, {vocab})")
        toks.append(seq)
        pooled[b] = params.embedding[list(seq)].mean(axis=0)
    hidden = np.tanh(pooled @ params.w1 + params.b1)
    pre_norm = hidden @ params.w2 + params.b2
    norms = np.linalg.norm(pre_norm, axis=1)
    degenerate = norms < DEGENERATE_NORM
    safe = np.where(degenerate, 1.0, norms)
    z = pre_norm / safe[:, None]
    if degenerate.any():
        z[degenerate] = 0.0
        z[degenerate, 0] = 1.0
    cache = BatchCache(params, toks, pooled, hidden, pre_norm, norms, z, degenerate)
    return z, cache


def encode_forward(params: EncoderParams, tokens) -> tuple[np.ndarray, BatchCache]:
    """Single-sequence convenience wrapper around :func:`encode_batch`."""
    z, cache = encode_batch(params, [tokens])
    return z[0], cache


@dataclass
class EncoderGrads:
    embedding: np.ndarray
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    had_degenerate: bool = False

    def tensors(self) -> dict[str, np.ndarray]:
        return {
            "embedding": self.embedding,
            "w1": self.w1,
            "b1": self.b1,
            "w2": self.w2,
            "b2": self.b2,
        }


def encode_batch_backward(cache: BatchCache, dz: np.ndarray) -> EncoderGrads:
    """Accumulate parameter gradients for a batched forward.

    The unit-sphere projection backpropagates through the Jacobian
    (I - z z^T) / ||u||; degenerate rows contribute zero.
    """
    p = cache.params
    dz = np.asarray(dz, dtype=float)
    if dz.shape != cache.z.shape:
        raise ConfigError(f"dz shape {dz.shape} != z shape {cache.z.shape}")
    safe = np.where(cache.degenerate, 1.0, cache.norms)
    du = (dz - cache.z * np.sum(cache.z * dz, axis=1, keepdims=True)) / safe[:, None]
    du[cache.degenerate] = 0.0
    db2 = du.sum(axis=0)
    dw2 = cache.hidden.T @ du
    dh = du @ p.w2.T
    da = (1.0 - cache.hidden**2) * dh
    db1 = da.sum(axis=0)
    dw1 = cache.pooled.T @ da
    dpool = da @ p.w1.T
    demb = np.zeros_like(p.embedding)
    for b, seq in enumerate(cache.token_lists):
        np.add.at(demb, list(seq), dpool[b] / len(seq))
    return EncoderGrads(demb, dw1, db1, dw2, db2, bool(cache.degenerate.any()))


def classifier_logits(clf: ClassifierParams, z: np.ndarray) -> np.ndarray:
    return np.atleast_2d(z) @ clf.w + clf.b


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


@dataclass
class ClassifierGrads:
    w: np.ndarray
    b: np.ndarray

    def tensors(self) -> dict[str, np.ndarray]:
        return {"w": self.w, "b": self.b}


def cross_entropy_batch(
    clf: ClassifierParams, z: np.ndarray, labels: np.ndarray
) -> tuple[float, ClassifierGrads, np.ndarray]:
    """Mean cross-entropy over rows; returns (loss, clf grads, dL/dz)."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    labels = np.atleast_1d(np.asarray(labels, dtype=int))
    n, c = z.shape[0], clf.b.shape[0]
    if labels.min() < 0 or labels.max() >= c:
        raise ConfigError(f"label outside [0, {c})")
    logits = classifier_logits(clf, z)
    probs = softmax_rows(logits)
    with np.errstate(divide="ignore"):  # -log(0) = inf is the divergence signal
        loss = float(-np.mean(np.log(probs[np.arange(n), labels])))
    g = probs.copy()
    g[np.arange(n), labels] -= 1.0
    g /= n
    return loss, ClassifierGrads(z.T @ g, g.sum(axis=0)), g @ clf.w.T


def sgd_step(params, grads, lr: float) -> None:
    """In-place vanilla SGD over any params/grads pair exposing ``tensors()``."""
    g = grads.tensors()
    for name, t in params.tensors().items():
        t -= lr * g[name]


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0

    @classmethod
    def for_params(cls, params) -> "AdamState":
        return cls(
            m={k: np.zeros_like(v) for k, v in params.tensors().items()},
            v={k: np.zeros_like(v) for k, v in params.tensors().items()},
        )


def adam_step(
    params,
    grads,
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    state.t += 1
    g = grads.tensors()
    for name, t in params.tensors().items():
        state.m[name] = beta1 * state.m[name] + (1 - beta1) * g[name]
        state.v[name] = beta2 * state.v[name] + (1 - beta2) * g[name] ** 2
        mhat = state.m[name] / (1 - beta1**state.t)
        vhat = state.v[name] / (1 - beta2**state.t)
        t -= lr * mhat / (np.sqrt(vhat) + eps)


def _tensor_to_json(t: np.ndarray) -> dict:
    return {"shape": list(t.shape), "data": [repr(x) for x in t.ravel().tolist()]}


def _tensor_from_json(obj: dict) -> np.ndarray:
    arr = np.array([float(x) for x in obj["data"]], dtype=float)
    return arr.reshape(obj["shape"])


def save_checkpoint(
    path: str | Path,
    encoder: EncoderParams,
    classifier: ClassifierParams | None,
    meta: dict,
) -> None:
    """JSON checkpoint with full-precision floats; round-trips bit-exactly."""
    doc = {
        "meta": meta,
        "encoder": {k: _tensor_to_json(v) for k, v in encoder.tensors().items()},
        "classifier": (
            {k: _tensor_to_json(v) for k, v in classifier.tensors().items()}
            if classifier is not None
            else None
        ),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_checkpoint(path: str | Path) -> tuple[EncoderParams, ClassifierParams | None, dict]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    enc = EncoderParams(**{k: _tensor_from_json(v) for k, v in doc["encoder"].items()})
    clf = None
    if doc.get("classifier") is not None:
        clf = ClassifierParams(
            **{k: _tensor_from_json(v) for k, v in doc["classifier"].items()}
        )
    return enc, clf, doc.get("meta", {})
