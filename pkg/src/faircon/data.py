"""Synthetic biased corpora, JSONL round-trip, and group-stratified batching.

Documents are integer token sequences drawn from a vocabulary partitioned into
group-specific, class-specific, and neutral blocks.  The generative order is
group, then label given group, then tokens given both, so group membership
leaks into the text through the group-specific token positions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, CorpusFormatError

SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class Example:
    """One document: token ids, class label, group attribute."""

    tokens: tuple[int, ...]
    label: int
    attr: int


@dataclass
class Dataset:
    examples: list[Example]
    vocab_size: int
    num_classes: int
    num_groups: int
    split: str = "train"

    def __len__(self) -> int:
        return len(self.examples)

    def validate(self) -> None:
        if self.vocab_size < 1 or self.num_classes < 2 or self.num_groups < 1:
            raise ConfigError(
                "need vocab_size >= 1, num_classes >= 2, num_groups >= 1"
            )
        for i, ex in enumerate(self.examples):
            if not ex.tokens:
                raise CorpusFormatError(f"example {i}: empty token sequence")
            if not all(0 <= t < self.vocab_size for t in ex.tokens):
                raise CorpusFormatError(
                    f"example {i}: token id outside [0, {self.vocab_size})"
                )
            if not 0 <= ex.label < self.num_classes:
                raise CorpusFormatError(f"example {i}: label {ex.label} out of range")
            if not 0 <= ex.attr < self.num_groups:
                raise CorpusFormatError(f"example {i}: attr {ex.attr} out of range")

    def cell_counts(self) -> np.ndarray:
        """(num_groups, num_classes) matrix of examples per (attr, label) cell."""
        counts = np.zeros((self.num_groups, self.num_classes), dtype=int)
        for ex in self.examples:
            counts[ex.attr, ex.label] += 1
        return counts

    def labels(self) -> np.ndarray:
        return np.array([ex.label for ex in self.examples], dtype=int)

    def attrs(self) -> np.ndarray:
        return np.array([ex.attr for ex in self.examples], dtype=int)


@dataclass
class Corpus:
    """Train/val/test trio over one shared vocabulary."""

    train: Dataset
    val: Dataset
    test: Dataset

    def splits(self) -> dict[str, Dataset]:
        return {"train": self.train, "val": self.val, "test": self.test}


@dataclass
class SynthConfig:
    """Knobs for the biased-corpus generator.

    ``leakage`` is the expected fraction of group-specific tokens per document
    and ``class_signal`` the expected fraction of class-specific tokens; the
    remainder is neutral.  ``base_rates[a][y]`` is p(label = y | group = a).
    """

    vocab_size: int = 120
    num_classes: int = 2
    num_groups: int = 2
    doc_len: int = 16
    n_train: int = 5000
    n_val: int = 1000
    n_test: int = 2000
    leakage: float = 0.5
    class_signal: float = 0.1
    group_priors: tuple[float, ...] = (0.5, 0.5)
    base_rates: tuple[tuple[float, ...], ...] = ((0.8, 0.2), (0.3, 0.7))
    seed: int = 0

    def validate(self) -> None:
        if self.num_groups < 1 or self.num_classes < 2:
            raise ConfigError("need num_groups >= 1 and num_classes >= 2")
        n_blocks = self.num_groups + self.num_classes + 1
        if self.vocab_size < n_blocks:
            raise ConfigError(
                f"vocab_size {self.vocab_size} too small for {n_blocks} sub-vocabularies"
            )
        if self.doc_len < 1:
            raise ConfigError("doc_len must be >= 1")
        if min(self.n_train, self.n_val, self.n_test) < 1:
            raise ConfigError("all split sizes must be >= 1")
        if not (0.0 <= self.leakage <= 1.0 and 0.0 <= self.class_signal <= 1.0):
            raise ConfigError("leakage and class_signal must lie in [0, 1]")
        if self.leakage + self.class_signal > 1.0 + 1e-12:
            raise ConfigError("leakage + class_signal must not exceed 1")
        if len(self.group_priors) != self.num_groups:
            raise ConfigError("group_priors length must equal num_groups")
        if any(p < 0 for p in self.group_priors) or not math.isclose(
            sum(self.group_priors), 1.0, abs_tol=1e-9
        ):
            raise ConfigError("group_priors must be a probability vector")
        if len(self.base_rates) != self.num_groups:
            raise ConfigError("base_rates needs one row per group")
        for a, row in enumerate(self.base_rates):
            if len(row) != self.num_classes:
                raise ConfigError(f"base_rates[{a}] needs one entry per class")
            if any(p < 0 for p in row) or not math.isclose(sum(row), 1.0, abs_tol=1e-9):
                raise ConfigError(f"base_rates[{a}] must be a probability vector")


def vocab_blocks(cfg: SynthConfig) -> tuple[list[np.ndarray], list[np.ndarray], np.ndarray]:
    """Partition [0, vocab_size) into per-group, per-class, and neutral blocks.

    Blocks are contiguous, ordered groups then classes then neutral, with sizes
    as equal as integer division allows (earlier blocks take the remainder).
    """
    n_blocks = cfg.num_groups + cfg.num_classes + 1
    base, rem = divmod(cfg.vocab_size, n_blocks)
    sizes = [base + (1 if i < rem else 0) for i in range(n_blocks)]
    bounds = np.cumsum([0] + sizes)
    blocks = [np.arange(bounds[i], bounds[i + 1]) for i in range(n_blocks)]
    group_vocabs = blocks[: cfg.num_groups]
    class_vocabs = blocks[cfg.num_groups : cfg.num_groups + cfg.num_classes]
    return group_vocabs, class_vocabs, blocks[-1]


def _sample_split(cfg: SynthConfig, n: int, split: str, rng: np.random.Generator) -> Dataset:
    group_vocabs, class_vocabs, neutral = vocab_blocks(cfg)
    priors = np.asarray(cfg.group_priors, dtype=float)
    rates = np.asarray(cfg.base_rates, dtype=float)
    attrs = rng.choice(cfg.num_groups, size=n, p=priors / priors.sum())
    examples = []
    for a in attrs:
        row = rates[a]
        y = int(rng.choice(cfg.num_classes, p=row / row.sum()))
        source = rng.random(cfg.doc_len)
        toks = rng.choice(neutral, size=cfg.doc_len)
        group_mask = source < cfg.leakage
        class_mask = (~group_mask) & (source < cfg.leakage + cfg.class_signal)
        toks[group_mask] = rng.choice(group_vocabs[a], size=int(group_mask.sum()))
        toks[class_mask] = rng.choice(class_vocabs[y], size=int(class_mask.sum()))
        examples.append(Example(tuple(int(t) for t in toks), y, int(a)))
    return Dataset(examples, cfg.vocab_size, cfg.num_classes, cfg.num_groups, split)


def generate_synthetic(cfg: SynthConfig) -> Corpus:
    """Draw a deterministic train/val/test corpus from ``cfg``.

    Every (group, label) cell with positive configured probability must be
    populated in every split; generation retries a bounded number of times
    with fresh derived seeds before giving up.
    """
    cfg.validate()
    priors = np.asarray(cfg.group_priors, dtype=float)
    rates = np.asarray(cfg.base_rates, dtype=float)
    cell_prob = priors[:, None] * rates
    sizes = {"train": cfg.n_train, "val": cfg.n_val, "test": cfg.n_test}
    out: dict[str, Dataset] = {}
    for k, split in enumerate(SPLITS):
        for attempt in range(5):
            rng = np.random.default_rng([cfg.seed, k, attempt])
            ds = _sample_split(cfg, sizes[split], split, rng)
            counts = ds.cell_counts()
            missing = [
                (a, y)
                for a in range(cfg.num_groups)
                for y in range(cfg.num_classes)
                if cell_prob[a, y] > 0 and counts[a, y] == 0
            ]
            if not missing:
                out[split] = ds
                break
        else:
            a, y = missing[0]
            raise ConfigError(
                f"split {split!r}: cell (attr={a}, label={y}) has positive "
                f"probability {cell_prob[a, y]:.4g} but drew no examples in 5 attempts; "
                "enlarge the split or adjust priors"
            )
    return Corpus(out["train"], out["val"], out["test"])


def standard_biased_config(seed: int = 0) -> SynthConfig:
    """The default benchmark corpus: strong group leakage, weak class signal."""
    return SynthConfig(seed=seed)


def _header_path(path: Path) -> Path:
    if path.suffix == ".jsonl":
        return path.with_suffix(".header.json")
    return path.with_name(path.name + ".header.json")


def save_jsonl(dataset: Dataset, path: str | Path) -> None:
    """Write one record per line plus a sidecar header next to ``path``."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for ex in dataset.examples:
            fh.write(
                json.dumps(
                    {"tokens": list(ex.tokens), "y": ex.label, "a": ex.attr},
                    separators=(",", ":"),
                )
                + "\n"
            )
    header = {
        "vocab_size": dataset.vocab_size,
        "num_classes": dataset.num_classes,
        "num_groups": dataset.num_groups,
        "split": dataset.split,
    }
    with open(_header_path(path), "w", encoding="utf-8") as fh:
        json.dump(header, fh, separators=(",", ":"))
        fh.write("\n")


def load_jsonl(path: str | Path) -> Dataset:
    """Read a corpus written by :func:`save_jsonl`; errors name the bad line."""
    path = Path(path)
    header_path = _header_path(path)
    if not header_path.exists():
        raise CorpusFormatError(f"{path}: missing sidecar header {header_path.name}")
    with open(header_path, encoding="utf-8") as fh:
        try:
            header = json.load(fh)
        except json.JSONDecodeError as err:
            raise CorpusFormatError(f"{header_path}: invalid JSON ({err})") from err
    for key in ("vocab_size", "num_classes", "num_groups"):
        if not isinstance(header.get(key), int):
            raise CorpusFormatError(f"{header_path}: missing or non-integer {key!r}")
    examples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as err:
                raise CorpusFormatError(f"{path}:{lineno}: invalid JSON ({err})") from err
            try:
                tokens = tuple(int(t) for t in rec["tokens"])
                label = int(rec["y"])
                attr = int(rec["a"])
            except (KeyError, TypeError, ValueError) as err:
                raise CorpusFormatError(
                    f"{path}:{lineno}: expected keys tokens/y/a ({err})"
                ) from err
            examples.append(Example(tokens, label, attr))
    ds = Dataset(
        examples,
        header["vocab_size"],
        header["num_classes"],
        header["num_groups"],
        header.get("split", "train"),
    )
    try:
        ds.validate()
    except CorpusFormatError as err:
        raise CorpusFormatError(f"{path}: {err}") from err
    return ds


def save_corpus(corpus: Corpus, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for split, ds in corpus.splits().items():
        save_jsonl(ds, out / f"{split}.jsonl")


def load_corpus(in_dir: str | Path) -> Corpus:
    d = Path(in_dir)
    return Corpus(*(load_jsonl(d / f"{split}.jsonl") for split in SPLITS))


def stratified_batches(
    dataset: Dataset, n_anchors: int, seed
) -> list[list[int]]:
    """Partition one epoch into batches of ``n_anchors`` example indices.

    Each batch is seeded with at least one same-(attr, label) pair whenever
    some cell still holds two unplaced examples, so the pair-conditional
    contrastive term almost always has an in-cell companion beyond the
    augmented view.  Remaining slots fill from a global shuffle; a short
    final remainder is dropped.
    """
    if n_anchors < 2:
        raise ConfigError("n_anchors must be >= 2")
    if n_anchors > len(dataset):
        raise ConfigError(
            f"n_anchors {n_anchors} exceeds dataset size {len(dataset)}"
        )
    rng = np.random.default_rng(seed)
    cell_of = {}
    pools: dict[tuple[int, int], list[int]] = {}
    for i, ex in enumerate(dataset.examples):
        key = (ex.attr, ex.label)
        cell_of[i] = key
        pools.setdefault(key, []).append(i)
    remaining = {key: len(v) for key, v in pools.items()}
    for v in pools.values():
        rng.shuffle(v)
    fill_order = rng.permutation(len(dataset))
    placed = np.zeros(len(dataset), dtype=bool)

    def pop_from(key):
        while True:
            i = pools[key].pop()
            if not placed[i]:
                return i

    batches = []
    cursor = 0
    for _ in range(len(dataset) // n_anchors):
        batch = []
        key = max(remaining, key=lambda k: (remaining[k], k))
        if remaining[key] >= 2:
            for _ in range(2):
                i = pop_from(key)
                placed[i] = True
                remaining[key] -= 1
                batch.append(i)
        while len(batch) < n_anchors:
            i = int(fill_order[cursor])
            cursor += 1
            if placed[i]:
                continue
            placed[i] = True
            remaining[cell_of[i]] -= 1
            batch.append(i)
        perm = rng.permutation(n_anchors)
        batches.append([batch[j] for j in perm])
    return batches
