"""Token-level augmentation for building paired two-view batches.

Four edit families over integer token sequences: synonym replacement,
random insertion (inserted ids drawn from the lexicon entry of an existing
token), random swap, and random deletion.  Edit count is ``ceil(rate * len)``
and deletion never empties a sequence.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Example, SynthConfig, vocab_blocks
from .errors import ConfigError

AUGMENT_KINDS = ("synonym_replace", "random_insert", "random_swap", "random_delete")


@dataclass
class AugmentStrategy:
    kind: str = "synonym_replace"
    rate: float = 0.1

    def __post_init__(self) -> None:
        if self.kind not in AUGMENT_KINDS:
            raise ConfigError(
                f"unknown augmentation {self.kind!r}; expected one of {AUGMENT_KINDS}"
            )
        if not 0.0 < self.rate <= 1.0:
            raise ConfigError("rate must lie in (0, 1]")


class SynonymLexicon:
    """Map token id -> candidate substitute ids.

    Entries must be non-empty and no token may map only to itself; tokens
    absent from the map simply have no substitutes.
    """

    def __init__(self, entries: dict[int, tuple[int, ...]]):
        self.entries = {int(k): tuple(int(t) for t in v) for k, v in entries.items()}
        for tok, subs in self.entries.items():
            if not subs:
                raise ConfigError(f"lexicon entry for token {tok} is empty")
            if all(s == tok for s in subs):
                raise ConfigError(f"lexicon entry for token {tok} maps only to itself")

    def substitutes(self, token: int) -> tuple[int, ...]:
        """Candidates for ``token`` excluding the token itself; may be empty."""
        return tuple(s for s in self.entries.get(token, ()) if s != token)

    @classmethod
    def from_json(cls, path: str | Path) -> "SynonymLexicon":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: lexicon must be a JSON object")
        return cls({int(k): tuple(v) for k, v in raw.items()})

    def to_json(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(
                {str(k): list(v) for k, v in sorted(self.entries.items())},
                fh,
                separators=(",", ":"),
            )
            fh.write("\n")


def block_lexicon(cfg: SynthConfig) -> SynonymLexicon:
    """Synonyms = other tokens in the same sub-vocabulary block.

    Keeps augmentation label- and group-preserving for synthetic corpora:
    replacing a token inside its own block never moves information across
    the group/class/neutral partition.
    """
    group_vocabs, class_vocabs, neutral = vocab_blocks(cfg)
    entries: dict[int, tuple[int, ...]] = {}
    for block in [*group_vocabs, *class_vocabs, neutral]:
        if len(block) < 2:
            continue
        toks = [int(t) for t in block]
        for t in toks:
            entries[t] = tuple(s for s in toks if s != t)
    return SynonymLexicon(entries)


def group_masking_lexicon(cfg: SynthConfig) -> SynonymLexicon:
    """Substitutes only for group-block tokens, drawn from the neutral block.

    Replacement edits then land exclusively on group-marked positions and
    views lose group evidence the anchors keep.  Aligning each anchor with a
    group-blind view of itself makes the pair-conditional loss penalize the
    group-identifying parts of the representation; a full-rate pass erases
    every group token from the view.
    """
    group_vocabs, _, neutral = vocab_blocks(cfg)
    targets = tuple(int(t) for t in neutral)
    if not targets:
        raise ConfigError("no neutral tokens to substitute toward")
    entries: dict[int, tuple[int, ...]] = {}
    for block in group_vocabs:
        for tok in block:
            entries[int(tok)] = targets
    return SynonymLexicon(entries)


def _n_edits(rate: float, length: int) -> int:
    return math.ceil(rate * length)


def _synonym_replace(tokens, n_edit, lexicon, rng):
    candidates = [i for i, t in enumerate(tokens) if lexicon.substitutes(t)]
    if not candidates:
        return list(tokens)
    k = min(n_edit, len(candidates))
    positions = rng.choice(len(candidates), size=k, replace=False)
    out = list(tokens)
    for p in positions:
        i = candidates[int(p)]
        subs = lexicon.substitutes(tokens[i])
        out[i] = subs[int(rng.integers(len(subs)))]
    return out


def _random_insert(tokens, n_edit, lexicon, rng):
    out = list(tokens)
    for _ in range(n_edit):
        subs = ()
        for _ in range(10):  # bounded retry for a token that has substitutes
            src = out[int(rng.integers(len(out)))]
            subs = lexicon.substitutes(src)
            if subs:
                break
        if not subs:
            continue
        tok = subs[int(rng.integers(len(subs)))]
        out.insert(int(rng.integers(len(out) + 1)), tok)
    return out


def _random_swap(tokens, n_edit, rng):
    out = list(tokens)
    if len(out) < 2:
        return out
    for _ in range(n_edit):
        i = int(rng.integers(len(out)))
        j = int(rng.integers(len(out)))
        for _ in range(3):  # bounded retry for a distinct partner
            if j != i:
                break
            j = int(rng.integers(len(out)))
        out[i], out[j] = out[j], out[i]
    return out


def _random_delete(tokens, n_edit, rng):
    if len(tokens) == 1:
        return list(tokens)
    k = min(n_edit, len(tokens) - 1)  # never delete the whole sequence
    drop = set(int(p) for p in rng.choice(len(tokens), size=k, replace=False))
    return [t for i, t in enumerate(tokens) if i not in drop]


def augment_tokens(
    tokens: tuple[int, ...] | list[int],
    strategy: AugmentStrategy,
    lexicon: SynonymLexicon | None,
    seed,
) -> tuple[int, ...]:
    """Apply one seeded edit pass; ``ceil(rate * len)`` positions are touched.

    The draw order is fixed and documented so runs replay exactly: replacement
    first draws the position set without replacement, then one substitute per
    position in position-draw order; insertion alternates source draw, value
    draw, slot draw; swap draws index pairs; deletion draws the drop set.
    Swap and delete never consult the lexicon; the other two require one.
    """
    if not tokens:
        raise ConfigError("cannot augment an empty token sequence")
    if lexicon is None and strategy.kind in ("synonym_replace", "random_insert"):
        raise ConfigError(f"{strategy.kind} requires a synonym lexicon")
    rng = np.random.default_rng(seed)
    n_edit = _n_edits(strategy.rate, len(tokens))
    if strategy.kind == "synonym_replace":
        out = _synonym_replace(tokens, n_edit, lexicon, rng)
    elif strategy.kind == "random_insert":
        out = _random_insert(tokens, n_edit, lexicon, rng)
    elif strategy.kind == "random_swap":
        out = _random_swap(tokens, n_edit, rng)
    else:
        out = _random_delete(tokens, n_edit, rng)
    return tuple(int(t) for t in out)


def make_pair_batch(
    anchors: list[Example],
    strategy: AugmentStrategy,
    lexicon: SynonymLexicon | None,
    seed,
) -> list[Example]:
    """Return 2N examples: the N anchors followed by their N augmented views.

    View i + N shares label and attr with anchor i.  Each view gets its own
    child seed so batches replay deterministically under a fixed ``seed``.
    """
    if not anchors:
        raise ConfigError("empty anchor list")
    root = np.random.SeedSequence(seed)
    children = root.spawn(len(anchors))
    views = [
        Example(augment_tokens(ex.tokens, strategy, lexicon, child), ex.label, ex.attr)
        for ex, child in zip(anchors, children)
    ]
    return list(anchors) + views
