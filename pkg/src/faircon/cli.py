"""Command-line front end: gen, train, eval, sweep, verify-bounds.

Configuration comes from a TOML file with optional sections [synth],
[encoder], [loss], [augment], [train], and [sweep]; every key has a default,
and a handful of flags (--seed, --lambda, --mode) override the file.  Exit
codes: 0 success, 1 runtime failure or failed verification, 2 bad
configuration or malformed input.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

try:
    import tomllib
except ImportError:  # Python 3.10
    import tomli as tomllib

from . import infobounds
from .augment import (
    AUGMENT_KINDS,
    AugmentStrategy,
    SynonymLexicon,
    block_lexicon,
    group_masking_lexicon,
)
from .data import (
    SynthConfig,
    generate_synthetic,
    load_corpus,
    load_jsonl,
    save_corpus,
)
from .encoder import EncoderConfig, load_checkpoint, save_checkpoint
from .errors import ConfigError, TrainingDivergedError
from .losses import LossConfig
from .train import (
    MODES,
    TrainConfig,
    evaluate_model,
    metrics_payload,
    sweep,
    train,
    write_aggregate_csv,
    write_metrics_csv,
    write_rows_csv,
    write_timing_csv,
    TrainedModel,
)


def _env_workers() -> int:
    raw = os.environ.get("FAIRCON_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as err:
        raise ConfigError(f"FAIRCON_THREADS must be an integer, got {raw!r}") from err
    if n < 1:
        raise ConfigError("FAIRCON_THREADS must be >= 1")
    return n


def _load_toml(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as err:
        raise ConfigError(f"config file not found: {path}") from err
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"{path}: invalid TOML ({err})") from err


def _build(section: dict, cls, rename: dict | None = None, context: str = ""):
    rename = rename or {}
    fields = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in section.items():
        name = rename.get(key, key)
        if name not in fields:
            raise ConfigError(f"unknown key {key!r} in [{context}]")
        if isinstance(value, list):
            value = tuple(tuple(v) if isinstance(v, list) else v for v in value)
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except TypeError as err:
        raise ConfigError(f"[{context}]: {err}") from err


def parse_config(doc: dict) -> dict:
    """Materialize dataclass configs from a parsed TOML document."""
    known = {"synth", "encoder", "loss", "augment", "train", "sweep", "data"}
    for key in doc:
        if key not in known:
            raise ConfigError(f"unknown config section [{key}]")
    synth = _build(doc.get("synth", {}), SynthConfig, context="synth")
    encoder = _build(doc.get("encoder", {}), EncoderConfig, context="encoder")
    loss = _build(doc.get("loss", {}), LossConfig, {"lambda": "lam"}, context="loss")
    augment = _build(doc.get("augment", {}), AugmentStrategy, context="augment")
    train_sec = dict(doc.get("train", {}))
    for key in ("encoder", "loss", "augment"):
        if key in train_sec:
            raise ConfigError(f"[train] must not nest {key}; use its own section")
    train_cfg = _build(train_sec, TrainConfig, context="train")
    train_cfg.encoder = encoder
    train_cfg.loss = loss
    train_cfg.augment = augment
    return {
        "synth": synth,
        "train": train_cfg,
        "sweep": dict(doc.get("sweep", {})),
        "data": dict(doc.get("data", {})),
    }


def _resolve_lexicon(data_dir: str | None, lexicon_path: str | None, synth: SynthConfig):
    if lexicon_path:
        return SynonymLexicon.from_json(lexicon_path)
    if data_dir:
        candidate = Path(data_dir) / "lexicon.json"
        if candidate.exists():
            return SynonymLexicon.from_json(candidate)
        return None
    return block_lexicon(synth)


def _load_data(args, cfg) -> tuple:
    if getattr(args, "data", None):
        corpus = load_corpus(args.data)
    else:
        corpus = generate_synthetic(cfg["synth"])
    lexicon = _resolve_lexicon(getattr(args, "data", None), getattr(args, "lexicon", None), cfg["synth"])
    return corpus, lexicon


def _single_lambda(values: list[float] | None) -> float | None:
    if not values:
        return None
    if len(values) > 1:
        raise ConfigError("this command accepts at most one --lambda")
    return values[0]


def cmd_gen(args) -> int:
    cfg = parse_config(_load_toml(args.config))
    synth = cfg["synth"]
    if args.seed is not None:
        synth = dataclasses.replace(synth, seed=args.seed)
    corpus = generate_synthetic(synth)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_corpus(corpus, out)
    build = group_masking_lexicon if args.lexicon_kind == "group-mask" else block_lexicon
    build(synth).to_json(out / "lexicon.json")
    with open(out / "synth.json", "w", encoding="utf-8") as fh:
        json.dump(dataclasses.asdict(synth), fh, indent=1, sort_keys=True)
        fh.write("\n")
    counts = corpus.train.cell_counts()
    print(f"wrote {out}/train,val,test.jsonl  sizes "
          f"{len(corpus.train)}/{len(corpus.val)}/{len(corpus.test)}")
    print(f"train cell counts (attr x label):\n{counts}")
    return 0


def _apply_train_overrides(args, train_cfg: TrainConfig) -> TrainConfig:
    if args.seed is not None:
        train_cfg = dataclasses.replace(train_cfg, seed=args.seed)
    lam = _single_lambda(getattr(args, "lam", None))
    if lam is not None:
        train_cfg = dataclasses.replace(
            train_cfg, loss=dataclasses.replace(train_cfg.loss, lam=lam)
        )
    if getattr(args, "mode", None):
        train_cfg = dataclasses.replace(train_cfg, mode=args.mode)
    return train_cfg


def cmd_train(args) -> int:
    cfg = parse_config(_load_toml(args.config))
    train_cfg = _apply_train_overrides(args, cfg["train"])
    train_cfg.validate()
    corpus, lexicon = _load_data(args, cfg)
    model = train(corpus, train_cfg, lexicon)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"config": dataclasses.asdict(train_cfg), "num_classes": model.num_classes}
    save_checkpoint(out / "checkpoint.json", model.encoder, model.classifier, meta)
    with open(out / "history.json", "w", encoding="utf-8") as fh:
        json.dump(model.history, fh, indent=1)
        fh.write("\n")
    val = evaluate_model(model, corpus.val)
    print(
        f"trained mode={train_cfg.mode} seed={train_cfg.seed} "
        f"lambda={train_cfg.loss.lam} epochs={model.epochs_ran}"
    )
    print(f"val f1={val.f1:.4f} delta_eo={val.delta_eo:.4f}")
    return 0


def _model_from_checkpoint(path: str) -> tuple[TrainedModel, TrainConfig]:
    encoder, classifier, meta = load_checkpoint(path)
    if classifier is None:
        raise ConfigError(f"{path}: checkpoint has no classifier head")
    raw = meta.get("config", {})
    loss = LossConfig(**{k: raw.get("loss", {}).get(k, getattr(LossConfig(), k)) for k in ("tau", "lam", "gamma")})
    enc_cfg = EncoderConfig(**raw.get("encoder", {}))
    aug = raw.get("augment", {"kind": "synonym_replace", "rate": 0.1})
    base = TrainConfig(
        mode=raw.get("mode", "two_stage"),
        encoder=enc_cfg,
        loss=loss,
        augment=AugmentStrategy(aug.get("kind", "synonym_replace"), aug.get("rate", 0.1)),
        seed=raw.get("seed", 0),
    )
    model = TrainedModel(encoder, classifier, int(meta.get("num_classes", 2)), base, [])
    return model, base


def cmd_eval(args) -> int:
    model, train_cfg = _model_from_checkpoint(args.checkpoint)
    dataset = load_jsonl(Path(args.data) / f"{args.split}.jsonl")
    metrics = evaluate_model(model, dataset)
    payload = metrics_payload(metrics, train_cfg, args.split)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "metrics.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")
    write_metrics_csv(payload, out / "metrics.csv")
    print(
        f"split={args.split} f1={metrics.f1:.4f} delta_tpr={metrics.delta_tpr:.4f} "
        f"delta_fpr={metrics.delta_fpr:.4f} delta_eo={metrics.delta_eo:.4f}"
    )
    return 0


def cmd_sweep(args) -> int:
    cfg = parse_config(_load_toml(args.config))
    train_cfg = cfg["train"]
    if args.seed is not None:
        train_cfg = dataclasses.replace(train_cfg, seed=args.seed)
    sweep_sec = cfg["sweep"]
    known = {"lambdas", "taus", "batches", "augments", "seeds", "modes"}
    for key in sweep_sec:
        if key not in known:
            raise ConfigError(f"unknown key {key!r} in [sweep]")
    lambdas = [float(v) for v in args.lam] if args.lam else sweep_sec.get("lambdas")
    modes = [args.mode] if args.mode else sweep_sec.get("modes")
    seeds = [int(s) for s in sweep_sec.get("seeds", [train_cfg.seed])]
    corpus, lexicon = _load_data(args, cfg)
    rows, aggs = sweep(
        corpus,
        train_cfg,
        lexicon,
        seeds=seeds,
        lambdas=[float(v) for v in lambdas] if lambdas else None,
        taus=[float(v) for v in sweep_sec["taus"]] if "taus" in sweep_sec else None,
        batch_sizes=[int(v) for v in sweep_sec["batches"]] if "batches" in sweep_sec else None,
        augment_kinds=list(sweep_sec["augments"]) if "augments" in sweep_sec else None,
        modes=modes,
        workers=_env_workers(),
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_rows_csv(rows, out / "rows.csv")
    write_aggregate_csv(aggs, out / "aggregate.csv")
    if args.timing:
        write_timing_csv(rows, out / "timing.csv")
    n_fail = sum(1 for r in rows if r["status"] != "ok")
    print(f"swept {len(rows)} cells ({n_fail} failed); wrote rows.csv and aggregate.csv")
    for agg in aggs:
        if agg["f1_mean"] is None:
            continue
        print(
            f"  mode={agg['mode']} lambda={agg['lambda']} tau={agg['tau']} "
            f"batch={agg['batch']} augment={agg['augment']}: "
            f"f1={agg['f1_mean']:.4f}+/-{agg['f1_std']:.4f} "
            f"delta_eo={agg['delta_eo_mean']:.4f}+/-{agg['delta_eo_std']:.4f}"
        )
    return 1 if n_fail else 0


SUITE_SIZES = {
    # name -> (scale numerator, minimum)
    "sandwich": (1, 10),
    "equality": (10, 20),
    "upper_bound": (2, 10),
    "infonce": (50, 5),
    "monotone": (50, 5),
    "kl": (20, 10),
    "mixture": (2, 10),
}


def cmd_verify_bounds(args) -> int:
    trials = args.trials
    if trials < 1:
        raise ConfigError("--trials must be >= 1")
    workers = _env_workers()
    seed = args.seed if args.seed is not None else 0
    sizes = {
        name: max(trials // num if num > 1 else trials, floor)
        for name, (num, floor) in SUITE_SIZES.items()
    }
    runners = {
        "sandwich": lambda: infobounds.run_sandwich_suite(sizes["sandwich"], seed, workers),
        "equality": lambda: infobounds.run_equality_suite(sizes["equality"], seed, workers),
        "upper_bound": lambda: infobounds.run_upper_bound_suite(sizes["upper_bound"], seed, workers),
        "infonce": lambda: infobounds.run_infonce_suite(sizes["infonce"], seed, workers=workers),
        "monotone": lambda: infobounds.run_monotone_suite(sizes["monotone"], seed, workers),
        "kl": lambda: infobounds.run_kl_suite(sizes["kl"], seed, workers=workers),
        "mixture": lambda: infobounds.run_mixture_suite(sizes["mixture"], seed, workers),
    }
    report = {}
    all_passed = True
    for name, runner in runners.items():
        rows = runner()
        summary = infobounds.summarize_suite(rows)
        report[name] = summary
        ok = summary["failures"] == 0
        all_passed &= ok
        extra = f" infinite={summary['infinite']}" if "infinite" in summary else ""
        print(f"{name}: {summary['trials']} trials, {summary['failures']} failures{extra} "
              f"[{'ok' if ok else 'FAIL'}]")
    report["all_passed"] = all_passed
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "bounds_report.json", "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=1, sort_keys=True)
            fh.write("\n")
    return 0 if all_passed else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="faircon",
        description="Group-fair contrastive text classification on synthetic corpora, "
        "plus exact verification of its information-theoretic bounds.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, data=False):
        sp.add_argument("--config", help="TOML configuration file")
        sp.add_argument("--seed", type=int, help="override the configured seed")
        if data:
            sp.add_argument("--data", help="corpus directory (default: generate from [synth])")
            sp.add_argument("--lexicon", help="synonym lexicon JSON (default: <data>/lexicon.json)")

    sp = sub.add_parser("gen", help="generate a synthetic biased corpus")
    common(sp)
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument(
        "--lexicon-kind",
        choices=("block", "group-mask"),
        default="block",
        help="lexicon.json flavor: within-block synonyms, or group-token "
        "masking (substitutes only group tokens, toward neutral ones)",
    )
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("train", help="train one model")
    common(sp, data=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--lambda", dest="lam", type=float, action="append",
                    help="override the pair-conditional loss weight")
    sp.add_argument("--mode", choices=MODES)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="evaluate a checkpoint on a corpus split")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--data", required=True)
    sp.add_argument("--split", default="test", choices=("train", "val", "test"))
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("sweep", help="run a hyperparameter sweep")
    common(sp, data=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--lambda", dest="lam", type=float, action="append",
                    help="sweep value; repeatable")
    sp.add_argument("--mode", choices=MODES)
    sp.add_argument("--timing", action="store_true",
                    help="also write wall-clock timing.csv (non-deterministic)")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("verify-bounds", help="run the exact bound-check suites")
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", help="directory for bounds_report.json")
    sp.set_defaults(func=cmd_verify_bounds)

    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (TrainingDivergedError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
