#!/usr/bin/env python3
"""Fairness/accuracy trade-off: sweep the pair-loss weight on the biased corpus.

Trains the frozen two-stage benchmark setup (group-masking lexicon, full-rate
synonym replacement, flat temperature) across a grid of pair-loss weights and
seeds, then reports how the equalized-odds gap and F1 move as the weight grows.

    python3 scripts/run_tradeoff_experiment.py --out results/tradeoff
    python3 scripts/run_tradeoff_experiment.py --quick   # 2 seeds, small corpus

Writes rows.csv (per run) and aggregate.csv (per weight) to --out.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
import time
from pathlib import Path

from faircon.augment import group_masking_lexicon
from faircon.data import generate_synthetic, standard_biased_config
from faircon.train import (
    benchmark_train_config,
    sweep,
    write_aggregate_csv,
    write_rows_csv,
)


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="results/tradeoff", help="output directory")
    p.add_argument("--lambdas", type=float, nargs="+", default=[0.0, 1.0, 2.0, 5.0, 10.0])
    p.add_argument("--seeds", type=int, default=5, help="seeds per weight (0..n-1)")
    p.add_argument("--corpus-seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1, help="parallel sweep workers")
    p.add_argument("--quick", action="store_true",
                   help="2 seeds, 1200 training docs; a smoke run, not the result")
    return p.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    args = parse_args(argv)
    synth = standard_biased_config(seed=args.corpus_seed)
    n_seeds = args.seeds
    if args.quick:
        synth = dataclasses.replace(synth, n_train=1200, n_val=400, n_test=600)
        n_seeds = min(n_seeds, 2)

    corpus = generate_synthetic(synth)
    lexicon = group_masking_lexicon(synth)
    base = benchmark_train_config(lam=0.0, seed=0)

    t0 = time.perf_counter()
    rows, aggs = sweep(
        corpus,
        base,
        lexicon,
        seeds=list(range(n_seeds)),
        lambdas=args.lambdas,
        workers=args.workers,
    )
    elapsed = time.perf_counter() - t0

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_rows_csv(rows, out / "rows.csv")
    write_aggregate_csv(aggs, out / "aggregate.csv")

    print(f"\n{len(rows)} runs in {elapsed:.0f}s -> {out}/rows.csv, aggregate.csv\n")
    print(f"{'weight':>8} {'F1':>8} {'+/-':>7} {'EO gap':>8} {'+/-':>7}")
    for agg in aggs:
        if agg["f1_mean"] is None:
            print(f"{agg['lambda']:>8} {'all ' + str(agg['n_ok']) + ' runs failed':>32}")
            continue
        print(
            f"{agg['lambda']:>8g} {agg['f1_mean']:>8.3f} {agg['f1_std']:>7.3f} "
            f"{agg['delta_eo_mean']:>8.3f} {agg['delta_eo_std']:>7.3f}"
        )
    failed = sum(1 for r in rows if r["status"] != "ok")
    if failed:
        print(f"\nwarning: {failed} run(s) failed; see rows.csv")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
