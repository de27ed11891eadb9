#!/usr/bin/env python3
"""How the pair-loss effect depends on temperature and batch size.

For each (temperature, batch) cell, trains the benchmark setup at pair-loss
weight 0 and 5 over several seeds and reports the change in the mean
equalized-odds gap.  Negative change means the weighted runs are fairer in
that cell; the benchmark temperature of 2.0 is where the improvement is
reliable, and sharper temperatures show the effect washing out or reversing.

    python3 scripts/run_sensitivity_experiment.py --out results/sensitivity
    python3 scripts/run_sensitivity_experiment.py --quick

Writes rows.csv and aggregate.csv to --out.
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
    p.add_argument("--out", default="results/sensitivity", help="output directory")
    p.add_argument("--taus", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    p.add_argument("--batches", type=int, nargs="+", default=[16, 32, 64])
    p.add_argument("--seeds", type=int, default=3, help="seeds per cell (0..n-1)")
    p.add_argument("--mode", choices=("two_stage", "one_stage"), default="two_stage")
    p.add_argument("--workers", type=int, default=1, help="parallel sweep workers")
    p.add_argument("--quick", action="store_true",
                   help="single tau/batch pair, 2 seeds, small corpus")
    return p.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    args = parse_args(argv)
    synth = standard_biased_config(seed=0)
    taus, batches, n_seeds = args.taus, args.batches, args.seeds
    if args.quick:
        synth = dataclasses.replace(synth, n_train=1200, n_val=400, n_test=600)
        taus, batches, n_seeds = taus[-1:], batches[:1], min(n_seeds, 2)

    corpus = generate_synthetic(synth)
    lexicon = group_masking_lexicon(synth)
    base = dataclasses.replace(benchmark_train_config(lam=0.0, seed=0), mode=args.mode)

    t0 = time.perf_counter()
    rows, aggs = sweep(
        corpus,
        base,
        lexicon,
        seeds=list(range(n_seeds)),
        lambdas=[0.0, 5.0],
        taus=taus,
        batch_sizes=batches,
        workers=args.workers,
    )
    elapsed = time.perf_counter() - t0

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_rows_csv(rows, out / "rows.csv")
    write_aggregate_csv(aggs, out / "aggregate.csv")

    # one line per (tau, batch): EO gap at weight 0 vs 5 and the change
    by_cell: dict[tuple[float, int], dict[float, dict]] = {}
    for agg in aggs:
        by_cell.setdefault((agg["tau"], agg["batch"]), {})[agg["lambda"]] = agg

    print(f"\n{len(rows)} runs in {elapsed:.0f}s -> {out}/rows.csv, aggregate.csv\n")
    print(f"{'tau':>6} {'batch':>6} {'EO @0':>8} {'EO @5':>8} {'change':>8} {'F1 @5':>8}")
    for (tau, batch), arms in sorted(by_cell.items()):
        lo, hi = arms.get(0.0), arms.get(5.0)
        if not lo or not hi or lo["delta_eo_mean"] is None or hi["delta_eo_mean"] is None:
            print(f"{tau:>6g} {batch:>6d} {'failed runs; see rows.csv':>35}")
            continue
        change = hi["delta_eo_mean"] - lo["delta_eo_mean"]
        print(
            f"{tau:>6g} {batch:>6d} {lo['delta_eo_mean']:>8.3f} "
            f"{hi['delta_eo_mean']:>8.3f} {change:>+8.3f} {hi['f1_mean']:>8.3f}"
        )
    failed = sum(1 for r in rows if r["status"] != "ok")
    if failed:
        print(f"\nwarning: {failed} run(s) failed; see rows.csv")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
