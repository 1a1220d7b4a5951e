"""Run a grid-refinement convergence study and summarize fitted orders.

Example:
    python scripts/run_convergence.py --seed 21 --pairs 20 --out runs/convergence.csv
"""

import argparse
from collections import defaultdict

import numpy as np

from ssmlab.refinement_harness import fit_order, median_table, run_convergence_study, write_convergence_csv


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, required=True)
    ap.add_argument("--pairs", type=int, default=20)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", required=True, help="output CSV path")
    args = ap.parse_args()

    study = run_convergence_study(args.seed, n_pairs=args.pairs, threads=args.threads)
    print(f"{len(study.records)} records, {study.divergence_warnings} divergence warnings")

    slopes = defaultdict(list)
    groups = defaultdict(list)
    for record in study.records:
        groups[record.order_fit_group].append(record)
    for group in groups.values():
        slopes[(group[0].flavor, group[0].method)].append(fit_order(group))

    print("\nfitted log-log order (median over pairs and scales)")
    for (flavor, method), values in sorted(slopes.items()):
        arr = np.asarray(values)
        print(f"  {flavor:3s} {method:8s} median {np.median(arr):5.2f}  range [{arr.min():5.2f}, {arr.max():5.2f}]")

    print("\nmedian rel_max_error by (flavor, scale)")
    for (flavor, scale), value in median_table(study.records).items():
        print(f"  {flavor:3s} scale {scale:4g}  {value:.3e}")

    write_convergence_csv(study.records, args.out)
    print(f"\nwrote {len(study.records)} rows to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
