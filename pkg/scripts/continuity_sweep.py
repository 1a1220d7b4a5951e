"""Sweep the embedding-interpolation weight eta and report the continuity score.

Example:
    python scripts/continuity_sweep.py --seed 21 --kind vdp --count 12
"""

import argparse

from scipy.stats import spearmanr

from ssmlab.continuity_metric import MetricConfig, embed_trajectory, make_embedding_spec, mu_lag
from ssmlab.dynsys import sample_dataset

DEFAULT_ETAS = [0.0, 0.1, 0.25, 0.4, 0.5, 0.6, 0.75, 0.9, 1.0]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, required=True)
    ap.add_argument("--kind", default="VanDerPol")
    ap.add_argument("--count", type=int, default=12)
    ap.add_argument("--horizon", type=float, default=8.0)
    ap.add_argument("--etas", type=lambda s: [float(v) for v in s.split(",")], default=DEFAULT_ETAS)
    args = ap.parse_args()

    dataset = sample_dataset(args.kind, args.count, args.seed, horizon=args.horizon)
    spec = make_embedding_spec(args.seed)
    cfg = MetricConfig(max_lag=1, gap=64, far_pair_samples=10_000)

    print("  eta    mu_lag1")
    scores = []
    for eta in args.etas:
        tokens = [embed_trajectory(traj, eta, spec) for traj, _ in dataset]
        score = mu_lag(tokens, 1, cfg, args.seed)
        scores.append(score)
        print(f"  {eta:4.2f}  {score:9.6f}")

    if len(args.etas) >= 2:
        print(f"\nspearman(eta, mu_lag1) = {float(spearmanr(args.etas, scores)[0]):.4f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
