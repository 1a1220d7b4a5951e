"""Seeded, reproducible command-line front end.

Subcommands: ``converge`` (sampling-grid refinement study), ``gen-dynsys``
(benchmark trajectory datasets), ``metric`` (lag-similarity continuity
over an interpolation grid), ``stagewise`` (staged subsampled training),
and ``bounds`` (closed-form error coefficients).  All randomized commands
require an explicit ``--seed``; repeated invocations with identical flags
produce byte-identical CSV files.  Exit codes: 0 success, 1 usage or
runtime error, 2 success with divergence warnings.

A ``--config`` file holds flat ``key = value`` lines (UTF-8, ``#``
comments); entries expand to the corresponding long-form flags and are
overridden by flags given explicitly on the command line.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from . import dynsys, refinement_harness, stagewise
from ._csv import format_cell, write_csv
from .continuity_metric import (
    DegenerateSimilarityError,
    MetricConfig,
    _mu_lag_given_beta,
    _tokens,
    embed_trajectory,
    estimate_background,
    make_embedding_spec,
    mu_aggregate,
)

__all__ = ["main", "build_parser"]

DYNSYS_CSV_HEADER = ["sample_id", "kind", "param_json", "t", "x"]


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that exits with status 1 on usage errors.

    (The default status 2 is reserved here for divergence warnings.)
    """

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _str_list(text: str) -> list[str]:
    return [tok.strip() for tok in text.split(",") if tok.strip()]


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}")
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _key_values(text: str) -> dict:
    """Parse ``a=1,b=2`` (used by ``--params``)."""
    out = {}
    for item in text.split(","):
        if not item.strip():
            continue
        if "=" not in item:
            raise argparse.ArgumentTypeError(f"expected key=value, got {item!r}")
        key, value = item.split("=", 1)
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a numeric value in {item!r}")
    return out


def _resolve_threads(args) -> int:
    if args.threads is not None:
        return args.threads
    raw = os.environ.get("SSMLAB_THREADS", "1")
    try:
        return int(raw)
    except ValueError:
        args._parser.error(f"SSMLAB_THREADS must be an integer, got {raw!r}")


def _expand_config(argv: list[str]) -> list[str]:
    """Insert config-file entries as flags just after the subcommand.

    Explicit command-line flags come later in argv, so they win.
    """
    path = None
    for i, token in enumerate(argv):
        if token == "--config":
            path = argv[i + 1] if i + 1 < len(argv) else None
            break
        if token.startswith("--config="):
            path = token.split("=", 1)[1]
            break
    if path is None or not argv or argv[0].startswith("-"):
        return argv
    try:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        print(f"error: cannot read config file: {exc}", file=sys.stderr)
        raise SystemExit(1)
    flags: list[str] = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            print(f"error: config line is not key = value: {raw!r}", file=sys.stderr)
            raise SystemExit(1)
        key, value = line.split("=", 1)
        flags += [f"--{key.strip().replace('_', '-')}", value.strip()]
    return argv[:1] + flags + argv[1:]


def _resolve_kind(args) -> str:
    kind = dynsys.KIND_ALIASES.get(args.kind, args.kind)
    if kind not in dynsys.KINDS:
        args._parser.error(f"unknown kind {args.kind!r}; expected one of {dynsys.KINDS} or aliases {tuple(dynsys.KIND_ALIASES)}")
    return kind


def cmd_converge(args) -> int:
    if args.pairs < 1:
        args._parser.error("--pairs must be >= 1")
    threads = _resolve_threads(args)
    try:
        result = refinement_harness.run_convergence_study(
            rng_seed=args.seed,
            n_pairs=args.pairs,
            taus=args.taus,
            scales=args.scales,
            methods=tuple(args.methods),
            threads=threads,
        )
    except ValueError as exc:
        args._parser.error(str(exc))
    refinement_harness.write_convergence_csv(result.records, args.out)
    _print_median_table(refinement_harness.median_table(result.records))
    print(f"wrote {len(result.records)} rows to {args.out}")
    if result.divergence_warnings:
        print(f"warning: {result.divergence_warnings} diverged run(s) excluded", file=sys.stderr)
        return 2
    return 0


def _print_median_table(table: dict) -> None:
    scales = sorted({scale for _, scale in table})
    flavors = sorted({flavor for flavor, _ in table})
    print("median rel_max_error by flavor x scale")
    header = ["flavor"] + [f"scale={s:g}" for s in scales]
    print("  ".join(f"{cell:>12}" for cell in header))
    for flavor in flavors:
        cells = [f"{table[(flavor, s)]:.6e}" if (flavor, s) in table else "-" for s in scales]
        print("  ".join(f"{cell:>12}" for cell in [flavor] + cells))


def _param_blob(params) -> str:
    return ";".join(f"{name}={format_cell(value)}" for name, value in dataclasses.asdict(params).items())


def cmd_gen_dynsys(args) -> int:
    if args.count < 1:
        args._parser.error("--count must be >= 1")
    kind = _resolve_kind(args)
    fixed = None
    if args.params is not None:
        try:
            fixed = dynsys.make_params(kind, **args.params)
        except ValueError as exc:
            args._parser.error(str(exc))
    try:
        dataset = dynsys.sample_dataset(kind, args.count, args.seed, horizon=args.horizon, tau0=args.tau0, params=fixed)
    except dynsys.DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        args._parser.error(str(exc))
    rows = []
    for sample_id, (traj, params) in enumerate(dataset):
        blob = _param_blob(params)
        for t, x in zip(traj.times, traj.values):
            rows.append((sample_id, kind, blob, float(t), float(x)))
    write_csv(args.out, DYNSYS_CSV_HEADER, rows)
    print(f"wrote {len(rows)} rows ({args.count} samples) to {args.out}")
    return 0


def cmd_metric(args) -> int:
    if args.count < 1:
        args._parser.error("--count must be >= 1")
    if args.lags < 1:
        args._parser.error("--lags must be >= 1")
    if not args.etas:
        args._parser.error("--etas must list at least one value")
    if any(not 0.0 <= eta <= 1.0 for eta in args.etas):
        args._parser.error("--etas values must lie in [0, 1]")
    kind = _resolve_kind(args)
    try:
        cfg = MetricConfig(max_lag=args.lags, gap=args.gap, far_pair_samples=args.far_pair_samples)
        dataset = dynsys.sample_dataset(kind, args.count, args.seed, horizon=args.horizon, tau0=args.tau0)
    except ValueError as exc:
        args._parser.error(str(exc))
    spec = make_embedding_spec(args.seed)
    lag_rows, agg_rows, mu1 = [], [], []
    try:
        for eta in args.etas:
            data = [embed_trajectory(traj.values, eta, spec) for traj, _ in dataset]
            mats = _tokens(data)
            beta = estimate_background(data, cfg, args.seed)
            for t in range(1, args.lags + 1):
                value = _mu_lag_given_beta(mats, t, beta)
                lag_rows.append((eta, t, value))
                if t == 1:
                    mu1.append(value)
            agg_rows.append((eta, mu_aggregate(data, cfg, args.seed)))
    except (DegenerateSimilarityError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _write_metric_csv(args.out, lag_rows, agg_rows)
    if len(args.etas) >= 2:
        from scipy.stats import spearmanr

        rho = float(spearmanr(args.etas, mu1)[0])
        print(f"spearman(eta, mu_lag1) = {rho:.6f}")
    print(f"wrote {len(lag_rows)} lag rows and {len(agg_rows)} aggregate rows to {args.out}")
    return 0


def _write_metric_csv(path, lag_rows, agg_rows) -> None:
    """Two sections: per-lag values, then one aggregate row per eta."""
    lines = ["eta,lag,mu"]
    lines += [",".join(format_cell(cell) for cell in row) for row in lag_rows]
    lines.append("eta,mu_total")
    lines += [",".join(format_cell(cell) for cell in row) for row in agg_rows]
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write("\n".join(lines) + "\n")


def cmd_stagewise(args) -> int:
    epochs = args.epochs if args.epochs is not None else [1] * len(args.strides)
    try:
        sched = stagewise.StageSchedule(strides=tuple(args.strides), epochs=tuple(epochs), strategy=args.strategy)
    except ValueError as exc:
        args._parser.error(str(exc))
    if args.samples < 2:
        args._parser.error("--samples must be >= 2")
    dataset = stagewise.omega_recovery_dataset(args.samples, args.seed)
    trainer = stagewise.RidgeTrainer(args.seed)
    try:
        reports = stagewise.run_stagewise(dataset, sched, trainer, args.seed, delta_init=args.delta)
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.timing == "none":
        reports = [dataclasses.replace(r, cum_wall_time_s=0.0) for r in reports]
    stagewise.write_stage_csv(reports, args.out)
    print(f"{'stage':>5} {'stride':>6} {'delta':>12} {'epochs':>6} {'train_mse':>12} {'val_mse':>12}")
    for r in reports:
        print(f"{r.stage:>5} {r.stride:>6} {r.delta:>12.6g} {r.epochs:>6} {r.train_mse:>12.6g} {r.val_mse:>12.6g}")
    return 0


_BOUND_FLAG_SETS = {
    "s4": ("bnorm", "cnorm", "delta", "anorm", "lu"),
    "s6": ("bnorm", "cnorm", "wdelta", "bdelta", "anorm", "lu", "mu"),
    "general": ("lu", "lb", "lc", "ldelta", "mu", "mb", "mc", "mdelta", "anorm"),
}


def cmd_bounds(args) -> int:
    mode = "s4" if args.s4 else "s6" if args.s6 else "general"
    missing = [f"--{name}" for name in _BOUND_FLAG_SETS[mode] if getattr(args, name) is None]
    if missing:
        args._parser.error(f"--{mode} needs {', '.join(missing)}")
    try:
        if mode == "s4":
            value = refinement_harness.bound_s4_from_norms(args.bnorm, args.cnorm, args.delta, args.anorm, args.lu)
        elif mode == "s6":
            value = refinement_harness.bound_s6_from_norms(
                args.bnorm, args.cnorm, args.wdelta, args.bdelta, args.anorm, args.lu, args.mu
            )
        else:
            inputs = refinement_harness.BoundInputs(
                l_u=args.lu,
                l_b=args.lb,
                l_c=args.lc,
                l_delta=args.ldelta,
                m_u=args.mu,
                m_b=args.mb,
                m_c=args.mc,
                m_delta=args.mdelta,
                a_norm=args.anorm,
            )
            value = refinement_harness.bound_general(inputs)
    except ValueError as exc:
        args._parser.error(str(exc))
    print(f"{mode} error coefficient: {value:.17g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ssmlab", description="State-space sampling-continuity laboratory.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value file expanded into flags (explicit flags win)")
        p.set_defaults(_parser=p)

    converge = sub.add_parser("converge", help="run a grid-refinement convergence study and write its CSV")
    converge.add_argument("--seed", type=_seed, required=True, help="PRNG seed (required; no wall-clock seeding)")
    converge.add_argument("--pairs", type=int, default=20, help="number of (signal, system) pairs")
    converge.add_argument("--out", required=True, help="output CSV path")
    converge.add_argument("--taus", type=_float_list, default=None, help="comma-separated step sizes (dyadic)")
    converge.add_argument("--scales", type=_float_list, default=None, help="comma-separated input amplitudes")
    converge.add_argument(
        "--methods", type=_str_list, default=list(refinement_harness.DEFAULT_METHODS), help="comma-separated: ZOH,Bilinear"
    )
    converge.add_argument("--threads", type=int, default=None, help="worker threads (default: SSMLAB_THREADS or 1)")
    common(converge)
    converge.set_defaults(func=cmd_converge)

    gen = sub.add_parser("gen-dynsys", help="sample benchmark-system trajectories into a CSV")
    gen.add_argument("--kind", required=True, help="VanDerPol|DampedHarmonic|OrnsteinUhlenbeck|ForcedDuffing (aliases: vdp,damped,ou,duffing)")
    gen.add_argument("--count", type=int, required=True, help="number of trajectories")
    gen.add_argument("--seed", type=_seed, required=True)
    gen.add_argument("--horizon", type=float, default=1.0)
    gen.add_argument("--tau0", type=float, default=0.01, help="emission interval")
    gen.add_argument("--params", type=_key_values, default=None, help="pin parameters, e.g. theta=1,sigma=0")
    gen.add_argument("--out", required=True)
    common(gen)
    gen.set_defaults(func=cmd_gen_dynsys)

    metric = sub.add_parser("metric", help="lag-similarity continuity over an embedding-interpolation grid")
    metric.add_argument("--kind", required=True)
    metric.add_argument("--count", type=int, required=True)
    metric.add_argument("--seed", type=_seed, required=True)
    metric.add_argument("--etas", type=_float_list, default=[0.0, 0.5, 1.0], help="comma-separated interpolation weights in [0,1]")
    metric.add_argument("--lags", type=int, default=16)
    metric.add_argument("--horizon", type=float, default=8.0)
    metric.add_argument("--tau0", type=float, default=0.01)
    metric.add_argument("--gap", type=int, default=None, help="background far-pair separation (default: auto)")
    metric.add_argument("--far-pair-samples", type=int, default=10_000)
    metric.add_argument("--out", required=True)
    common(metric)
    metric.set_defaults(func=cmd_metric)

    stage = sub.add_parser("stagewise", help="staged training on temporally subsampled sequences")
    stage.add_argument("--strides", type=_int_list, default=[4, 2, 1], help="strictly decreasing, ending at 1")
    stage.add_argument("--delta", type=float, default=0.01, help="coarse-stage feature step size")
    stage.add_argument("--epochs", type=_int_list, default=None, help="per-stage refit counts (default: 1 each)")
    stage.add_argument("--strategy", choices=["Indexing", "Pooling"], default="Indexing")
    stage.add_argument("--samples", type=int, default=1000, help="dataset size for the frequency-recovery task")
    stage.add_argument("--seed", type=_seed, required=True)
    stage.add_argument("--out", required=True)
    stage.add_argument(
        "--timing", choices=["wall", "none"], default="wall", help="'none' zeroes cum_wall_time_s for byte-reproducible CSVs"
    )
    common(stage)
    stage.set_defaults(func=cmd_stagewise)

    bounds = sub.add_parser("bounds", help="evaluate closed-form first-order error coefficients")
    mode = bounds.add_mutually_exclusive_group(required=True)
    mode.add_argument("--s4", action="store_true", help="constant-coefficient bound")
    mode.add_argument("--s6", action="store_true", help="input-dependent bound")
    mode.add_argument("--general", action="store_true", help="general bound from all nine constants")
    for name, help_text in [
        ("bnorm", "input-map norm"),
        ("cnorm", "readout-map norm"),
        ("delta", "constant step-size coefficient"),
        ("anorm", "state-matrix norm (positive)"),
        ("lu", "input Lipschitz constant"),
        ("wdelta", "step-size input weight"),
        ("bdelta", "step-size offset"),
        ("mu", "input sup-norm"),
        ("lb", "input-map Lipschitz constant"),
        ("lc", "readout-map Lipschitz constant"),
        ("ldelta", "step-size Lipschitz constant"),
        ("mb", "input-map sup-norm"),
        ("mc", "readout-map sup-norm"),
        ("mdelta", "step-size sup-norm (positive)"),
    ]:
        bounds.add_argument(f"--{name}", type=float, default=None, help=help_text)
    common(bounds)
    bounds.set_defaults(func=cmd_bounds)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    argv = _expand_config(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
