"""Command-line entry point: ``lrcd <subcommand>``.

Exit codes: 0 success, 1 verification failure, 2 usage or config error.
"""

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys

from . import __version__
from .config import ConfigError, load, model_from_dict
from .cumulant_lab import admissible_partitions, enumerate_trees, tree_sum
from .duration_models import read_durations_csv, simulate, write_durations_csv
from .estimators import EstimationError, aggregated_acf_estimate, log_periodogram_d
from .gaussian_lm import LongMemoryGaussianSpec, ParameterError
from .harness import IngestError, ingest_timestamps, run_experiment
from .point_process import CountSeries, SamplingRegime, bin_counts, events_from_durations

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _model_from_args(args):
    if args.config:
        return load(args.config).model
    raw = {"kind": args.model}
    if args.model == "lmsd":
        raw.update(d=args.d, var_h=args.var_h)
    elif args.model == "acd":
        raw.update(omega=args.omega, alpha=args.alpha, beta=args.beta)
    raw["innovation"] = args.innovation
    return model_from_dict(raw)


def cmd_simulate(args):
    model = _model_from_args(args)
    series = simulate(model, args.n, args.seed)
    path = os.path.join(args.out, "durations.csv")
    os.makedirs(args.out, exist_ok=True)
    write_durations_csv(series, path)
    print(path)
    return EXIT_OK


def cmd_counts(args):
    if bool(args.durations) == bool(args.ticks):
        raise UsageError("give exactly one of --durations or --ticks")
    if args.durations:
        series = read_durations_csv(args.durations)
    else:
        _, series, _ = ingest_timestamps(args.ticks, args.dedupe)
    regime = SamplingRegime.parse(args.regime)
    events = events_from_durations(series, regime, args.seed)
    num_bins = args.num_bins or int(events.span // args.delta_t)
    counts = bin_counts(events, args.delta_t, num_bins)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "counts.csv")
    counts.to_csv(path)
    print(path)
    return EXIT_OK


def cmd_estimate(args):
    counts = CountSeries.from_csv(args.counts, args.delta_t)
    records = [log_periodogram_d(counts, args.bandwidth)]
    if args.levels:
        records.append(aggregated_acf_estimate(counts, args.levels))
    text = "\n".join(r.to_json() for r in records) + "\n"
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "estimates.jsonl"), "w") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_cumulants(args):
    os.makedirs(args.out, exist_ok=True)
    part_path = os.path.join(args.out, "partitions.csv")
    with open(part_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["m", "group", "count"])
        for m in range(2, args.max_m + 1):
            for group, parts in admissible_partitions(m).items():
                w.writerow([m, group, len(parts)])
    spec = LongMemoryGaussianSpec.with_variance(args.d, args.var_h)
    tree_path = os.path.join(args.out, "tree_sums.csv")
    with open(tree_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tree_id", "n", "S_n"])
        for M in range(2, args.max_tree + 1):
            for tree in enumerate_trees(M):
                tree_id = f"M{M}-" + "-".join(f"{u}{v}" for u, v in tree.edges)
                for k in range(6, args.max_log2_n + 1):
                    w.writerow([tree_id, 2 ** k, repr(tree_sum(spec, tree, 2 ** k))])
    print(part_path)
    print(tree_path)
    return EXIT_OK


def cmd_verify(args):
    from . import acceptance

    if args.selector not in acceptance.SELECTORS:
        raise UsageError(f"unknown selector {args.selector!r}; choose from "
                         + ", ".join(sorted(acceptance.SELECTORS)))
    results = acceptance.run(args.selector, emit=lambda s: print(s, flush=True))
    failed = [r.cid for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed"
          + (f"; failed: {', '.join(failed)}" if failed else ""))
    return EXIT_FAIL if failed else EXIT_OK


def cmd_run(args):
    if not args.config:
        raise UsageError("run needs --config")
    cfg = load(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed).validate()
    report = run_experiment(cfg, workers=args.workers, out_dir=args.out)
    print(json.dumps(report, sort_keys=True, indent=2))
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config (TOML)")
    common.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--out", default=None, help="output directory")

    p = argparse.ArgumentParser(prog="lrcd", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"lrcd {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="simulate durations to CSV")
    s.add_argument("--model", choices=["lmsd", "acd", "iid"], default="lmsd")
    s.add_argument("--n", type=int, default=10000)
    s.add_argument("--d", type=float, default=0.3)
    s.add_argument("--var-h", type=float, default=0.5)
    s.add_argument("--omega", type=float, default=0.1)
    s.add_argument("--alpha", type=float, default=0.1)
    s.add_argument("--beta", type=float, default=0.8)
    s.add_argument("--innovation", choices=["exponential", "gamma", "degenerate"],
                   default="exponential")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("counts", parents=[common], help="durations or ticks to a count series")
    c.add_argument("--durations")
    c.add_argument("--ticks")
    c.add_argument("--dedupe", choices=["drop", "jitter", "error"], default="drop")
    c.add_argument("--delta-t", type=float, required=True)
    c.add_argument("--num-bins", type=int, default=0)
    c.add_argument("--regime", default="palm")
    c.set_defaults(func=cmd_counts)

    e = sub.add_parser("estimate", parents=[common], help="memory estimates from counts")
    e.add_argument("--counts", required=True)
    e.add_argument("--delta-t", type=float, default=1.0)
    e.add_argument("--bandwidth", type=int, default=None)
    e.add_argument("--levels", type=int, nargs="*", default=[])
    e.set_defaults(func=cmd_estimate)

    k = sub.add_parser("cumulants", parents=[common], help="partition tallies and tree sums")
    k.add_argument("--max-m", type=int, default=4)
    k.add_argument("--max-tree", type=int, default=4)
    k.add_argument("--max-log2-n", type=int, default=10)
    k.add_argument("--d", type=float, default=0.3)
    k.add_argument("--var-h", type=float, default=0.5)
    k.set_defaults(func=cmd_cumulants)

    v = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    v.add_argument("selector", nargs="?", default="all")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("run", parents=[common], help="run a full experiment from a config")
    r.set_defaults(func=cmd_run)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command in ("simulate", "counts", "cumulants") and args.out is None:
        args.out = "."
    if args.command == "simulate" and args.seed is None:
        args.seed = 0
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (ParameterError, IngestError, EstimationError, ValueError, OSError) as exc:
        print(f"lrcd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
