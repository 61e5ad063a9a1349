"""``tkgrb`` command line: dataset statistics, tuning, evaluation and sweeps.

Exit status is 0 on success, 1 for usage or configuration errors and 2 for
data errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from collections import Counter
from pathlib import Path

from .datasets import DataError, compute_stats, load_dataset
from .evaluation import MULTI, SINGLE, TieProtocol, evaluate
from .scoring import ConfigError, RelationParams
from .tuning import ALPHA_GRID, LAMBDA_GRID, TuningError, load_params, sweep_csv, sweep_fixed, tune

log = logging.getLogger("tkgrb")

EXIT_USAGE = 1
EXIT_DATA = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tkgrb", description="Recurrency baselines for temporal KG forecasting.")
    parser.add_argument("command", choices=["stats", "tune", "eval", "sweep"])
    parser.add_argument("--dataset", required=True, type=Path, help="directory with train/valid/test.txt")
    parser.add_argument("--mode", default="single", choices=["single", "multi", "both"])
    parser.add_argument("--seed", type=int, default=0, help="master seed of the random tie protocol")
    parser.add_argument("--params", type=Path, help="params JSON (written by tune, read by eval)")
    parser.add_argument("--lambda-grid", type=_floats, help="comma separated decay values")
    parser.add_argument("--alpha-grid", type=_floats, help="comma separated mixing values")
    parser.add_argument("--tie", choices=["random", "expected"], help="tie protocol (eval/sweep default random, tune default expected)")
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--pool-directions", action="store_true", help="tune head and tail of a relation jointly")
    parser.add_argument("--lambda", dest="lmbda", type=float, help="eval: default decay when no params file")
    parser.add_argument("--alpha", type=float, help="eval: default mixing weight when no params file")
    parser.add_argument("--force-alpha", type=float, help="eval: override every alpha (1 = strict, 0 = relaxed)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _modes(mode: str) -> list[str]:
    return [SINGLE, MULTI] if mode == "both" else [mode]


def cmd_stats(args) -> int:
    ds = load_dataset(args.dataset)
    t0 = time.perf_counter()
    stats = compute_stats(ds)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "stats.json").write_text(stats.to_json())
    (args.out / "stats.csv").write_text(stats.to_csv())
    print(f"{'dataset':<10} {'nodes':>7} {'rels':>5} {'train':>9} {'valid':>8} {'test':>8} {'Tr/Val/Te TS':>12} {'DRec':>6} {'Rec':>6}")
    print(stats.table_row())
    log.info("stats computed in %.1fs", time.perf_counter() - t0)
    return 0


def cmd_tune(args) -> int:
    t0 = time.perf_counter()
    ds = load_dataset(args.dataset)
    result = tune(
        ds,
        args.lambda_grid or LAMBDA_GRID,
        args.alpha_grid or ALPHA_GRID,
        TieProtocol(args.tie or "expected", args.seed),
        args.pool_directions,
        args.workers,
    )
    path = args.params or args.out / "params.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(result.to_json())
    tuned = sorted(result.counts)
    lam_hist = Counter(result.params[r][0] for r in tuned)
    print(
        f"tuned {len(tuned)} relation directions ({result.settings_evaluated} settings) "
        f"in {time.perf_counter() - t0:.1f}s -> {path}"
    )
    print("lambda choices: " + ", ".join(f"{k:g}:{v}" for k, v in sorted(lam_hist.items())))
    return 0


def _eval_params(args, ds) -> RelationParams:
    if args.params:
        params = load_params(args.params, ds.num_rels)
        if args.lmbda is not None or args.alpha is not None:
            params.default = (
                args.lmbda if args.lmbda is not None else 1.0001,
                args.alpha if args.alpha is not None else 1.0,
            )
    elif args.lmbda is not None and args.alpha is not None:
        params = RelationParams.constant(args.lmbda, args.alpha)
    else:
        raise ConfigError("eval needs --params FILE or both --lambda and --alpha")
    if args.force_alpha is not None:
        params = params.with_alpha(args.force_alpha)
    return params


def cmd_eval(args) -> int:
    ds = load_dataset(args.dataset)
    params = _eval_params(args, ds)
    tie = TieProtocol(args.tie or "random", args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    for mode in _modes(args.mode):
        t0 = time.perf_counter()
        report = evaluate(ds, "test", params, mode, tie, args.workers)
        (args.out / f"report_{mode}.json").write_text(report.to_json())
        (args.out / f"report_{mode}.csv").write_text(report.to_csv())
        print(
            f"{ds.name} {mode}-step: MRR {100 * report.mrr:.2f}  H@1 {100 * report.h1:.2f}  "
            f"H@3 {100 * report.h3:.2f}  H@10 {100 * report.h10:.2f}  "
            f"({report.count} queries, {time.perf_counter() - t0:.1f}s)"
        )
    return 0


def cmd_sweep(args) -> int:
    ds = load_dataset(args.dataset)
    rows = sweep_fixed(
        ds,
        args.lambda_grid or LAMBDA_GRID,
        args.alpha_grid or [1.0],
        TieProtocol(args.tie or "random", args.seed),
        _modes(args.mode),
        n_jobs=args.workers,
    )
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "sweep.csv").write_text(sweep_csv(rows))
    for row in rows:
        print(f"{row['mode']:<6} lambda={row['lambda']:<8g} alpha={row['alpha']:<8g} MRR {100 * row['mrr']:.2f}  H@10 {100 * row['h10']:.2f}")
    return 0


COMMANDS = {"stats": cmd_stats, "tune": cmd_tune, "eval": cmd_eval, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.workers < 1:
        print("tkgrb: error: --workers must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except DataError as exc:
        print(f"tkgrb: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConfigError, TuningError, ValueError) as exc:
        print(f"tkgrb: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
