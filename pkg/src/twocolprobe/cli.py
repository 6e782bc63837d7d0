"""Command-line driver: read MPS, probe, write the reduced model and metrics."""

from __future__ import annotations

import argparse
import logging
import shutil
import sys
import time

from .config import PENALTY_MODES, Config
from .errors import MpsParseError, ProvenInfeasible
from .mps import MetricsReport, read_mps, write_infeasibility_report, write_metrics, write_mps
from .parallel import run_parallel
from .prepresolve import run_simple_presolve
from .probing import ProbingContext, run_serial

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_NO_PAIRS = 3

log = logging.getLogger("twocolprobe")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser():
    d = Config()
    p = _Parser(prog="twocolprobe", description="Two-column probing presolve for MIP models.")
    p.add_argument("--input", required=True, help="free-format MPS file")
    p.add_argument("--output", required=True, help="reduced model (MPS) path")
    p.add_argument("--metrics", required=True, help="key=value metrics path")
    p.add_argument("--threads", type=int, default=d.threads)
    p.add_argument("--size-limit", type=int, default=d.size_limit)
    p.add_argument("--work-limit", type=int, default=d.work_limit)
    p.add_argument("--cand-number", type=int, default=d.cand_number)
    p.add_argument("--max-probe-number", type=int, default=d.max_probe_number)
    p.add_argument("--eff-threshold", type=float, default=d.eff_threshold)
    p.add_argument("--time-limit", type=float, default=d.time_limit_seconds)
    p.add_argument("--max-rounds", type=int, default=d.max_propagation_rounds)
    p.add_argument("--tol", type=float, default=d.tol)
    p.add_argument("--conflict-penalty", choices=PENALTY_MODES, default=d.conflict_penalty_mode)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args):
    return Config(
        threads=args.threads,
        size_limit=args.size_limit,
        work_limit=args.work_limit,
        cand_number=args.cand_number,
        max_probe_number=args.max_probe_number,
        eff_threshold=args.eff_threshold,
        time_limit_seconds=args.time_limit,
        max_propagation_rounds=args.max_rounds,
        tol=args.tol,
        conflict_penalty_mode=args.conflict_penalty,
    )


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = config_from_args(args)
    except ValueError as exc:
        print(f"twocolprobe: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        instance = read_mps(args.input)
    except MpsParseError as exc:
        print(f"twocolprobe: parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"twocolprobe: cannot read {args.input}: {exc}", file=sys.stderr)
        return EXIT_USAGE

    start = time.monotonic()
    try:
        presolved = run_simple_presolve(instance, config.tol, config.complemented_cliques)
        start = time.monotonic()
        ctx = ProbingContext(presolved, config)
        if not len(ctx.cm):
            shutil.copyfile(args.input, args.output)
            write_metrics(
                MetricsReport(status="no_pairs", threads=config.threads,
                              pre_time_seconds=time.monotonic() - start,
                              cm_truncated=ctx.cm.truncated, note="no pairs"),
                args.metrics,
            )
            print(f"twocolprobe: {args.input}: no pairs of binaries share a row; "
                  "model copied unchanged", file=sys.stderr)
            return EXIT_NO_PAIRS
        if config.threads == 1:
            result = run_serial(instance, config, ctx=ctx)
        else:
            result = run_parallel(instance, config.threads, config, ctx=ctx)
    except ProvenInfeasible as exc:
        write_infeasibility_report(args.output, exc.reason)
        write_metrics(
            MetricsReport(status="infeasible", threads=config.threads,
                          pre_time_seconds=time.monotonic() - start, note=exc.reason),
            args.metrics,
        )
        print(f"twocolprobe: {args.input}: proven infeasible: {exc.reason}", file=sys.stderr)
        return EXIT_INFEASIBLE

    write_mps(result.instance, result.reductions, args.output)
    write_metrics(result.metrics, args.metrics)
    m = result.metrics
    log.info("pairs=%d fixings=%d aggregations=%d conflicts=%d bounds=%d stop=%s",
             m.pairs_probed, m.fixings, m.aggregations, m.new_conflicts, m.bound_changes,
             m.terminated_by)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
