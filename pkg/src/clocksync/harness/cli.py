"""Command-line entry points.

Exit codes: 0 success, 1 bound-check failure, 2 configuration error.
All emitted CSVs use '.' decimals, LF line endings, UTF-8.
"""

from __future__ import annotations

import argparse
import sys

from .. import topo as topo_mod
from ..ftsync import ConfigurationError
from . import bounds as bounds_mod
from . import metrics as metrics_mod
from . import runner
from .config import load_config


def _parse_overrides(pairs: list[str]) -> dict[str, str]:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigurationError(f"--set expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _parse_counts(spec: str) -> list[int]:
    """Count sweep syntax: 'a..b' or 'a..b:step' or a comma list."""
    if ".." in spec:
        head, _, tail = spec.partition("..")
        step = 1
        if ":" in tail:
            tail, _, step_s = tail.partition(":")
            step = int(step_s)
        return list(range(int(head), int(tail) + 1, step))
    return [int(tok) for tok in spec.split(",") if tok.strip()]


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="clocksync",
        description="Byzantine fault-tolerant clock synchronization simulator",
    )
    parser.add_argument("--version", action="version", version=runner.VERSION)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario and write trace + metrics")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--check", action="store_true", help="verify formal bounds")

    p_an = sub.add_parser("analyze", help="compute metrics from an existing trace")
    p_an.add_argument("trace")
    p_an.add_argument("--out", default=None, help="directory for metrics files")
    p_an.add_argument("--threshold-ns", type=int, default=metrics_mod.DEFAULT_SYNC_THRESHOLD_NS)

    p_chk = sub.add_parser("check", help="verify formal bounds on a trace")
    p_chk.add_argument("trace")
    p_chk.add_argument("--config", required=True)
    p_chk.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")

    p_scan = sub.add_parser("scan", help="transitive-corruption scan")
    p_scan.add_argument("--config", required=True)
    p_scan.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p_scan.add_argument("--counts", required=True, help="e.g. 0..66 or 0..66:2")
    p_scan.add_argument("--reps", type=int, default=20)
    p_scan.add_argument("--out", required=True)
    p_scan.add_argument("--over-third", action="store_true",
                        help="allow counts beyond floor(n/3)")

    p_gen = sub.add_parser("gen-topo", help="generate a synthetic topology file")
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--seed", type=int, required=True)
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--attach-m", type=int, default=3)

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except (ConfigurationError, topo_mod.TopologyError, metrics_mod.TraceFormatError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    if args.command == "run":
        config = load_config(args.config, _parse_overrides(args.set))
        result = runner.run(config, outdir=args.out, check=args.check)
        for line in metrics_mod.summary_lines(result.metrics, runner.SCALE_NOTE):
            print(line)
        if args.check:
            for line in bounds_mod.report_lines(result.checks):
                print(line)
            if bounds_mod.any_failure(result.checks):
                return 1
        return 0

    if args.command == "analyze":
        rows = metrics_mod.parse_trace_csv(args.trace)
        metrics = metrics_mod.compute_metrics(rows, args.threshold_ns)
        for line in metrics_mod.summary_lines(metrics, runner.SCALE_NOTE):
            print(line)
        if args.out:
            from pathlib import Path

            outdir = Path(args.out)
            outdir.mkdir(parents=True, exist_ok=True)
            metrics_mod.write_metrics_csv(metrics, str(outdir / "metrics.csv"))
            metrics_mod.write_cdf_csv(metrics, str(outdir / "cdf.csv"))
            metrics_mod.write_summary(metrics, str(outdir / "summary.txt"), runner.SCALE_NOTE)
        return 0

    if args.command == "check":
        config = load_config(args.config, _parse_overrides(args.set))
        config.validate()
        rows = metrics_mod.parse_trace_csv(args.trace)
        checks = bounds_mod.check_bounds(rows, config)
        for line in bounds_mod.report_lines(checks):
            print(line)
        return 1 if bounds_mod.any_failure(checks) else 0

    if args.command == "scan":
        config = load_config(args.config, _parse_overrides(args.set))
        config.validate()
        counts = _parse_counts(args.counts)
        rows = runner.corruption_scan(
            config, counts, reps=args.reps, allow_over_third=args.over_third
        )
        runner.write_scan_csv(rows, args.out)
        print(f"wrote {len(rows)} scan rows to {args.out}")
        return 0

    if args.command == "gen-topo":
        topology = topo_mod.generate_topology(args.n, args.seed, attach_m=args.attach_m)
        topo_mod.save_topology(topology, args.out)
        print(f"wrote {topology.n} nodes / {len(topology.links)} links to {args.out}")
        return 0

    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
