"""Command line entry point: ``dagsim run | sweep exp1|exp2|exp3 | plot``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from typing import Dict, List, Optional

from dagsim.committer import CommitStrategy
from dagsim.config import load_config
from dagsim.harness import SWEEPS, ConfigError, RunConfig, outcome_log, run, write_csv
from dagsim.plots import MalformedCsv, emit_plots
from dagsim.workload import WorkloadConfig, generate, read_replay, write_replay

DEFAULTS: Dict[str, str] = {
    "txs": "1000",
    "dep-ratio": "0.5",
    "strategy": "dag-dynamic",
    "contract": "voting",
    "seed": "42",
    "block-size": "5000",
    "ttl-ms": "60000",
    "tx-cost-ms": "1.0",
    "no-prioritize": "false",
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value file; CLI flags win over it")
    p.add_argument("--txs", help="number of proposals")
    p.add_argument("--dep-ratio", help="fraction of dependent proposals, 0..1")
    p.add_argument("--strategy", help="original | dag-dynamic | dag-fixed:K")
    p.add_argument("--contract", help="voting | asset | wallet")
    p.add_argument("--seed")
    p.add_argument("--block-size")
    p.add_argument("--ttl-ms", help="endorsement TTL in ms ('inf' allowed)")
    p.add_argument("--tx-cost-ms", help="modeled per-transaction commit latency")
    p.add_argument("--cores", help="cap for the dynamic degree (default: DAGSIM_CORES or physical cores)")
    p.add_argument("--no-prioritize", action="store_const", const="true", help="keep endorsement order in blocks")
    p.add_argument("--out", help="output path (CSV for run/sweep)")


def merged_options(args: argparse.Namespace) -> Dict[str, str]:
    """Defaults, then the config file, then explicit CLI flags."""
    options = dict(DEFAULTS)
    if getattr(args, "config", None):
        options.update(load_config(args.config))
    for key in list(DEFAULTS) + ["cores", "out"]:
        value = getattr(args, key.replace("-", "_"), None)
        if value is not None:
            options[key] = value
    return options


def build_run_config(options: Dict[str, str]) -> RunConfig:
    try:
        flag = options["no-prioritize"].strip().lower()
        if flag not in _TRUE | _FALSE:
            raise ValueError(f"no-prioritize must be a boolean, got {flag!r}")
        workload = WorkloadConfig(
            tx_count=int(options["txs"]),
            dependency_ratio=float(options["dep-ratio"]),
            contract=options["contract"],
            seed=int(options["seed"]),
        )
        cfg = RunConfig(
            workload=workload,
            strategy=CommitStrategy.parse(options["strategy"]),
            block_size=int(options["block-size"]),
            endorsement_ttl_ms=float(options["ttl-ms"]),
            prioritize_independent=flag in _FALSE,
            tx_cost_ms=float(options["tx-cost-ms"]),
            cores=int(options["cores"]) if options.get("cores") else None,
            output=options.get("out"),
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    cfg.validate()
    return cfg


def _summary(report) -> Dict[str, object]:
    row = report.row("run")
    row.update(
        reasons=report.reasons,
        blocks=report.blocks,
        level_count=report.level_count,
        max_level_width=report.max_level_width,
        realized_flag_ratio=round(report.realized_flag_ratio, 4),
        wall_s=round(report.wall_s, 4),
    )
    return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in row.items()}


def cmd_run(args: argparse.Namespace) -> int:
    options = merged_options(args)
    cfg = build_run_config(options)
    workload = read_replay(args.workload) if args.workload else None
    if args.save_workload:
        write_replay(workload or generate(cfg.workload), args.save_workload)
    report = run(cfg, workload=workload)
    print(json.dumps(_summary(report), indent=2))
    if cfg.output:
        write_csv([report.row("run")], cfg.output)
    if args.outcome_log:
        with open(args.outcome_log, "w", encoding="utf-8") as fh:
            fh.write(outcome_log(report.outcomes))
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    options = merged_options(args)
    cfg = build_run_config(options)
    out = cfg.output or f"{args.experiment}.csv"
    rows = SWEEPS[args.experiment](cfg, out=out)
    print(f"wrote {len(rows)} rows to {out}")
    return 0


def cmd_plot(args: argparse.Namespace) -> int:
    figures = emit_plots(args.csv, args.out)
    for fig in figures:
        print(fig.path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dagsim", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one configuration")
    _add_run_flags(p_run)
    p_run.add_argument("--workload", help="replay file to run instead of generating")
    p_run.add_argument("--save-workload", help="write the workload replay file here")
    p_run.add_argument("--outcome-log", help="write the timing-free outcome log here")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run an experiment grid over all strategies")
    p_sweep.add_argument("experiment", choices=sorted(SWEEPS))
    _add_run_flags(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_plot = sub.add_parser("plot", help="render SVG figures from a sweep CSV")
    p_plot.add_argument("csv")
    p_plot.add_argument("--out", help="output directory (default: next to the CSV)")
    p_plot.set_defaults(func=cmd_plot)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, MalformedCsv, FileNotFoundError) as exc:
        print(f"dagsim: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
