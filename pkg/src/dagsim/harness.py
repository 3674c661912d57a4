"""Pipeline runner, metrics and the three experiment sweeps."""

from __future__ import annotations

import csv
import io
import logging
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

from dagsim.clock import Clock, WallClock
from dagsim.committer import BlockCommitReport, CommitStrategy, commit_block, detect_cores
from dagsim.contracts import ChaincodeError, simulate
from dagsim.endorser import EndorsementRejected, EndorserConfig, LeaderEndorser
from dagsim.model import CommitOutcome, Reason, WorldState, apply_writeset
from dagsim.orderer import EmptyBlock, Orderer, OrdererConfig
from dagsim.workload import Workload, WorkloadConfig, generate

logger = logging.getLogger(__name__)

CSV_HEADER = (
    "experiment,contract,strategy,tx_count,dep_ratio,block_size,seed,"
    "throughput_tps,committed_tps,art_all_ms,art_committed_ms,art_aborted_ms,committed,aborted"
)
CSV_FIELDS = tuple(CSV_HEADER.split(","))

STRATEGIES = (
    CommitStrategy.sequential(),
    CommitStrategy.dynamic(),
    CommitStrategy.fixed(2),
    CommitStrategy.fixed(4),
)
EXP1_TX_COUNTS = (1000, 2000, 3000, 4000, 5000)
EXP3_RATIOS = tuple(round(0.1 * i, 1) for i in range(10))


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    workload: WorkloadConfig = field(default_factory=WorkloadConfig)
    strategy: CommitStrategy = field(default_factory=CommitStrategy.dynamic)
    block_size: int = 5000
    endorsement_ttl_ms: float = 60_000.0
    prioritize_independent: bool = True
    # Modeled per-transaction commit latency; see committer.commit_block.
    tx_cost_ms: float = 1.0
    cores: Optional[int] = None
    output: Optional[str] = None

    def validate(self) -> None:
        if self.block_size < 1:
            raise ConfigError("block_size must be >= 1")
        if not self.endorsement_ttl_ms > 0:
            raise ConfigError("endorsement TTL must be positive")
        if self.tx_cost_ms < 0:
            raise ConfigError("tx_cost_ms must be >= 0")
        if self.cores is not None and self.cores < 1:
            raise ConfigError("cores must be >= 1")


@dataclass
class MetricsReport:
    strategy: str
    contract: str
    tx_count: int
    dep_ratio: float
    block_size: int
    seed: int
    wall_s: float
    throughput_tps: float
    committed_tps: float
    art_all_ms: float
    art_committed_ms: float
    art_aborted_ms: float
    committed: int
    aborted: int
    reasons: Dict[str, int]
    blocks: int
    level_count: int
    max_level_width: int
    realized_flag_ratio: float
    outcomes: List[CommitOutcome] = field(repr=False, default_factory=list)
    latencies_ms: Dict[int, float] = field(repr=False, default_factory=dict)
    block_reports: List[BlockCommitReport] = field(repr=False, default_factory=list)
    world: Optional[WorldState] = field(repr=False, default=None)

    @property
    def processed(self) -> int:
        return self.committed + self.aborted

    def row(self, experiment: str = "run") -> Dict[str, object]:
        return {
            "experiment": experiment,
            "contract": self.contract,
            "strategy": self.strategy,
            "tx_count": self.tx_count,
            "dep_ratio": self.dep_ratio,
            "block_size": self.block_size,
            "seed": self.seed,
            "throughput_tps": self.throughput_tps,
            "committed_tps": self.committed_tps,
            "art_all_ms": self.art_all_ms,
            "art_committed_ms": self.art_committed_ms,
            "art_aborted_ms": self.art_aborted_ms,
            "committed": self.committed,
            "aborted": self.aborted,
        }


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values) if values else math.nan


def summarize(
    outcomes: Iterable[CommitOutcome],
    submit_ms: Dict[int, float],
    wall_s: float,
) -> Dict[str, object]:
    """Throughput and class-wise mean response times from an outcome log."""
    outcomes = list(outcomes)
    latency = {o.tx_id: o.commit_time - submit_ms[o.tx_id] for o in outcomes}
    ok = [latency[o.tx_id] for o in outcomes if o.committed]
    bad = [latency[o.tx_id] for o in outcomes if not o.committed]
    return {
        "throughput_tps": len(outcomes) / wall_s if wall_s > 0 else math.nan,
        "committed_tps": len(ok) / wall_s if wall_s > 0 else math.nan,
        "art_all_ms": _mean(ok + bad),
        "art_committed_ms": _mean(ok),
        "art_aborted_ms": _mean(bad),
        "committed": len(ok),
        "aborted": len(bad),
        "latencies_ms": latency,
    }


def apply_setup(world: WorldState, workload: Workload) -> WorldState:
    for call in workload.setup:
        try:
            apply_writeset(world, simulate(call, world).writes)
        except ChaincodeError as exc:
            raise ConfigError(f"setup call {call} failed: {exc.reason}") from exc
    return world


def run(cfg: RunConfig, workload: Optional[Workload] = None, clock: Optional[Clock] = None) -> MetricsReport:
    """Endorse every proposal, cut blocks, commit them, and measure.

    Proposals are offered in bulk: all are endorsed against the post-setup
    state before the first block is cut. Outcomes are deterministic per
    config; timings are not.
    """
    cfg.validate()
    if workload is None:
        workload = generate(cfg.workload)
    clock = clock or WallClock()
    cores = cfg.cores if cfg.cores is not None else detect_cores()
    world = apply_setup(WorldState(), workload)

    endorser = LeaderEndorser(EndorserConfig(cfg.endorsement_ttl_ms, clock))
    # The baseline orderer does not reorder.
    prioritize = cfg.prioritize_independent and cfg.strategy.kind == "dag"
    orderer = Orderer(OrdererConfig(cfg.block_size, prioritize))

    outcomes: Dict[int, CommitOutcome] = {}
    reports: List[BlockCommitReport] = []
    started = clock()
    submit_ms = {p.tx_id: started + p.submit_time for p in workload.proposals}
    flagged = endorsed = 0
    for proposal in workload.proposals:
        try:
            tx = endorser.endorse(proposal, world)
        except EndorsementRejected as exc:
            outcomes[proposal.tx_id] = CommitOutcome.aborted(
                proposal.tx_id, Reason.SIMULATION_FAILED, clock(), exc.reason
            )
            continue
        endorsed += 1
        flagged += tx.flag
        orderer.submit(tx)

    while len(orderer):
        now = clock()
        endorser.purge_expired(now)
        try:
            block, dropped = orderer.cut_block(now)
        except EmptyBlock as exc:
            block, dropped = None, exc.dropped  # type: ignore[attr-defined]
        for tx_id in dropped:
            outcomes[tx_id] = CommitOutcome.aborted(tx_id, Reason.EXPIRED, now, "expired before ordering")
        if block is None:
            continue
        world, report = commit_block(block, world, cfg.strategy, clock=clock, tx_cost_ms=cfg.tx_cost_ms, cores=cores)
        reports.append(report)
        for outcome in report.outcomes:
            outcomes[outcome.tx_id] = outcome
        logger.debug("block %d: %d committed, %d levels", block.block_number, report.committed, report.level_count)
    wall_s = (clock() - started) / 1000.0

    ordered = [outcomes[p.tx_id] for p in workload.proposals]
    stats = summarize(ordered, submit_ms, wall_s)
    widths = [w for r in reports for w in r.level_widths] if cfg.strategy.kind == "dag" else []
    return MetricsReport(
        strategy=cfg.strategy.label,
        contract=cfg.workload.contract,
        tx_count=len(workload.proposals),
        dep_ratio=cfg.workload.dependency_ratio,
        block_size=cfg.block_size,
        seed=cfg.workload.seed,
        wall_s=wall_s,
        reasons=dict(sorted(Counter(o.reason.value for o in ordered if not o.committed).items())),
        blocks=len(reports),
        level_count=len(widths),
        max_level_width=max(widths, default=0),
        realized_flag_ratio=flagged / endorsed if endorsed else 0.0,
        outcomes=ordered,
        block_reports=reports,
        world=world,
        **stats,  # type: ignore[arg-type]
    )


def outcome_log(outcomes: Iterable[CommitOutcome]) -> str:
    """Timing-free TSV outcome log: ``tx_id, status, reason`` per line."""
    lines = ["tx_id\tstatus\treason"]
    lines += [f"{o.tx_id}\t{o.status.value}\t{o.reason.value}" for o in outcomes]
    return "\n".join(lines) + "\n"


def _fmt(value: object) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.4f}"
    return str(value)


def format_csv(rows: Iterable[Dict[str, object]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for row in rows:
        writer.writerow([_fmt(row[f]) for f in CSV_FIELDS])
    return buf.getvalue()


def write_csv(rows: Iterable[Dict[str, object]], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_csv(rows), encoding="utf-8")
    return path


def _sweep(
    experiment: str,
    configs: Iterable[RunConfig],
    out: Optional[Union[str, Path]],
) -> List[Dict[str, object]]:
    rows = []
    for cfg in configs:
        report = run(cfg)
        logger.info(
            "%s %s txs=%d ratio=%.1f: %.2f tps, art %.1f ms",
            experiment, report.strategy, report.tx_count, report.dep_ratio,
            report.throughput_tps, report.art_all_ms,
        )
        rows.append(report.row(experiment))
    if out is not None:
        write_csv(rows, out)
    return rows


def _grid_by_txs(base: RunConfig, tx_counts, strategies):
    for n in tx_counts:
        for strategy in strategies:
            yield replace(base, workload=replace(base.workload, tx_count=n), strategy=strategy)


def sweep_experiment1(
    base: RunConfig,
    tx_counts: Sequence[int] = EXP1_TX_COUNTS,
    strategies: Sequence[CommitStrategy] = STRATEGIES,
    out: Optional[Union[str, Path]] = None,
) -> List[Dict[str, object]]:
    """Throughput against transaction count, one row per (count, strategy)."""
    return _sweep("exp1", _grid_by_txs(base, tx_counts, strategies), out)


def sweep_experiment2(
    base: RunConfig,
    tx_counts: Sequence[int] = EXP1_TX_COUNTS,
    strategies: Sequence[CommitStrategy] = STRATEGIES,
    out: Optional[Union[str, Path]] = None,
) -> List[Dict[str, object]]:
    """Response times against transaction count; same grid as experiment 1."""
    return _sweep("exp2", _grid_by_txs(base, tx_counts, strategies), out)


def sweep_experiment3(
    base: RunConfig,
    ratios: Sequence[float] = EXP3_RATIOS,
    strategies: Sequence[CommitStrategy] = STRATEGIES,
    out: Optional[Union[str, Path]] = None,
) -> List[Dict[str, object]]:
    """Response times against dependency ratio at the base transaction count."""
    configs = (
        replace(base, workload=replace(base.workload, dependency_ratio=r), strategy=s)
        for r in ratios
        for s in strategies
    )
    return _sweep("exp3", configs, out)


SWEEPS = {
    "exp1": sweep_experiment1,
    "exp2": sweep_experiment2,
    "exp3": sweep_experiment3,
}
