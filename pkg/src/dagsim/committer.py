"""Commit phase: per-block dependency DAG, levels, and the commit strategies.

Two families of strategy are implemented:

* ``original`` -- the baseline: transactions are validated one after another
  in block order by comparing endorsement-time read versions against the
  current world state. Contract code never runs here.
* ``dag-dynamic`` / ``dag-fixed:K`` -- the block's DAG is levelled; within a
  level, transactions that share no key run concurrently, and every
  transaction is re-simulated against the current state so that a stale
  endorsement is judged by business rules rather than by version numbers.
"""

from __future__ import annotations

import logging
import os
import threading
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from dagsim.contracts import ChaincodeError, simulate
from dagsim.model import (
    Block,
    CommitOutcome,
    EndorsedTransaction,
    Reason,
    WorldState,
    apply_writeset,
    mvcc_validate,
)
from dagsim.unionfind import UnionFind

logger = logging.getLogger(__name__)

CORES_ENV = "DAGSIM_CORES"


class MalformedMetadata(Exception):
    pass


class CycleDetected(Exception):
    pass


def detect_cores() -> int:
    """Physical core count, overridable through ``DAGSIM_CORES``."""
    override = os.environ.get(CORES_ENV)
    if override:
        cores = int(override)
        if cores < 1:
            raise ValueError(f"{CORES_ENV} must be >= 1, got {override!r}")
        return cores
    try:
        import psutil

        physical = psutil.cpu_count(logical=False)
    except ImportError:  # pragma: no cover
        physical = None
    return physical or os.cpu_count() or 1


@dataclass(frozen=True)
class CommitStrategy:
    kind: str = "dag"
    threads: Optional[int] = None  # None: dynamic degree

    def __post_init__(self) -> None:
        if self.kind not in ("sequential", "dag"):
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.threads is not None and self.threads < 1:
            raise ValueError("fixed thread count must be >= 1")
        if self.kind == "sequential" and self.threads is not None:
            raise ValueError("the sequential strategy takes no thread count")

    @classmethod
    def sequential(cls) -> "CommitStrategy":
        return cls("sequential")

    @classmethod
    def dynamic(cls) -> "CommitStrategy":
        return cls("dag")

    @classmethod
    def fixed(cls, threads: int) -> "CommitStrategy":
        return cls("dag", threads)

    @classmethod
    def parse(cls, text: str) -> "CommitStrategy":
        """Parse ``original``, ``dag-dynamic`` or ``dag-fixed:K``."""
        text = text.strip().lower()
        if text in ("original", "sequential"):
            return cls.sequential()
        if text in ("dag-dynamic", "dynamic"):
            return cls.dynamic()
        if text.startswith("dag-fixed:"):
            try:
                return cls.fixed(int(text.split(":", 1)[1]))
            except ValueError as exc:
                raise ValueError(f"bad strategy {text!r}: {exc}") from None
        raise ValueError(f"unknown strategy {text!r}")

    @property
    def label(self) -> str:
        if self.kind == "sequential":
            return "original"
        return "dag-dynamic" if self.threads is None else f"dag-fixed:{self.threads}"

    def degree(self, width: int, cores: int) -> int:
        if self.kind == "sequential":
            return 1
        if self.threads is None:
            return max(1, min(width, cores))
        return self.threads

    def __str__(self) -> str:
        return self.label


@dataclass
class DependencyDag:
    nodes: List[int]
    children: Dict[int, List[int]]
    parents: Dict[int, List[int]]

    @property
    def edges(self) -> List[Tuple[int, int]]:
        return [(p, c) for p in self.nodes for c in self.children[p]]


@dataclass
class DagSchedule:
    levels: List[List[int]]
    level_of: Dict[int, int]

    @property
    def widths(self) -> List[int]:
        return [len(level) for level in self.levels]


def build_dag(block: Block) -> DependencyDag:
    """DAG over the block's transactions from its embedded metadata only.

    Edges run parent -> child. Parents that are not in the block (already
    committed or dropped) impose nothing and are skipped.
    """
    order = {tx.tx_id: tx.seq for tx in block.txs}
    nodes = [tx.tx_id for tx in block.txs]
    children: Dict[int, List[int]] = {n: [] for n in nodes}
    parents: Dict[int, List[int]] = {n: [] for n in nodes}
    for tx_id in nodes:
        meta = block.metadata.get(tx_id)
        if meta is None:
            raise MalformedMetadata(f"no metadata for tx {tx_id}")
        if meta.flag == 0:
            continue
        for parent in dict.fromkeys(p for _, p in meta.parents):
            if parent not in order:
                continue
            if order[parent] >= order[tx_id]:
                raise MalformedMetadata(f"tx {tx_id} lists parent {parent} endorsed no earlier than itself")
            children[parent].append(tx_id)
            parents[tx_id].append(parent)
    return DependencyDag(nodes, children, parents)


def levelize(dag: DependencyDag) -> DagSchedule:
    """Longest-path levels: roots at 0, else one past the deepest parent."""
    position = {n: i for i, n in enumerate(dag.nodes)}
    indegree = {n: len(dag.parents[n]) for n in dag.nodes}
    level_of = {n: 0 for n in dag.nodes}
    ready = deque(n for n in dag.nodes if indegree[n] == 0)
    seen = 0
    while ready:
        node = ready.popleft()
        seen += 1
        for child in dag.children[node]:
            level_of[child] = max(level_of[child], level_of[node] + 1)
            indegree[child] -= 1
            if indegree[child] == 0:
                ready.append(child)
    if seen != len(dag.nodes):
        raise CycleDetected(f"{len(dag.nodes) - seen} transactions sit on a cycle")
    depth = max(level_of.values(), default=-1) + 1
    levels: List[List[int]] = [[] for _ in range(depth)]
    for node in sorted(dag.nodes, key=position.__getitem__):
        levels[level_of[node]].append(node)
    return DagSchedule(levels, level_of)


def conflict_groups(txs: Sequence[EndorsedTransaction]) -> List[List[EndorsedTransaction]]:
    """Connected components of the shares-a-key relation, in input order."""
    uf = UnionFind(range(len(txs)))
    owner: Dict[object, int] = {}
    for i, tx in enumerate(txs):
        for key in tx.footprint:
            j = owner.setdefault(key, i)
            if j != i:
                uf.union(i, j)
    return [[txs[i] for i in sorted(group)] for group in uf.groups()]


@dataclass
class TxSpan:
    level: int
    start: float
    end: float


@dataclass
class BlockCommitReport:
    block_number: int
    strategy: str
    outcomes: List[CommitOutcome] = field(default_factory=list)
    level_widths: List[int] = field(default_factory=list)
    # Per level, the conflict groups that were eligible to run concurrently.
    batches: List[List[List[int]]] = field(default_factory=list)
    spans: Dict[int, TxSpan] = field(default_factory=dict)
    wall_ms: float = 0.0
    notifications: int = 0

    @property
    def level_count(self) -> int:
        return len(self.level_widths)

    @property
    def committed(self) -> int:
        return sum(o.committed for o in self.outcomes)

    @property
    def aborted(self) -> int:
        return len(self.outcomes) - self.committed


def _ms() -> float:
    return time.perf_counter() * 1000.0


def commit_block(
    block: Block,
    world: WorldState,
    strategy: CommitStrategy,
    *,
    clock: Optional[Callable[[], float]] = None,
    tx_cost_ms: float = 0.0,
    cores: Optional[int] = None,
) -> Tuple[WorldState, BlockCommitReport]:
    """Validate and apply ``block`` to ``world`` in place.

    ``tx_cost_ms`` is a per-transaction commit overhead paid by every
    non-expired transaction under every strategy. It is spent sleeping, which
    stands in for state-database and signature-check latency and lets
    concurrent workers overlap it.

    Transactions whose endorsement deadline is before the commit start are
    aborted as ``Expired`` without running.
    """
    clock = clock or _ms
    cores = detect_cores() if cores is None else cores
    report = BlockCommitReport(block.block_number, strategy.label)
    began = clock()
    if not block.txs:
        return world, report

    cost_s = tx_cost_ms / 1000.0
    if strategy.kind == "sequential":
        _commit_sequential(block, world, report, clock, began, cost_s)
    else:
        _commit_dag(block, world, strategy, report, clock, began, cost_s, cores)
    report.wall_ms = clock() - began
    return world, report


def _commit_sequential(block, world, report, clock, began, cost_s) -> None:
    report.level_widths = [1] * len(block.txs)
    report.batches = [[[tx.tx_id]] for tx in block.txs]
    for index, tx in enumerate(block.txs):
        start = clock()
        if tx.is_expired(began):
            outcome = CommitOutcome.aborted(tx.tx_id, Reason.EXPIRED, clock())
        else:
            if cost_s:
                time.sleep(cost_s)
            if mvcc_validate(world, tx.rwset.reads):
                apply_writeset(world, tx.rwset.writes)
                outcome = CommitOutcome.committed_at(tx.tx_id, clock())
            else:
                outcome = CommitOutcome.aborted(tx.tx_id, Reason.VERSION_MISMATCH, clock())
        report.outcomes.append(outcome)
        report.spans[tx.tx_id] = TxSpan(index, start, outcome.commit_time)


def _commit_dag(block, world, strategy, report, clock, began, cost_s, cores) -> None:
    schedule = levelize(build_dag(block))
    by_id = {tx.tx_id: tx for tx in block.txs}
    slot = {tx.tx_id: i for i, tx in enumerate(block.txs)}
    outcomes: List[Optional[CommitOutcome]] = [None] * len(block.txs)
    write_lock = threading.Lock()
    report.level_widths = schedule.widths

    def run_tx(tx: EndorsedTransaction, level: int) -> None:
        start = clock()
        if tx.is_expired(began):
            outcome = CommitOutcome.aborted(tx.tx_id, Reason.EXPIRED, clock())
        else:
            if cost_s:
                time.sleep(cost_s)
            try:
                rwset = simulate(tx.proposal.call, world)
            except ChaincodeError as exc:
                outcome = CommitOutcome.aborted(tx.tx_id, Reason.CHAINCODE_REJECTED, clock(), exc.reason)
            else:
                with write_lock:
                    apply_writeset(world, rwset.writes)
                outcome = CommitOutcome.committed_at(tx.tx_id, clock())
        outcomes[slot[tx.tx_id]] = outcome
        report.spans[tx.tx_id] = TxSpan(level, start, outcome.commit_time)

    max_degree = max(strategy.degree(w, cores) for w in schedule.widths)
    executor = ThreadPoolExecutor(max_workers=max_degree) if max_degree > 1 else None
    try:
        for level, members in enumerate(schedule.levels):
            groups = conflict_groups([by_id[t] for t in members])
            report.batches.append([[tx.tx_id for tx in g] for g in groups])
            lanes = min(strategy.degree(len(members), cores), len(groups))
            _run_level(groups, lanes, executor, lambda g, lv=level: [run_tx(tx, lv) for tx in g])
    finally:
        if executor is not None:
            executor.shutdown(wait=True)

    report.outcomes = list(outcomes)  # type: ignore[arg-type]
    report.notifications = sum(o.committed for o in report.outcomes)


def _run_level(groups, lanes, executor, run_group) -> None:
    """Run every group, at most ``lanes`` at a time; returns when all finish."""
    if lanes <= 1 or executor is None:
        for group in groups:
            run_group(group)
        return
    pending = iter(groups)
    take = threading.Lock()

    def lane() -> None:
        while True:
            with take:
                group = next(pending, None)
            if group is None:
                return
            run_group(group)

    futures = [executor.submit(lane) for _ in range(lanes)]
    for future in futures:
        future.result()
