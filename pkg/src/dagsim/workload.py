"""Seeded synthetic workloads with a controlled dependency ratio.

A proposal is either *fresh*, touching only keys nobody in the batch has
touched, or *dependent*, aimed at a key drawn uniformly from those already
targeted earlier in the batch. With no endorsement expiry the realized
fraction of flag=1 endorsements therefore equals the configured ratio.

Replay files are plain text, one call per line, tab separated::

    # comment lines start with '#'
    setup<TAB>voting<TAB>RegisterVoter<TAB>v1
    1<TAB>voting<TAB>CastVote<TAB>v1<TAB>c1
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple, Union

from dagsim.contracts import ASSET, VOTING, WALLET, ContractCall
from dagsim.model import TransactionProposal

CONTRACT_ALIASES = {
    "voting": VOTING,
    "asset": ASSET,
    "asset-transfer": ASSET,
    "assettransfer": ASSET,
    "wallet": WALLET,
}

REPLAY_HEADER = "# dagsim workload replay v1"


@dataclass(frozen=True)
class WorkloadConfig:
    tx_count: int = 1000
    dependency_ratio: float = 0.5
    contract: str = VOTING
    seed: int = 42
    amount: int = 100
    balance_multiple: int = 3
    # Share of dependent votes that reuse an earlier voter (a double vote).
    double_vote_fraction: float = 0.2

    def __post_init__(self) -> None:
        object.__setattr__(self, "contract", parse_contract(self.contract))
        if self.tx_count < 1:
            raise ValueError("tx_count must be >= 1")
        if not 0.0 <= self.dependency_ratio <= 1.0:
            raise ValueError("dependency_ratio must lie in [0, 1]")
        if self.amount < 1 or self.balance_multiple < 1:
            raise ValueError("amount and balance_multiple must be >= 1")
        if not 0.0 <= self.double_vote_fraction <= 1.0:
            raise ValueError("double_vote_fraction must lie in [0, 1]")

    @property
    def dependent_count(self) -> int:
        # Half-up rounding; the first proposal can never be dependent.
        wanted = math.floor(self.dependency_ratio * self.tx_count + 0.5)
        return min(wanted, self.tx_count - 1)


def parse_contract(name: str) -> str:
    try:
        return CONTRACT_ALIASES[name.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown contract {name!r}") from None


@dataclass
class Workload:
    setup: List[ContractCall] = field(default_factory=list)
    proposals: List[TransactionProposal] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.proposals)


class _Builder:
    def __init__(self, cfg: WorkloadConfig, rng: random.Random):
        self.cfg = cfg
        self.rng = rng
        self.setup: List[ContractCall] = []
        self.counters: Dict[str, int] = {}
        self.targets: List[str] = []  # keys targeted so far, in first-use order
        self.voters: Dict[str, List[str]] = {}  # candidate -> voters aimed at it

    def new(self, prefix: str) -> str:
        self.counters[prefix] = self.counters.get(prefix, 0) + 1
        return f"{prefix}{self.counters[prefix]}"

    @property
    def amount(self) -> str:
        return str(self.cfg.amount)

    @property
    def balance(self) -> str:
        return str(self.cfg.amount * self.cfg.balance_multiple)

    # -- asset --

    def asset(self, dependent: bool) -> ContractCall:
        if dependent:
            asset_id = self.rng.choice(self.targets)
        else:
            asset_id = self.new("a")
            self.setup.append(ContractCall(ASSET, "CreateAsset", (asset_id, self.balance)))
            self.targets.append(asset_id)
        return ContractCall(ASSET, "Deduct", (asset_id, self.amount))

    # -- voting --

    def voter(self) -> str:
        vid = self.new("v")
        self.setup.append(ContractCall(VOTING, "RegisterVoter", (vid,)))
        return vid

    def voting(self, dependent: bool) -> ContractCall:
        if dependent:
            candidate = self.rng.choice(self.targets)
            if self.rng.random() < self.cfg.double_vote_fraction:
                vid = self.rng.choice(self.voters[candidate])
            else:
                vid = self.voter()
                self.voters[candidate].append(vid)
        else:
            candidate = self.new("c")
            vid = self.voter()
            self.targets.append(candidate)
            self.voters[candidate] = [vid]
        return ContractCall(VOTING, "CastVote", (vid, candidate))

    # -- wallet --

    def wallet_open(self) -> str:
        wid = self.new("w")
        self.setup.append(ContractCall(WALLET, "Open", (wid, self.balance)))
        self.targets.append(wid)
        return wid

    def wallet(self, dependent: bool) -> ContractCall:
        roll = self.rng.random()
        wid = self.rng.choice(self.targets) if dependent else self.wallet_open()
        if roll < 0.1:
            return ContractCall(WALLET, "Transfer", (wid, self.wallet_open(), self.amount))
        if roll < 0.4:
            return ContractCall(WALLET, "Deposit", (wid, self.amount))
        return ContractCall(WALLET, "Withdraw", (wid, self.amount))


def generate(cfg: WorkloadConfig) -> Workload:
    """Deterministic (setup calls, proposals) for ``cfg``.

    All proposals are submitted at t=0: the harness offers the batch in bulk.
    """
    rng = random.Random(cfg.seed)
    n = cfg.tx_count
    dependent = set(rng.sample(range(1, n), cfg.dependent_count))
    builder = _Builder(cfg, rng)
    make = {ASSET: builder.asset, VOTING: builder.voting, WALLET: builder.wallet}[cfg.contract]
    proposals = [
        TransactionProposal(tx_id=i + 1, call=make(i in dependent), submit_time=0.0)
        for i in range(n)
    ]
    return Workload(builder.setup, proposals)


def _line(fields: Tuple[str, ...]) -> str:
    for f in fields:
        if "\t" in f or "\n" in f:
            raise ValueError(f"field {f!r} cannot be written to a replay file")
    return "\t".join(fields)


def dumps_replay(workload: Workload, comment: str = "") -> str:
    lines = [REPLAY_HEADER]
    if comment:
        lines.append(f"# {comment}")
    for call in workload.setup:
        lines.append(_line(("setup", call.contract, call.function) + call.args))
    for p in workload.proposals:
        lines.append(_line((str(p.tx_id), p.call.contract, p.call.function) + p.call.args))
    return "\n".join(lines) + "\n"


def write_replay(workload: Workload, path: Union[str, Path], comment: str = "") -> Path:
    path = Path(path)
    path.write_text(dumps_replay(workload, comment), encoding="utf-8")
    return path


def loads_replay(text: str) -> Workload:
    workload = Workload()
    for lineno, raw in enumerate(text.splitlines(), 1):
        if not raw.strip() or raw.startswith("#"):
            continue
        fields = raw.split("\t")
        if len(fields) < 3:
            raise ValueError(f"line {lineno}: expected tx_id, contract, function")
        tag, contract, function, *args = fields
        call = ContractCall(contract, function, tuple(args))
        if tag == "setup":
            workload.setup.append(call)
        else:
            workload.proposals.append(TransactionProposal(int(tag), call, 0.0))
    return workload


def read_replay(path: Union[str, Path]) -> Workload:
    return loads_replay(Path(path).read_text(encoding="utf-8"))
