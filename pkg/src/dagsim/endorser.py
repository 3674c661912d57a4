"""Leader endorser: simulation plus dependency flagging over an active-key table."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from dagsim.clock import Clock, SimClock
from dagsim.contracts import ChaincodeError, simulate
from dagsim.model import EndorsedTransaction, StateKey, TransactionProposal, WorldState

INFINITE_TTL = math.inf


class EndorsementRejected(Exception):
    """Simulation failed; the client is told and nothing reaches the orderer."""

    def __init__(self, tx_id: int, reason: str):
        super().__init__(f"tx {tx_id} rejected: {reason}")
        self.tx_id = tx_id
        self.reason = reason


@dataclass
class EndorserConfig:
    endorsement_ttl: float = INFINITE_TTL
    clock: Clock = field(default_factory=SimClock)

    def __post_init__(self) -> None:
        if not self.endorsement_ttl > 0:
            raise ValueError("endorsement_ttl must be positive")


class ActiveKeyTable:
    """Maps each state key to the latest live endorsement that touched it.

    An entry is live while ``now <= deadline``; stale entries are invisible to
    :meth:`lookup` even before :meth:`purge_expired` removes them.
    """

    def __init__(self) -> None:
        self.entries: Dict[StateKey, Tuple[int, float]] = {}

    def lookup(self, key: StateKey, now: float) -> Optional[int]:
        entry = self.entries.get(key)
        if entry is None or entry[1] < now:
            return None
        return entry[0]

    def point(self, key: StateKey, tx_id: int, deadline: float) -> None:
        self.entries[key] = (tx_id, deadline)

    def purge_expired(self, now: float) -> int:
        stale = [k for k, (_, deadline) in self.entries.items() if deadline < now]
        for key in stale:
            del self.entries[key]
        return len(stale)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, key: object) -> bool:
        return key in self.entries


def purge_expired(table: ActiveKeyTable, now: float) -> int:
    return table.purge_expired(now)


def endorse(
    proposal: TransactionProposal,
    world: WorldState,
    table: ActiveKeyTable,
    cfg: EndorserConfig,
    seq: int = 0,
) -> EndorsedTransaction:
    """Simulate ``proposal`` and flag it against the active-key table.

    The transaction is dependent when any key in its footprint has a live
    table entry; each such key contributes one ``(key, previous tx)`` parent.
    All footprint keys are then re-pointed at this transaction with a fresh
    expiry deadline. Raises :class:`EndorsementRejected` if simulation fails,
    leaving the table untouched.
    """
    try:
        rwset = simulate(proposal.call, world)
    except ChaincodeError as exc:
        raise EndorsementRejected(proposal.tx_id, exc.reason) from exc

    now = cfg.clock()
    deadline = now + cfg.endorsement_ttl
    parents: List[Tuple[StateKey, int]] = []
    # Sorted so that parent lists do not depend on set iteration order.
    footprint = sorted(rwset.footprint)
    for key in footprint:
        previous = table.lookup(key, now)
        if previous is not None:
            parents.append((key, previous))
    for key in footprint:
        table.point(key, proposal.tx_id, deadline)

    return EndorsedTransaction(
        proposal=proposal,
        rwset=rwset,
        flag=1 if parents else 0,
        parents=tuple(parents),
        endorse_time=now,
        expiry_deadline=deadline,
        seq=seq,
    )


class LeaderEndorser:
    """Stateful wrapper that owns the table and processes proposals in order."""

    def __init__(self, cfg: Optional[EndorserConfig] = None):
        self.cfg = cfg or EndorserConfig()
        self.table = ActiveKeyTable()
        self._seq = 0

    def endorse(self, proposal: TransactionProposal, world: WorldState) -> EndorsedTransaction:
        self._seq += 1
        return endorse(proposal, world, self.table, self.cfg, seq=self._seq)

    def purge_expired(self, now: Optional[float] = None) -> int:
        return self.table.purge_expired(self.cfg.clock() if now is None else now)
