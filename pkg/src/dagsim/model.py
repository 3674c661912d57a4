"""Domain types shared by the endorse/order/commit pipeline."""

from __future__ import annotations

import enum
from functools import cached_property
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, Iterable, Iterator, List, NamedTuple, Optional, Sequence, Tuple

if TYPE_CHECKING:
    from dagsim.contracts import ContractCall


class StateKey(NamedTuple):
    namespace: str
    name: str

    def __str__(self) -> str:
        return f"{self.namespace}:{self.name}"


# An observed version of ``None`` in a read set means the key was absent.
# A written value of ``None`` in a write set means delete.
Read = Tuple[StateKey, Optional[int]]
Write = Tuple[StateKey, Optional[str]]


class WorldState:
    """Versioned key-value store.

    Versions are per-key counters: creation yields 1 and every committed
    write adds 1. Deleted keys keep a tombstone version so that a later
    re-creation continues the sequence instead of restarting at 1.
    """

    def __init__(self, entries: Optional[Dict[StateKey, Tuple[str, int]]] = None):
        self._entries: Dict[StateKey, Tuple[str, int]] = dict(entries or {})
        self._tombstones: Dict[StateKey, int] = {}

    def get(self, key: StateKey) -> Optional[Tuple[str, int]]:
        return self._entries.get(key)

    def value(self, key: StateKey) -> Optional[str]:
        entry = self._entries.get(key)
        return entry[0] if entry else None

    def version(self, key: StateKey) -> Optional[int]:
        entry = self._entries.get(key)
        return entry[1] if entry else None

    def __contains__(self, key: object) -> bool:
        return key in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[StateKey]:
        return iter(self._entries)

    def items(self):
        return self._entries.items()

    def copy(self) -> "WorldState":
        clone = WorldState(self._entries)
        clone._tombstones = dict(self._tombstones)
        return clone

    def canonical(self) -> Tuple[tuple, tuple]:
        """Sorted, hashable view used for bit-exact state comparisons."""
        return (
            tuple(sorted(self._entries.items())),
            tuple(sorted(self._tombstones.items())),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WorldState):
            return NotImplemented
        return self.canonical() == other.canonical()

    def __repr__(self) -> str:
        body = ", ".join(f"{k}=({v!r}, v{ver})" for k, (v, ver) in sorted(self._entries.items()))
        return f"WorldState({body})"

    def _put(self, key: StateKey, value: Optional[str]) -> None:
        current = self._entries.get(key)
        if current is not None:
            previous = current[1]
        else:
            previous = self._tombstones.get(key, 0)
        if value is None:
            if current is not None:
                del self._entries[key]
                self._tombstones[key] = previous + 1
            return
        self._tombstones.pop(key, None)
        self._entries[key] = (value, previous + 1)


def apply_writeset(world: WorldState, writes: Iterable[Write]) -> WorldState:
    """Apply ``writes`` to ``world`` in place and return it.

    Each written key gets its value replaced (or removed for ``None``) and its
    version bumped by one; keys not written are untouched. Deleting an absent
    key is a no-op.
    """
    seen = set()
    for key, value in writes:
        if key in seen:
            raise ValueError(f"duplicate key in write set: {key}")
        seen.add(key)
        world._put(key, value)
    return world


def mvcc_validate(world: WorldState, reads: Iterable[Read]) -> bool:
    """True iff every observed read version still matches ``world``."""
    for key, observed in reads:
        if world.version(key) != observed:
            return False
    return True


@dataclass(frozen=True)
class ReadWriteSet:
    reads: Tuple[Read, ...] = ()
    writes: Tuple[Write, ...] = ()

    def __post_init__(self) -> None:
        if len({k for k, _ in self.reads}) != len(self.reads):
            raise ValueError("duplicate key in read set")
        if len({k for k, _ in self.writes}) != len(self.writes):
            raise ValueError("duplicate key in write set")

    @cached_property
    def footprint(self) -> frozenset:
        """Keys read or written; the unit of conflict detection."""
        return frozenset(k for k, _ in self.reads) | frozenset(k for k, _ in self.writes)


@dataclass(frozen=True)
class TransactionProposal:
    tx_id: int
    call: "ContractCall"
    submit_time: float = 0.0

    @property
    def contract(self) -> str:
        return self.call.contract


Parent = Tuple[StateKey, int]


@dataclass(frozen=True)
class EndorsedTransaction:
    proposal: TransactionProposal
    rwset: ReadWriteSet
    flag: int
    parents: Tuple[Parent, ...]
    endorse_time: float
    expiry_deadline: float
    seq: int = 0  # position in the endorser's processing order

    def __post_init__(self) -> None:
        if self.flag not in (0, 1):
            raise ValueError(f"flag must be 0 or 1, got {self.flag}")
        if (self.flag == 0) != (not self.parents):
            raise ValueError("flag must be 0 exactly when parents is empty")

    @property
    def tx_id(self) -> int:
        return self.proposal.tx_id

    @property
    def footprint(self) -> frozenset:
        return self.rwset.footprint

    @property
    def parent_ids(self) -> Tuple[int, ...]:
        """Distinct parent tx ids, first-seen order."""
        return tuple(dict.fromkeys(tx for _, tx in self.parents))

    def is_expired(self, now: float) -> bool:
        return self.expiry_deadline < now


@dataclass(frozen=True)
class TxMetadata:
    flag: int
    parents: Tuple[Parent, ...]


@dataclass(frozen=True)
class Block:
    block_number: int
    txs: Tuple[EndorsedTransaction, ...]
    metadata: Dict[int, TxMetadata] = field(default_factory=dict)

    @classmethod
    def from_txs(cls, block_number: int, txs: Sequence[EndorsedTransaction]) -> "Block":
        """Build a block whose metadata is copied verbatim from each tx."""
        txs = tuple(txs)
        metadata = {tx.tx_id: TxMetadata(tx.flag, tx.parents) for tx in txs}
        return cls(block_number, txs, metadata)

    def __len__(self) -> int:
        return len(self.txs)


class Status(str, enum.Enum):
    COMMITTED = "Committed"
    ABORTED = "Aborted"


class Reason(str, enum.Enum):
    NONE = "None"
    VERSION_MISMATCH = "VersionMismatch"
    CHAINCODE_REJECTED = "ChaincodeRejected"
    EXPIRED = "Expired"
    SIMULATION_FAILED = "SimulationFailed"


@dataclass(frozen=True)
class CommitOutcome:
    tx_id: int
    status: Status
    reason: Reason = Reason.NONE
    commit_time: float = 0.0
    detail: str = ""

    def __post_init__(self) -> None:
        if (self.status is Status.COMMITTED) != (self.reason is Reason.NONE):
            raise ValueError("Committed outcomes must carry reason None, aborts must not")

    @property
    def committed(self) -> bool:
        return self.status is Status.COMMITTED

    @classmethod
    def committed_at(cls, tx_id: int, when: float) -> "CommitOutcome":
        return cls(tx_id, Status.COMMITTED, Reason.NONE, when)

    @classmethod
    def aborted(cls, tx_id: int, reason: Reason, when: float, detail: str = "") -> "CommitOutcome":
        return cls(tx_id, Status.ABORTED, reason, when, detail)


def statuses(outcomes: Iterable[CommitOutcome]) -> List[Tuple[int, str, str]]:
    """Timing-free projection of outcomes, for equality checks and golden logs."""
    return [(o.tx_id, o.status.value, o.reason.value) for o in outcomes]
