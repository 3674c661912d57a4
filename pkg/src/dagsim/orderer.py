"""Block construction: expiry gatekeeping, independent-first ordering, metadata copy."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

from dagsim.model import Block, EndorsedTransaction


class EmptyBlock(Exception):
    """No live transaction was available to cut a block."""


@dataclass(frozen=True)
class OrdererConfig:
    block_size: int = 5000
    prioritize_independent: bool = True

    def __post_init__(self) -> None:
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")


def build_block(
    pending: Sequence[EndorsedTransaction],
    block_number: int,
    cfg: OrdererConfig,
    now: float,
) -> Tuple[Block, List[int]]:
    """Cut one block from the front of ``pending`` (endorsement order).

    Expired endorsements met while scanning are dropped and their ids
    returned. Scanning stops once ``block_size`` live transactions are taken;
    anything after that point is left for the next block.
    """
    taken: List[EndorsedTransaction] = []
    dropped: List[int] = []
    for tx in pending:
        if len(taken) == cfg.block_size:
            break
        if tx.is_expired(now):
            dropped.append(tx.tx_id)
        else:
            taken.append(tx)
    if not taken:
        raise EmptyBlock(f"no live transactions for block {block_number} ({len(dropped)} expired)")
    if cfg.prioritize_independent:
        # Stable partition keeps every parent ahead of its children.
        taken = [tx for tx in taken if tx.flag == 0] + [tx for tx in taken if tx.flag == 1]
    return Block.from_txs(block_number, taken), dropped


class Orderer:
    """Queue of endorsed transactions that is drained into numbered blocks."""

    def __init__(self, cfg: OrdererConfig = OrdererConfig()):
        self.cfg = cfg
        self.pending: List[EndorsedTransaction] = []
        self.next_block = 0

    def submit(self, tx: EndorsedTransaction) -> None:
        self.pending.append(tx)

    def cut_block(self, now: float) -> Tuple[Block, List[int]]:
        """Cut the next block; raises :class:`EmptyBlock` when nothing is live.

        Expired transactions are removed from the queue even when the cut
        raises, so a caller can collect them from ``exc.dropped``.
        """
        try:
            block, dropped = build_block(self.pending, self.next_block, self.cfg, now)
        except EmptyBlock as exc:
            exc.dropped = [tx.tx_id for tx in self.pending]  # type: ignore[attr-defined]
            self.pending = []
            raise
        consumed = {tx.tx_id for tx in block.txs}
        consumed.update(dropped)
        self.pending = [tx for tx in self.pending if tx.tx_id not in consumed]
        self.next_block += 1
        return block, dropped

    def __len__(self) -> int:
        return len(self.pending)
