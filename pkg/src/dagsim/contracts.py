"""Deterministic chaincode for the voting, asset-transfer and wallet benchmarks.

Every function is a pure function of (call, snapshot). Reads go through a
recording context so the returned read set lists exactly the keys consulted,
with the versions observed. Balances and tallies are stored as decimal strings.

Key layout, namespaced by contract id::

    asset   asset/<id>
    voting  voted/<vid>, tally/<candidate>
    wallet  wallet/<wid>
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

from dagsim.model import ReadWriteSet, StateKey, WorldState

VOTING = "voting"
ASSET = "asset"
WALLET = "wallet"


class ChaincodeError(Exception):
    """A contract's business rule rejected the call."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class _Context:
    def __init__(self, namespace: str, snapshot: WorldState):
        self.namespace = namespace
        self.snapshot = snapshot
        self.reads: Dict[StateKey, Optional[int]] = {}
        self.writes: Dict[StateKey, Optional[str]] = {}

    def key(self, name: str) -> StateKey:
        return StateKey(self.namespace, name)

    def get(self, name: str) -> Optional[str]:
        key = self.key(name)
        if key in self.writes:
            return self.writes[key]
        entry = self.snapshot.get(key)
        if key not in self.reads:
            self.reads[key] = entry[1] if entry else None
        return entry[0] if entry else None

    def put(self, name: str, value: Optional[str]) -> None:
        self.writes[self.key(name)] = value

    def rwset(self) -> ReadWriteSet:
        return ReadWriteSet(tuple(self.reads.items()), tuple(self.writes.items()))


def _amount(raw: str, allow_zero: bool = False) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise ChaincodeError("invalid amount") from None
    if value < 0 or (value == 0 and not allow_zero):
        raise ChaincodeError("invalid amount")
    return value


# -- asset transfer ---------------------------------------------------------

def _create_asset(ctx: _Context, asset_id: str, value: str) -> None:
    amount = _amount(value, allow_zero=True)
    if ctx.get(f"asset/{asset_id}") is not None:
        raise ChaincodeError("asset exists")
    ctx.put(f"asset/{asset_id}", str(amount))


def _read_asset(ctx: _Context, asset_id: str) -> None:
    if ctx.get(f"asset/{asset_id}") is None:
        raise ChaincodeError("missing asset")


def _deduct(ctx: _Context, asset_id: str, amount: str) -> None:
    amount_ = _amount(amount)
    balance = ctx.get(f"asset/{asset_id}")
    if balance is None:
        raise ChaincodeError("missing asset")
    if int(balance) < amount_:
        raise ChaincodeError("insufficient balance")
    ctx.put(f"asset/{asset_id}", str(int(balance) - amount_))


# -- voting -----------------------------------------------------------------

def _register_voter(ctx: _Context, vid: str) -> None:
    if ctx.get(f"voted/{vid}") is not None:
        raise ChaincodeError("voter exists")
    ctx.put(f"voted/{vid}", "0")


def _cast_vote(ctx: _Context, vid: str, candidate: str) -> None:
    marker = ctx.get(f"voted/{vid}")
    if marker is None:
        raise ChaincodeError("unregistered voter")
    if marker != "0":
        raise ChaincodeError("already voted")
    # An absent tally counts as zero votes.
    tally = int(ctx.get(f"tally/{candidate}") or "0")
    ctx.put(f"voted/{vid}", "1")
    ctx.put(f"tally/{candidate}", str(tally + 1))


# -- wallet -----------------------------------------------------------------

def _balance(ctx: _Context, wid: str) -> int:
    raw = ctx.get(f"wallet/{wid}")
    if raw is None:
        raise ChaincodeError("missing wallet")
    return int(raw)


def _open(ctx: _Context, wid: str, amount: str) -> None:
    amount_ = _amount(amount, allow_zero=True)
    if ctx.get(f"wallet/{wid}") is not None:
        raise ChaincodeError("wallet exists")
    ctx.put(f"wallet/{wid}", str(amount_))


def _deposit(ctx: _Context, wid: str, amount: str) -> None:
    amount_ = _amount(amount)
    ctx.put(f"wallet/{wid}", str(_balance(ctx, wid) + amount_))


def _withdraw(ctx: _Context, wid: str, amount: str) -> None:
    amount_ = _amount(amount)
    balance = _balance(ctx, wid)
    if balance < amount_:
        raise ChaincodeError("insufficient balance")
    ctx.put(f"wallet/{wid}", str(balance - amount_))


def _transfer(ctx: _Context, src: str, dst: str, amount: str) -> None:
    amount_ = _amount(amount)
    if src == dst:
        raise ChaincodeError("invalid transfer")
    src_balance = _balance(ctx, src)
    dst_balance = _balance(ctx, dst)
    if src_balance < amount_:
        raise ChaincodeError("insufficient balance")
    ctx.put(f"wallet/{src}", str(src_balance - amount_))
    ctx.put(f"wallet/{dst}", str(dst_balance + amount_))


CONTRACTS: Dict[str, Dict[str, Tuple[Callable[..., None], int]]] = {
    ASSET: {
        "CreateAsset": (_create_asset, 2),
        "ReadAsset": (_read_asset, 1),
        "Deduct": (_deduct, 2),
    },
    VOTING: {
        "RegisterVoter": (_register_voter, 1),
        "CastVote": (_cast_vote, 2),
    },
    WALLET: {
        "Open": (_open, 2),
        "Deposit": (_deposit, 2),
        "Withdraw": (_withdraw, 2),
        "Transfer": (_transfer, 3),
    },
}


def check_signature(contract: str, function: str, nargs: int) -> None:
    try:
        _, arity = CONTRACTS[contract][function]
    except KeyError:
        raise ValueError(f"unknown function {contract}.{function}") from None
    if nargs != arity:
        raise ValueError(f"{contract}.{function} takes {arity} args, got {nargs}")


@dataclass(frozen=True)
class ContractCall:
    contract: str
    function: str
    args: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "args", tuple(str(a) for a in self.args))
        check_signature(self.contract, self.function, len(self.args))

    def __str__(self) -> str:
        return f"{self.contract}.{self.function}({', '.join(self.args)})"


def simulate(call: ContractCall, snapshot: WorldState) -> ReadWriteSet:
    """Execute ``call`` against ``snapshot`` without mutating it.

    Returns the read/write set, or raises :class:`ChaincodeError` when the
    contract rejects the call.
    """
    fn, _ = CONTRACTS[call.contract][call.function]
    ctx = _Context(call.contract, snapshot)
    fn(ctx, *call.args)
    return ctx.rwset()
