import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dagsim.clock import SimClock  # noqa: E402
from dagsim.contracts import ContractCall  # noqa: E402
from dagsim.endorser import EndorserConfig, LeaderEndorser  # noqa: E402
from dagsim.model import Block, TransactionProposal, WorldState  # noqa: E402

# Filled by test_acceptance; printed once at the end of the session.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


@pytest.fixture
def clock():
    return SimClock()


@pytest.fixture
def endorser(clock):
    return LeaderEndorser(EndorserConfig(clock=clock))


def deducts(n, asset="A", amount=100, start_id=1):
    return [
        TransactionProposal(start_id + i, ContractCall("asset", "Deduct", (asset, str(amount))))
        for i in range(n)
    ]


def asset_world(**balances):
    from dagsim.model import StateKey, apply_writeset

    world = WorldState()
    apply_writeset(world, [(StateKey("asset", f"asset/{k}"), str(v)) for k, v in balances.items()])
    return world


def endorse_block(proposals, world, endorser, block_number=0):
    txs = [endorser.endorse(p, world) for p in proposals]
    return Block.from_txs(block_number, txs)
