"""Dependency-aware execute-order-validate pipeline simulator."""

from dagsim.committer import CommitStrategy, build_dag, commit_block, levelize
from dagsim.contracts import ChaincodeError, ContractCall, simulate
from dagsim.endorser import ActiveKeyTable, EndorsementRejected, EndorserConfig, LeaderEndorser, endorse
from dagsim.harness import MetricsReport, RunConfig, run
from dagsim.model import (
    Block,
    CommitOutcome,
    EndorsedTransaction,
    Reason,
    ReadWriteSet,
    StateKey,
    Status,
    TransactionProposal,
    WorldState,
    apply_writeset,
    mvcc_validate,
)
from dagsim.orderer import Orderer, OrdererConfig, build_block
from dagsim.workload import WorkloadConfig, generate

__version__ = "0.1.0"
