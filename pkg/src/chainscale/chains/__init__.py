"""Mainchain and module sidechain engines."""

from chainscale.chains.consensus import Pbft, VoteOutcome
from chainscale.chains.mainchain import (
    apply_sync,
    apply_transaction,
    genesis_state,
    produce_main_block,
    rollback,
)
from chainscale.chains.scaling import (
    Allocation,
    SubchainGrant,
    SubchainRequest,
    allocate_subchains,
    assign_subchain,
    elect_sync_committee,
)
from chainscale.chains.setup import SystemState, setup
from chainscale.chains.sidechain import (
    BlockOutcome,
    TxValidator,
    detect_heavy,
    produce_meta_block,
    prune,
)
from chainscale.chains.state import (
    ChainStatus,
    EpochStats,
    MainchainState,
    SidechainState,
    StateVars,
)
from chainscale.chains.summary import (
    SUMMARY_RULES,
    SyncSizing,
    create_sync_tx,
    produce_summary_block,
    verify_sync_tx,
)

__all__ = [
    "SUMMARY_RULES",
    "Allocation",
    "BlockOutcome",
    "ChainStatus",
    "EpochStats",
    "MainchainState",
    "Pbft",
    "SidechainState",
    "StateVars",
    "SubchainGrant",
    "SubchainRequest",
    "SyncSizing",
    "SystemState",
    "TxValidator",
    "VoteOutcome",
    "allocate_subchains",
    "apply_sync",
    "apply_transaction",
    "assign_subchain",
    "create_sync_tx",
    "detect_heavy",
    "elect_sync_committee",
    "genesis_state",
    "produce_main_block",
    "produce_meta_block",
    "produce_summary_block",
    "prune",
    "rollback",
    "setup",
    "verify_sync_tx",
]
