"""System bootstrap: mainchain genesis plus one sidechain per module."""

from __future__ import annotations

import hashlib
from collections.abc import Sequence
from dataclasses import dataclass

from chainscale.chains.mainchain import genesis_state
from chainscale.chains.state import MainchainState, SidechainState
from chainscale.chains.summary import SUMMARY_RULES, SummaryRule
from chainscale.config.logging import get_logger
from chainscale.core.modules import ModuleSpec, ModuleTable
from chainscale.core.types import ChainId, TxType
from chainscale.market.traffic import GenesisAllocation

logger = get_logger(__name__)


@dataclass
class SystemState:
    table: ModuleTable
    mainchain: MainchainState
    sidechains: dict[ChainId, SidechainState]
    epoch_length: int
    summary_rules: dict[TxType, SummaryRule]

    def module_chains(self, module_id: int) -> list[SidechainState]:
        return [
            sc for chain_id, sc in sorted(self.sidechains.items()) if chain_id.module == module_id
        ]


def _genesis_digest(genesis: GenesisAllocation) -> bytes:
    hasher = hashlib.blake2b(digest_size=32)
    for party, balance in sorted(genesis.balances.items()):
        hasher.update(party.to_bytes(8, "big") + balance.to_bytes(16, "big"))
    for cid, amount in sorted(genesis.escrows.items()):
        hasher.update(cid.to_bytes(8, "big") + amount.to_bytes(16, "big"))
    return hasher.digest()


def setup(
    genesis: GenesisAllocation,
    modules: ModuleTable | Sequence[ModuleSpec],
    *,
    epoch_length: int,
    main_block_bytes: int,
    main_header_bytes: int = 80,
) -> SystemState:
    """Create the mainchain and a sidechain per module, each tied to the genesis.

    Raises:
        BadModuleTable: if the module list leaves a service type unowned or
            assigns one twice
    """
    table = modules if isinstance(modules, ModuleTable) else ModuleTable(tuple(modules))
    digest = _genesis_digest(genesis)
    main = genesis_state(
        genesis,
        (m.module_id for m in table.modules),
        capacity=main_block_bytes,
        header_bytes=main_header_bytes,
    )
    sidechains = {
        ChainId(m.module_id): SidechainState(ChainId(m.module_id), genesis_ref=digest)
        for m in table.modules
    }
    logger.info(
        "System set up",
        modules=[m.key for m in table.modules],
        parties=len(genesis.balances),
        contracts=len(genesis.contracts),
    )
    return SystemState(table, main, sidechains, epoch_length, dict(SUMMARY_RULES))
