"""Ledger state for sidechains and the mainchain."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from chainscale.core.types import (
    ChainId,
    Committee,
    MainBlock,
    MetaBlock,
    SummaryBlock,
    SyncTransaction,
    Transaction,
)
from chainscale.errors import InvariantViolation


class ChainStatus(str, Enum):
    ACTIVE = "active"
    RECOVERING = "recovering"
    EXHAUSTED = "exhausted"


@dataclass
class EpochStats:
    """Per-epoch production counters used for heavy-module detection."""

    blocks: int = 0
    full_blocks: int = 0
    arrival_bytes: int = 0
    confirmed: int = 0

    def merge(self, other: EpochStats) -> EpochStats:
        return EpochStats(
            blocks=self.blocks + other.blocks,
            full_blocks=self.full_blocks + other.full_blocks,
            arrival_bytes=self.arrival_bytes + other.arrival_bytes,
            confirmed=self.confirmed + other.confirmed,
        )


@dataclass
class SidechainState:
    """One module sidechain or sub-sidechain.

    Meta-blocks are temporary; summary-blocks (kept on sub 0 of a module) are
    permanent. The committee fields are reseated every epoch.
    """

    sidechain_id: ChainId
    genesis_ref: bytes = b""
    metas: list[MetaBlock] = field(default_factory=list)
    summaries: dict[int, SummaryBlock] = field(default_factory=dict)
    mempool: deque[Transaction] = field(default_factory=deque)
    committee: Committee | None = None
    backups: list[Committee] = field(default_factory=list)
    heavy: bool = False
    requested_subchains: int = 1
    pruned_epochs: set[int] = field(default_factory=set)

    status: ChainStatus = ChainStatus.ACTIVE
    resume_at: int = 0
    failed_at: int = -1
    last_block_round: int = -1
    committees_used: int = 1
    stalled_until: int = -1
    stats: EpochStats = field(default_factory=EpochStats)

    def append_meta(self, block: MetaBlock) -> None:
        if block.sidechain_id != self.sidechain_id:
            raise InvariantViolation(f"{block.sidechain_id} block appended to {self.sidechain_id}")
        last = self.metas[-1] if self.metas else None
        if last is not None and last.epoch == block.epoch and last.round >= block.round:
            raise InvariantViolation(
                f"{self.sidechain_id}: meta round {block.round} after {last.round} in epoch "
                f"{block.epoch}"
            )
        self.metas.append(block)
        self.last_block_round = block.round

    def metas_for(self, epoch: int) -> list[MetaBlock]:
        return [block for block in self.metas if block.epoch == epoch]

    @property
    def mempool_bytes(self) -> int:
        return sum(tx.size_bytes for tx in self.mempool)

    @property
    def meta_bytes(self) -> int:
        return sum(block.used_bytes for block in self.metas)

    @property
    def live(self) -> bool:
        return self.status is ChainStatus.ACTIVE and self.committee is not None


@dataclass
class StateVars:
    """Mainchain summary state variables for every module."""

    por_counts: dict[int, int] = field(default_factory=dict)
    payments: dict[int, int] = field(default_factory=dict)
    dispensed: dict[int, int] = field(default_factory=dict)
    unpaid: dict[int, int] = field(default_factory=dict)
    disputes: dict[int, tuple[int, bool]] = field(default_factory=dict)
    matches: dict[int, tuple[int, int, int, int]] = field(default_factory=dict)
    sanctioned: set[int] = field(default_factory=set)
    synced: dict[int, set[int]] = field(default_factory=dict)

    def snapshot(self) -> dict[str, Any]:
        """Market state for twin-run comparisons; epoch bookkeeping is left out."""
        return {
            "por_counts": dict(sorted(self.por_counts.items())),
            "payments": dict(sorted(self.payments.items())),
            "disputes": dict(sorted(self.disputes.items())),
            "matches": dict(sorted(self.matches.items())),
            "sanctioned": sorted(self.sanctioned),
        }


@dataclass
class MainchainState:
    """Permanent chain of record."""

    genesis_balances: dict[int, int]
    genesis_escrows: dict[int, int]
    contracts: frozenset[int]
    servers: dict[int, int]
    blocks: list[MainBlock] = field(default_factory=list)
    state_vars: StateVars = field(default_factory=StateVars)
    balances: dict[int, int] = field(default_factory=dict)
    escrow: dict[int, int] = field(default_factory=dict)
    pending: deque[Transaction] = field(default_factory=deque)
    pending_syncs: deque[SyncTransaction] = field(default_factory=deque)
    confirmed_blocks: int = 0
    last_rejected: list[Transaction] = field(default_factory=list)
    last_confirmed_syncs: list[SyncTransaction] = field(default_factory=list)

    def is_synced(self, module: int, epoch: int) -> bool:
        return epoch in self.state_vars.synced.get(module, set())

    @property
    def height(self) -> int:
        return len(self.blocks)

    @property
    def storage_bytes(self) -> int:
        return sum(block.size_bytes for block in self.blocks)
