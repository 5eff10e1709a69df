"""Sidechain block production, pruning and heavy-module detection."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from chainscale.chains.consensus import Pbft, VoteOutcome
from chainscale.chains.state import EpochStats, MainchainState, SidechainState
from chainscale.config.logging import get_logger
from chainscale.core.types import MAINCHAIN_ID, ChainId, MetaBlock, Transaction, TxType
from chainscale.errors import InvariantViolation, PruneBeforeConfirm

logger = get_logger(__name__)


@dataclass
class TxValidator:
    """Validates sidechain transactions against finalized mainchain state only.

    Every state read is tallied by its source. A read of another module's
    sidechain (sub-sidechains included) is a cross-sidechain dependency and is
    counted separately; reads within the reader's own module are not.
    """

    main: MainchainState
    reads: Counter[str] = field(default_factory=Counter)
    cross_chain_reads: int = 0

    def record_read(self, reader: ChainId, source: ChainId | None = None) -> None:
        """Tally one state read by ``reader``; ``source=None`` is the mainchain."""
        if source is None:
            self.reads[MAINCHAIN_ID] += 1
            return
        self.reads[str(source)] += 1
        if source.module != reader.module:
            self.cross_chain_reads += 1
            logger.warning("Cross-sidechain read", reader=str(reader), source=str(source))

    def validate(self, tx: Transaction, chain_id: ChainId) -> bool:
        if tx.contract_id is not None:
            self.record_read(chain_id)
            if tx.contract_id not in self.main.contracts:
                return False
        # A dispute's flag is its outcome, not its validity.
        return tx.valid or tx.tx_type is TxType.DISPUTE

    def assert_isolated(self) -> None:
        if self.cross_chain_reads:
            raise InvariantViolation(f"{self.cross_chain_reads} cross-sidechain state reads")


@dataclass(frozen=True)
class BlockOutcome:
    """Result of one sidechain round for one chain."""

    vote: VoteOutcome
    block: MetaBlock | None = None
    rejected: tuple[Transaction, ...] = ()
    full: bool = False

    @property
    def view_change(self) -> bool:
        return self.vote.view_change


def produce_meta_block(
    sc: SidechainState,
    *,
    epoch: int,
    side_round: int,
    round_in_epoch: int,
    capacity: int,
    validator: TxValidator,
    pbft: Pbft,
    gated: bool = False,
    forced_failure: bool = False,
) -> BlockOutcome:
    """Run the active committee for one sidechain round.

    The leader packs the mempool FIFO and stops at the first transaction that
    does not fit. A gated chain mines an empty marker block. When the leader
    misbehaves the round is spent on a view change and no block appears.

    Raises:
        ConsensusFailure: when the committee cannot reach the vote threshold
    """
    if sc.committee is None:
        raise InvariantViolation(f"{sc.sidechain_id} has no committee")
    vote = pbft.vote(sc.committee, round_in_epoch, forced_failure=forced_failure)
    if vote.view_change:
        return BlockOutcome(vote=vote)

    if gated:
        block = MetaBlock(sc.sidechain_id, epoch, side_round, (), capacity, empty=True)
        sc.append_meta(block)
        sc.stats.blocks += 1
        return BlockOutcome(vote=vote, block=block)

    included: list[Transaction] = []
    rejected: list[Transaction] = []
    used = 0
    full = False
    while sc.mempool:
        tx = sc.mempool[0]
        if used + tx.size_bytes > capacity:
            full = True
            break
        sc.mempool.popleft()
        if not validator.validate(tx, sc.sidechain_id):
            rejected.append(tx)
            continue
        included.append(tx)
        used += tx.size_bytes

    block = MetaBlock(sc.sidechain_id, epoch, side_round, tuple(included), capacity)
    sc.append_meta(block)
    sc.stats.blocks += 1
    sc.stats.full_blocks += int(full)
    sc.stats.confirmed += len(included)
    return BlockOutcome(vote=vote, block=block, rejected=tuple(rejected), full=full)


def prune(sc: SidechainState, epoch: int, main: MainchainState) -> int:
    """Drop an epoch's meta-blocks once its sync is confirmed; returns bytes freed.

    Raises:
        PruneBeforeConfirm: if the epoch is not yet synced on the mainchain
    """
    if not main.is_synced(sc.sidechain_id.module, epoch):
        raise PruneBeforeConfirm(f"{sc.sidechain_id} epoch {epoch} is not confirmed")
    if epoch in sc.pruned_epochs:
        return 0
    freed = sum(block.used_bytes for block in sc.metas if block.epoch == epoch)
    sc.metas = [block for block in sc.metas if block.epoch != epoch]
    sc.pruned_epochs.add(epoch)
    logger.debug("Pruned", sidechain=str(sc.sidechain_id), epoch=epoch, freed=freed)
    return freed


def detect_heavy(stats: EpochStats, backlog_bytes: int, epoch_capacity: int, cap: int) -> int:
    """Sub-sidechains a module should request for the next epoch.

    A module is heavy when every block of the epoch was full and the backlog
    still exceeds one epoch's block capacity.
    """
    all_full = stats.blocks > 0 and stats.full_blocks == stats.blocks
    heavy = all_full and backlog_bytes > epoch_capacity
    if not heavy or epoch_capacity <= 0:
        return 1
    return max(1, min(cap, math.ceil(backlog_bytes / epoch_capacity)))
