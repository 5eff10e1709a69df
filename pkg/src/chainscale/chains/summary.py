"""Summary-blocks and the sync-transactions that carry them to the mainchain."""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, replace

from chainscale.chains.state import SidechainState
from chainscale.config.logging import get_logger
from chainscale.core.codec import encode_summary
from chainscale.core.types import (
    ChainId,
    MetaBlock,
    SummaryBlock,
    SummaryEntry,
    SyncTransaction,
    Transaction,
    TxType,
)
from chainscale.errors import MissingMetaBlocks

logger = get_logger(__name__)

SummaryRule = Callable[[SummaryEntry, Transaction], SummaryEntry]


def _count_por(entry: SummaryEntry, tx: Transaction) -> SummaryEntry:
    return replace(entry, por_count=entry.por_count + 1)


def _add_payment(entry: SummaryEntry, tx: Transaction) -> SummaryEntry:
    return replace(entry, payment_total=entry.payment_total + tx.amount)


def _record_dispute(entry: SummaryEntry, tx: Transaction) -> SummaryEntry:
    return replace(entry, dispute_outcome=(tx.ref_id, tx.valid))


def _record_match(entry: SummaryEntry, tx: Transaction) -> SummaryEntry:
    return replace(entry, match_record=(tx.issuer, tx.counterparty, tx.price, tx.duration))


# Asks and offers leave no trace in the summary; only the agreement does.
SUMMARY_RULES: dict[TxType, SummaryRule] = {
    TxType.POR: _count_por,
    TxType.PAYMENT: _add_payment,
    TxType.DISPUTE: _record_dispute,
    TxType.AGREEMENT: _record_match,
}


def produce_summary_block(
    sidechain_id: ChainId,
    epoch: int,
    metas: Sequence[MetaBlock],
    requested_subchains: int = 1,
    rules: dict[TxType, SummaryRule] | None = None,
) -> SummaryBlock:
    """Aggregate one epoch's meta-blocks into per-contract entries.

    Meta-blocks from several sub-sidechains are folded in (round, sub) order
    so the result does not depend on how the caller gathered them.
    """
    rules = SUMMARY_RULES if rules is None else rules
    ordered = sorted(
        (block for block in metas if block.epoch == epoch),
        key=lambda block: (block.round, block.sidechain_id.sub),
    )
    entries: dict[int, SummaryEntry] = {}
    for block in ordered:
        for tx in block.txs:
            rule = rules.get(tx.tx_type)
            if rule is None or tx.contract_id is None:
                continue
            entries[tx.contract_id] = rule(entries.get(tx.contract_id, SummaryEntry()), tx)

    covered = (ordered[0].round, ordered[-1].round + 1) if ordered else (0, 0)
    return SummaryBlock(
        sidechain_id=sidechain_id.base,
        epoch=epoch,
        entries=tuple(sorted(entries.items())),
        covered_rounds=covered,
        requested_subchains=requested_subchains,
    )


@dataclass(frozen=True)
class SyncSizing:
    base: int = 1024
    per_entry: int = 32

    def size(self, summaries: Sequence[SummaryBlock]) -> int:
        return self.base + self.per_entry * sum(len(s.entries) for s in summaries)


def create_sync_tx(
    summaries: Sequence[SummaryBlock],
    *,
    tx_id: int,
    issuer: int,
    created_round: int,
    sizing: SyncSizing | None = None,
) -> SyncTransaction:
    """Wrap one summary (or several, for a mass-sync) for the mainchain."""
    sizing = sizing or SyncSizing()
    ordered = tuple(sorted(summaries, key=lambda s: s.epoch))
    return SyncTransaction(
        id=tx_id,
        sidechain_id=ordered[0].sidechain_id.base,
        summaries=ordered,
        issuer=issuer,
        size_bytes=sizing.size(ordered),
        created_round=created_round,
    )


def _stored_summary(ledgers: Sequence[SidechainState], epoch: int) -> SummaryBlock | None:
    for ledger in ledgers:
        if epoch in ledger.summaries:
            return ledger.summaries[epoch]
    return None


def _metas_available(ledgers: Sequence[SidechainState], epoch: int) -> bool:
    return not any(epoch in ledger.pruned_epochs for ledger in ledgers)


def verify_sync_tx(ledgers: Sequence[SidechainState], sync: SyncTransaction) -> bool:
    """Check every summary in ``sync`` against the module's ledgers.

    Summaries are recomputed from meta-blocks when they are still held;
    otherwise the stored permanent summary-block is compared byte for byte.

    Raises:
        MissingMetaBlocks: if an epoch has neither meta-blocks nor a stored summary
    """
    for claimed in sync.summaries:
        if _metas_available(ledgers, claimed.epoch):
            metas = [m for ledger in ledgers for m in ledger.metas_for(claimed.epoch)]
            expected = produce_summary_block(
                claimed.sidechain_id, claimed.epoch, metas, claimed.requested_subchains
            )
        else:
            stored = _stored_summary(ledgers, claimed.epoch)
            if stored is None:
                raise MissingMetaBlocks(
                    f"{claimed.sidechain_id} epoch {claimed.epoch}: no meta-blocks and no summary"
                )
            expected = stored
        if encode_summary(expected) != encode_summary(claimed):
            logger.warning(
                "Sync rejected",
                sidechain=str(sync.sidechain_id),
                epoch=claimed.epoch,
                sync_id=sync.id,
            )
            return False
    return True
