"""Unit tests for summary-blocks and sync-transactions."""

import random
from dataclasses import replace

import pytest

from chainscale.chains.state import SidechainState
from chainscale.chains.summary import (
    SyncSizing,
    create_sync_tx,
    produce_summary_block,
    verify_sync_tx,
)
from chainscale.core.types import ChainId, MetaBlock, SummaryBlock, SummaryEntry, TxType
from chainscale.errors import InvariantViolation, MissingMetaBlocks

PAYMENTS = ChainId(2)


def _meta(chain_id, epoch, round_index, txs):
    return MetaBlock(chain_id, epoch, round_index, tuple(txs), capacity_bytes=100_000)


class TestProduceSummaryBlock:
    """Tests for folding meta-blocks into per-contract entries."""

    def test_counts_and_totals(self, make_tx):
        metas = [
            _meta(PAYMENTS, 0, 0, [make_tx(contract_id=3), make_tx(contract_id=1)]),
            _meta(
                PAYMENTS,
                0,
                1,
                [
                    make_tx(contract_id=3),
                    make_tx(TxType.PAYMENT, contract_id=3, amount=40),
                    make_tx(TxType.PAYMENT, contract_id=3, amount=2),
                ],
            ),
        ]
        summary = produce_summary_block(PAYMENTS, 0, metas)

        assert [cid for cid, _ in summary.entries] == [1, 3]
        assert summary.entry(3) == SummaryEntry(por_count=2, payment_total=42)
        assert summary.entry(1) == SummaryEntry(por_count=1)
        assert summary.covered_rounds == (0, 2)
        assert summary.size_bytes == 24 + 57 * 2

    def test_dispute_and_match_records(self, make_tx):
        dispute = make_tx(TxType.DISPUTE, contract_id=5, ref_id=99, valid=True)
        agreement = make_tx(
            TxType.AGREEMENT, contract_id=6, issuer=10, counterparty=11, price=3, duration=12
        )
        summary = produce_summary_block(ChainId(3), 2, [_meta(ChainId(3), 2, 0, [dispute])])
        assert summary.entry(5).dispute_outcome == (99, True)

        summary = produce_summary_block(ChainId(1), 2, [_meta(ChainId(1), 2, 0, [agreement])])
        assert summary.entry(6).match_record == (10, 11, 3, 12)

    def test_negotiation_messages_leave_no_entry(self, make_tx):
        metas = [_meta(ChainId(1), 0, 0, [make_tx(TxType.ASK), make_tx(TxType.OFFER)])]
        assert produce_summary_block(ChainId(1), 0, metas).entries == ()

    def test_other_epochs_ignored(self, make_tx):
        metas = [
            _meta(PAYMENTS, 0, 0, [make_tx(contract_id=1)]),
            _meta(PAYMENTS, 1, 3, [make_tx(contract_id=2)]),
        ]
        summary = produce_summary_block(PAYMENTS, 1, metas)
        assert [cid for cid, _ in summary.entries] == [2]
        assert summary.covered_rounds == (3, 4)

    def test_empty_epoch(self):
        summary = produce_summary_block(PAYMENTS, 4, [])
        assert summary.entries == ()
        assert summary.covered_rounds == (0, 0)
        assert summary.size_bytes == 24

    def test_sub_sidechains_fold_into_base(self, make_tx):
        metas = [
            _meta(ChainId(2, sub), 0, round_index, [make_tx(contract_id=cid)])
            for round_index in range(3)
            for sub, cid in enumerate((4, 5, 4))
        ]
        summary = produce_summary_block(ChainId(2, 1), 0, metas, requested_subchains=3)
        assert summary.sidechain_id == PAYMENTS
        assert summary.entry(4).por_count == 6
        assert summary.entry(5).por_count == 3
        assert summary.requested_subchains == 3

    def test_independent_of_block_order(self, make_tx):
        metas = [
            _meta(
                ChainId(2, round_index % 2),
                0,
                round_index,
                [make_tx(TxType.PAYMENT, contract_id=round_index % 3, amount=round_index)],
            )
            for round_index in range(8)
        ]
        expected = produce_summary_block(PAYMENTS, 0, metas)
        shuffled = list(metas)
        random.Random(5).shuffle(shuffled)
        assert produce_summary_block(PAYMENTS, 0, shuffled) == expected

    def test_unsorted_entries_rejected(self):
        with pytest.raises(InvariantViolation, match="sorted"):
            SummaryBlock(PAYMENTS, 0, ((2, SummaryEntry()), (1, SummaryEntry())))


class TestSyncTransaction:
    """Tests for create_sync_tx and sync sizing."""

    def test_size_grows_with_entries(self, make_tx):
        summary = produce_summary_block(
            PAYMENTS, 0, [_meta(PAYMENTS, 0, 0, [make_tx(contract_id=1), make_tx(contract_id=2)])]
        )
        assert SyncSizing(base=1000, per_entry=10).size([summary]) == 1020

    def test_mass_sync_sorted_by_epoch(self):
        later = produce_summary_block(ChainId(2, 1), 3, [])
        earlier = produce_summary_block(PAYMENTS, 1, [])
        sync = create_sync_tx([later, earlier], tx_id=9, issuer=4, created_round=12)
        assert sync.epochs == (1, 3)
        assert sync.epoch == 3
        assert sync.sidechain_id == PAYMENTS
        assert sync.size_bytes == SyncSizing().base

    def test_duplicate_epochs_rejected(self):
        summary = produce_summary_block(PAYMENTS, 1, [])
        with pytest.raises(InvariantViolation, match="ascending"):
            create_sync_tx([summary, summary], tx_id=1, issuer=0, created_round=0)


class TestVerifySyncTx:
    """Tests for checking a sync against the module's ledgers."""

    def _ledger(self, make_tx):
        ledger = SidechainState(PAYMENTS)
        ledger.append_meta(_meta(PAYMENTS, 0, 0, [make_tx(contract_id=1)]))
        ledger.append_meta(
            _meta(PAYMENTS, 0, 1, [make_tx(TxType.PAYMENT, contract_id=1, amount=5)])
        )
        return ledger

    def test_honest_sync_verifies(self, make_tx):
        ledger = self._ledger(make_tx)
        summary = produce_summary_block(PAYMENTS, 0, ledger.metas)
        sync = create_sync_tx([summary], tx_id=1, issuer=0, created_round=2)
        assert verify_sync_tx([ledger], sync)

    def test_inflated_payment_rejected(self, make_tx):
        ledger = self._ledger(make_tx)
        summary = produce_summary_block(PAYMENTS, 0, ledger.metas)
        forged = replace(summary, entries=((1, SummaryEntry(por_count=1, payment_total=50)),))
        sync = create_sync_tx([forged], tx_id=1, issuer=0, created_round=2)
        assert not verify_sync_tx([ledger], sync)

    def test_pruned_epoch_checked_against_stored_summary(self, make_tx):
        ledger = self._ledger(make_tx)
        summary = produce_summary_block(PAYMENTS, 0, ledger.metas)
        ledger.summaries[0] = summary
        ledger.metas = []
        ledger.pruned_epochs.add(0)
        sync = create_sync_tx([summary], tx_id=2, issuer=0, created_round=9)
        assert verify_sync_tx([ledger], sync)

    def test_pruned_epoch_without_summary(self, make_tx):
        ledger = self._ledger(make_tx)
        summary = produce_summary_block(PAYMENTS, 0, ledger.metas)
        ledger.metas = []
        ledger.pruned_epochs.add(0)
        sync = create_sync_tx([summary], tx_id=2, issuer=0, created_round=9)
        with pytest.raises(MissingMetaBlocks):
            verify_sync_tx([ledger], sync)
