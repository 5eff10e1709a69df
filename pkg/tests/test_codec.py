"""Unit tests for transaction and summary-block encodings."""

import pytest

from chainscale.core.codec import (
    decode_summary,
    decode_transaction,
    encode_summary,
    encode_transaction,
)
from chainscale.core.types import (
    MIN_TX_SIZE,
    ChainId,
    SummaryBlock,
    SummaryEntry,
    TxType,
)
from chainscale.errors import InvariantViolation, MalformedEncoding


class TestTransactionCodec:
    """Tests for encode_transaction / decode_transaction."""

    def test_roundtrip_keeps_every_field(self, make_tx):
        tx = make_tx(
            TxType.AGREEMENT,
            contract_id=42,
            issuer=5,
            counterparty=9,
            price=7,
            duration=12,
            created_round=3,
        )
        data = encode_transaction(tx)

        assert len(data) == tx.size_bytes == 716
        assert decode_transaction(data) == tx

    def test_transfer_without_contract(self, make_tx):
        tx = make_tx(TxType.TRANSFER, contract_id=None, amount=55, size=100)
        decoded = decode_transaction(encode_transaction(tx))
        assert decoded.contract_id is None
        assert decoded.prefix == 0x00

    def test_truncated_input(self, make_tx):
        data = encode_transaction(make_tx())
        with pytest.raises(MalformedEncoding):
            decode_transaction(data[: MIN_TX_SIZE - 1])

    def test_prefix_inconsistent_with_type(self, make_tx):
        data = bytearray(encode_transaction(make_tx(TxType.POR)))
        data[0] = 0xC3
        with pytest.raises(MalformedEncoding, match="inconsistent"):
            decode_transaction(bytes(data))

    def test_unknown_type_tag(self, make_tx):
        data = bytearray(encode_transaction(make_tx()))
        data[1] = 0xEE
        with pytest.raises(MalformedEncoding, match="type tag"):
            decode_transaction(bytes(data))

    def test_nonzero_padding(self, make_tx):
        data = bytearray(encode_transaction(make_tx(size=120)))
        data[-1] = 1
        with pytest.raises(MalformedEncoding, match="padding"):
            decode_transaction(bytes(data))

    def test_fixed_size_types_rejected_at_wrong_size(self, make_tx):
        with pytest.raises(InvariantViolation):
            make_tx(TxType.DISPUTE, size=300)


class TestSummaryCodec:
    """Tests for encode_summary / decode_summary."""

    def _summary(self) -> SummaryBlock:
        return SummaryBlock(
            sidechain_id=ChainId(2),
            epoch=4,
            entries=(
                (3, SummaryEntry(por_count=2, payment_total=40)),
                (9, SummaryEntry(dispute_outcome=(77, True))),
                (11, SummaryEntry(match_record=(1, 2, 3, 4))),
            ),
            covered_rounds=(120, 150),
            requested_subchains=2,
        )

    def test_roundtrip(self):
        summary = self._summary()
        data = encode_summary(summary)
        assert len(data) == summary.size_bytes == 24 + 57 * 3
        assert decode_summary(data) == summary

    def test_length_mismatch(self):
        data = encode_summary(self._summary())
        with pytest.raises(MalformedEncoding):
            decode_summary(data[:-1])

    def test_unsorted_entries_rejected(self):
        with pytest.raises(InvariantViolation):
            SummaryBlock(
                ChainId(1), 0, ((5, SummaryEntry()), (2, SummaryEntry())), (0, 1)
            )
