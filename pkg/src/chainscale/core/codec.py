"""Canonical byte encodings for transactions and summary-blocks.

Transaction layout (big-endian)::

    header  prefix:u8 type:u8 id:u64 contract:u64 issuer:u64 amount:u64 flags:u8 round:u32
    body    counterparty:u64 price:u64 duration:u32 ref_id:u64
    padding zero bytes up to size_bytes

Flags: bit 0 = contract present, bit 1 = valid.
"""

from __future__ import annotations

import struct

from chainscale.core.modules import ModuleTable, annotate, default_module_table
from chainscale.core.types import (
    HEADER_SIZE,
    MIN_TX_SIZE,
    SUMMARY_ENTRY_SIZE,
    SUMMARY_HEADER_SIZE,
    TX_TYPE_TAGS,
    TX_TYPES_BY_TAG,
    ChainId,
    SummaryBlock,
    SummaryEntry,
    Transaction,
)
from chainscale.errors import InvariantViolation, MalformedEncoding, RoutingError

_HEADER = struct.Struct(">BBQQQQBI")
_BODY = struct.Struct(">QQIQ")
_SUMMARY_HEADER = struct.Struct(">HHIIIII")
_SUMMARY_ENTRY = struct.Struct(">QIQBQQQQI")

FLAG_HAS_CONTRACT = 0x01
FLAG_VALID = 0x02

assert _HEADER.size == HEADER_SIZE
assert _HEADER.size + _BODY.size == MIN_TX_SIZE
assert _SUMMARY_HEADER.size == SUMMARY_HEADER_SIZE
assert _SUMMARY_ENTRY.size == SUMMARY_ENTRY_SIZE


def encode_transaction(tx: Transaction) -> bytes:
    flags = (FLAG_HAS_CONTRACT if tx.contract_id is not None else 0) | (
        FLAG_VALID if tx.valid else 0
    )
    head = _HEADER.pack(
        tx.prefix,
        TX_TYPE_TAGS[tx.tx_type],
        tx.id,
        tx.contract_id or 0,
        tx.issuer,
        tx.amount,
        flags,
        tx.created_round,
    )
    body = _BODY.pack(tx.counterparty, tx.price, tx.duration, tx.ref_id)
    return head + body + bytes(tx.size_bytes - MIN_TX_SIZE)


def decode_transaction(data: bytes, table: ModuleTable | None = None) -> Transaction:
    """Inverse of :func:`encode_transaction`.

    Raises:
        MalformedEncoding: on truncated input, unknown tags or flags, non-zero
            padding, or a prefix that disagrees with the type under ``table``.
    """
    if len(data) < MIN_TX_SIZE:
        raise MalformedEncoding(f"need at least {MIN_TX_SIZE} bytes, got {len(data)}")

    prefix, tag, tx_id, contract, issuer, amount, flags, created = _HEADER.unpack_from(data, 0)
    counterparty, price, duration, ref_id = _BODY.unpack_from(data, HEADER_SIZE)

    tx_type = TX_TYPES_BY_TAG.get(tag)
    if tx_type is None:
        raise MalformedEncoding(f"unknown type tag {tag}")
    if flags & ~(FLAG_HAS_CONTRACT | FLAG_VALID):
        raise MalformedEncoding(f"unknown flag bits 0x{flags:02X}")
    if not flags & FLAG_HAS_CONTRACT and contract != 0:
        raise MalformedEncoding("contract id set without the contract flag")
    if any(data[MIN_TX_SIZE:]):
        raise MalformedEncoding("non-zero padding")

    try:
        expected = annotate(tx_type, table or default_module_table())
    except RoutingError as exc:
        raise MalformedEncoding(str(exc)) from exc
    if prefix != expected:
        raise MalformedEncoding(
            f"prefix 0x{prefix:02X} inconsistent with {tx_type.value} (expected 0x{expected:02X})"
        )

    try:
        return Transaction(
            id=tx_id,
            prefix=prefix,
            tx_type=tx_type,
            contract_id=contract if flags & FLAG_HAS_CONTRACT else None,
            issuer=issuer,
            amount=amount,
            valid=bool(flags & FLAG_VALID),
            size_bytes=len(data),
            created_round=created,
            counterparty=counterparty,
            price=price,
            duration=duration,
            ref_id=ref_id,
        )
    except InvariantViolation as exc:
        raise MalformedEncoding(str(exc)) from exc


def encode_summary(summary: SummaryBlock) -> bytes:
    """Byte-exact form used to compare recomputed summaries."""
    start, stop = summary.covered_rounds
    parts = [
        _SUMMARY_HEADER.pack(
            summary.sidechain_id.module,
            summary.sidechain_id.sub,
            summary.epoch,
            start,
            stop,
            summary.requested_subchains,
            len(summary.entries),
        )
    ]
    for cid, entry in summary.entries:
        parts.append(_encode_entry(cid, entry))
    return b"".join(parts)


def decode_summary(data: bytes) -> SummaryBlock:
    if len(data) < SUMMARY_HEADER_SIZE:
        raise MalformedEncoding("summary header truncated")
    module, sub, epoch, start, stop, requested, count = _SUMMARY_HEADER.unpack_from(data, 0)
    if len(data) != SUMMARY_HEADER_SIZE + count * SUMMARY_ENTRY_SIZE:
        raise MalformedEncoding(f"summary length {len(data)} does not match {count} entries")

    entries: list[tuple[int, SummaryEntry]] = []
    offset = SUMMARY_HEADER_SIZE
    for _ in range(count):
        cid, por, paid, flags, ref, server, client, price, duration = (
            _SUMMARY_ENTRY.unpack_from(data, offset)
        )
        offset += SUMMARY_ENTRY_SIZE
        entries.append(
            (
                cid,
                SummaryEntry(
                    por_count=por,
                    payment_total=paid,
                    dispute_outcome=(ref, bool(flags & 0x02)) if flags & 0x01 else None,
                    match_record=(server, client, price, duration) if flags & 0x04 else None,
                ),
            )
        )
    try:
        return SummaryBlock(
            sidechain_id=ChainId(module, sub),
            epoch=epoch,
            entries=tuple(entries),
            covered_rounds=(start, stop),
            requested_subchains=requested,
        )
    except InvariantViolation as exc:
        raise MalformedEncoding(str(exc)) from exc


def _encode_entry(cid: int, entry: SummaryEntry) -> bytes:
    flags = 0
    ref = 0
    if entry.dispute_outcome is not None:
        ref, penalize = entry.dispute_outcome
        flags |= 0x01 | (0x02 if penalize else 0)
    server = client = price = duration = 0
    if entry.match_record is not None:
        server, client, price, duration = entry.match_record
        flags |= 0x04
    return _SUMMARY_ENTRY.pack(
        cid, entry.por_count, entry.payment_total, flags, ref, server, client, price, duration
    )
