"""Shared data model: transactions, blocks, summaries, miners and committees."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

from chainscale.errors import InvariantViolation

# Canonical encoding: 39-byte header + 28-byte body, zero padded to size_bytes.
HEADER_SIZE = 39
BODY_SIZE = 28
MIN_TX_SIZE = HEADER_SIZE + BODY_SIZE

DISPUTE_SIZE = 515
AGREEMENT_SIZE = 716

SUMMARY_HEADER_SIZE = 24
SUMMARY_ENTRY_SIZE = 57


class TxType(str, Enum):
    """Market event types."""

    ASK = "ask"
    OFFER = "offer"
    AGREEMENT = "agreement"
    POR = "por"
    PAYMENT = "payment"
    DISPUTE = "dispute"
    TRANSFER = "transfer"
    SYNC = "sync"
    ESCROW_CREATE = "escrow_create"


# Wire tags are part of the byte layout; never renumber.
TX_TYPE_TAGS: dict[TxType, int] = {
    TxType.ASK: 1,
    TxType.OFFER: 2,
    TxType.AGREEMENT: 3,
    TxType.POR: 4,
    TxType.PAYMENT: 5,
    TxType.DISPUTE: 6,
    TxType.TRANSFER: 7,
    TxType.SYNC: 8,
    TxType.ESCROW_CREATE: 9,
}
TX_TYPES_BY_TAG: dict[int, TxType] = {tag: tx_type for tx_type, tag in TX_TYPE_TAGS.items()}

SERVICE_TYPES: frozenset[TxType] = frozenset(
    {TxType.ASK, TxType.OFFER, TxType.AGREEMENT, TxType.POR, TxType.PAYMENT, TxType.DISPUTE}
)
MAINCHAIN_TYPES: frozenset[TxType] = frozenset(
    {TxType.TRANSFER, TxType.SYNC, TxType.ESCROW_CREATE}
)
FIXED_SIZES: dict[TxType, int] = {
    TxType.DISPUTE: DISPUTE_SIZE,
    TxType.AGREEMENT: AGREEMENT_SIZE,
}


@dataclass(frozen=True, slots=True)
class Transaction:
    """A typed market event.

    ``valid`` stands in for the cryptographic validity of a proof. For a
    dispute, ``ref_id`` names the disputed proof and ``valid`` is the
    outcome (True means the server is penalized). Agreements carry the new
    terms in ``price`` and ``duration``.
    """

    id: int
    prefix: int
    tx_type: TxType
    contract_id: int | None
    issuer: int
    amount: int
    valid: bool
    size_bytes: int
    created_round: int
    counterparty: int = 0
    price: int = 0
    duration: int = 0
    ref_id: int = 0

    def __post_init__(self) -> None:
        if self.size_bytes < MIN_TX_SIZE:
            raise InvariantViolation(
                f"tx {self.id}: size_bytes {self.size_bytes} below encodable minimum {MIN_TX_SIZE}"
            )
        fixed = FIXED_SIZES.get(self.tx_type)
        if fixed is not None and self.size_bytes != fixed:
            raise InvariantViolation(
                f"tx {self.id}: {self.tx_type.value} must be {fixed} bytes, got {self.size_bytes}"
            )
        if self.amount < 0:
            raise InvariantViolation(f"tx {self.id}: negative amount {self.amount}")
        if not 0 <= self.prefix <= 0xFF:
            raise InvariantViolation(f"tx {self.id}: prefix {self.prefix} is not one byte")

    def with_prefix(self, prefix: int) -> Transaction:
        return replace(self, prefix=prefix)


@dataclass(frozen=True, slots=True, order=True)
class ChainId:
    """A module sidechain, optionally one of its sub-sidechains."""

    module: int
    sub: int = 0

    @property
    def base(self) -> ChainId:
        return ChainId(self.module, 0)

    def __str__(self) -> str:
        return f"side-{self.module}.{self.sub}"


MAINCHAIN_ID = "main"


@dataclass(frozen=True, slots=True)
class MetaBlock:
    """Temporary sidechain block; pruned once its epoch is synced."""

    sidechain_id: ChainId
    epoch: int
    round: int
    txs: tuple[Transaction, ...]
    capacity_bytes: int
    empty: bool = False

    def __post_init__(self) -> None:
        if self.used_bytes > self.capacity_bytes:
            raise InvariantViolation(
                f"{self.sidechain_id} round {self.round}: "
                f"{self.used_bytes} bytes exceed capacity {self.capacity_bytes}"
            )
        if self.empty and self.txs:
            raise InvariantViolation(f"{self.sidechain_id}: empty marker block carries txs")

    @property
    def used_bytes(self) -> int:
        return sum(tx.size_bytes for tx in self.txs)


@dataclass(frozen=True, slots=True)
class SummaryEntry:
    """Per-contract state delta for one epoch."""

    por_count: int = 0
    payment_total: int = 0
    dispute_outcome: tuple[int, bool] | None = None
    match_record: tuple[int, int, int, int] | None = None  # server, client, price, duration


@dataclass(frozen=True, slots=True)
class SummaryBlock:
    """Permanent per-epoch aggregate of a module's meta-blocks."""

    sidechain_id: ChainId
    epoch: int
    entries: tuple[tuple[int, SummaryEntry], ...]
    covered_rounds: tuple[int, int] = (0, 0)
    requested_subchains: int = 1

    def __post_init__(self) -> None:
        cids = [cid for cid, _ in self.entries]
        if cids != sorted(set(cids)):
            raise InvariantViolation(f"{self.sidechain_id}: summary entries not sorted by cid")

    @property
    def covered_meta_rounds(self) -> range:
        return range(*self.covered_rounds)

    @property
    def size_bytes(self) -> int:
        return SUMMARY_HEADER_SIZE + SUMMARY_ENTRY_SIZE * len(self.entries)

    def entry(self, contract_id: int) -> SummaryEntry | None:
        for cid, entry in self.entries:
            if cid == contract_id:
                return entry
        return None

    def as_dict(self) -> dict[int, SummaryEntry]:
        return dict(self.entries)


@dataclass(frozen=True, slots=True)
class SyncTransaction:
    """Mainchain carrier for one or more epoch summaries of one module.

    An ordinary sync covers a single epoch; a mass-sync covers every unsynced
    epoch in ascending order.
    """

    id: int
    sidechain_id: ChainId
    summaries: tuple[SummaryBlock, ...]
    issuer: int
    size_bytes: int
    created_round: int

    def __post_init__(self) -> None:
        epochs = self.epochs
        if not epochs or list(epochs) != sorted(set(epochs)):
            raise InvariantViolation(f"sync {self.id}: epochs must be non-empty and ascending")

    @property
    def epoch(self) -> int:
        return self.summaries[-1].epoch

    @property
    def epochs(self) -> tuple[int, ...]:
        return tuple(summary.epoch for summary in self.summaries)

    @property
    def requested_subchains(self) -> int:
        return self.summaries[-1].requested_subchains


@dataclass(frozen=True, slots=True)
class MainBlock:
    """One mainchain block: sync-transactions first, then ordinary transactions."""

    round: int
    txs: tuple[Transaction, ...]
    syncs: tuple[SyncTransaction, ...]
    capacity_bytes: int
    header_bytes: int = 80

    def __post_init__(self) -> None:
        # A sync larger than a whole block travels alone in an oversize block.
        lone_sync = len(self.syncs) == 1 and not self.txs
        if self.payload_bytes > self.capacity_bytes and not lone_sync:
            raise InvariantViolation(
                f"main round {self.round}: payload {self.payload_bytes} "
                f"exceeds capacity {self.capacity_bytes}"
            )

    @property
    def payload_bytes(self) -> int:
        return sum(tx.size_bytes for tx in self.txs) + sum(s.size_bytes for s in self.syncs)

    @property
    def size_bytes(self) -> int:
        return self.header_bytes + self.payload_bytes


class Behavior(str, Enum):
    HONEST = "honest"
    LAZY = "lazy"
    MALICIOUS = "malicious"


@dataclass(slots=True)
class MinerRecord:
    """Miner identity, score components and derived class.

    ``score`` and ``miner_class`` are refreshed at every epoch boundary from
    the other fields.
    """

    index: int
    pk: bytes
    mining_power: float
    participation: int = 0
    disputes: int = 0
    behavior: Behavior = Behavior.HONEST
    score: float = 0.0
    miner_class: int = 1


class CommitteeRole(str, Enum):
    PRIMARY = "primary"
    BACKUP = "backup"
    SYNC = "sync"


@dataclass(frozen=True, slots=True)
class Committee:
    """An ordered committee of miner indices with a designated leader."""

    sidechain_id: ChainId
    members: tuple[int, ...]
    leader: int = 0
    role: CommitteeRole = CommitteeRole.PRIMARY
    rank: int = 0
    classes: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.members:
            raise InvariantViolation(f"{self.sidechain_id}: committee has no members")
        if len(set(self.members)) != len(self.members):
            raise InvariantViolation(f"{self.sidechain_id}: duplicate committee members")
        if not 0 <= self.leader < len(self.members):
            raise InvariantViolation(
                f"{self.sidechain_id}: leader index {self.leader} out of range"
            )

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def f(self) -> int:
        """Tolerated faults for a committee of size 3f+2."""
        return max(0, (self.size - 2) // 3)

    @property
    def leader_miner(self) -> int:
        return self.members[self.leader]

    def with_leader(self, leader: int) -> Committee:
        return replace(self, leader=leader % self.size)
