"""Random and weighted VRF sortition.

Each miner flips a coin biased by ``n_c_all / mu`` (the class quota over the
class size) with its first VRF output; elected miners pick a slot by where
their second VRF output falls in the class's cumulative quota ranges. The
comparisons are exact integer arithmetic over the 256-bit outputs.
"""

from __future__ import annotations

import hashlib
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

from chainscale.config.logging import get_logger
from chainscale.core.types import ChainId, Committee, CommitteeRole
from chainscale.election.scoring import ScoreBoard
from chainscale.election.vrf import OUTPUT_BITS, VrfKeypair, VrfOutput, vrf_verify
from chainscale.errors import QuotaInfeasible

logger = get_logger(__name__)

_SCALE = 1 << OUTPUT_BITS


@dataclass(frozen=True, slots=True, order=True)
class SlotId:
    """A committee seat group: a chain and a rank (0 primary, 1..kappa backups)."""

    chain: ChainId
    rank: int = 0


@dataclass(frozen=True)
class ClassQuota:
    """Per-class member counts for every slot, in fixed slot order.

    ``counts[c - 1][j]`` is the number of class-``c`` miners slot ``j`` needs.
    """

    slots: tuple[SlotId, ...]
    counts: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if any(len(row) != len(self.slots) for row in self.counts):
            raise ValueError("every class row needs one count per slot")
        if any(n < 0 for row in self.counts for n in row):
            raise ValueError("quota counts must be nonnegative")

    @classmethod
    def build(cls, table: Mapping[SlotId, Sequence[int]]) -> ClassQuota:
        slots = tuple(sorted(table))
        classes = len(next(iter(table.values()))) if table else 0
        counts = tuple(tuple(int(table[s][c]) for s in slots) for c in range(classes))
        return cls(slots, counts)

    @property
    def classes(self) -> int:
        return len(self.counts)

    def n(self, miner_class: int, slot: SlotId) -> int:
        return self.counts[miner_class - 1][self.slots.index(slot)]

    def n_all(self, miner_class: int) -> int:
        if miner_class > self.classes:
            return 0
        return sum(self.counts[miner_class - 1])

    def size(self, slot: SlotId) -> int:
        j = self.slots.index(slot)
        return sum(row[j] for row in self.counts)

    def pick(self, miner_class: int, value: int) -> SlotId:
        """Slot whose cumulative sub-range of [0, 1) contains ``value / 2^256``."""
        row = self.counts[miner_class - 1]
        total = sum(row)
        cumulative = 0
        for slot, n in zip(self.slots, row, strict=True):
            cumulative += n
            if n and value * total < cumulative * _SCALE:
                return slot
        raise QuotaInfeasible(f"class {miner_class} has no quota to pick from")


def apportion(total: int, shares: Sequence[float]) -> tuple[int, ...]:
    """Largest-remainder split of ``total`` by ``shares``; ties favour earlier entries."""
    raw = [total * share for share in shares]
    base = [int(x) for x in raw]
    remainder = total - sum(base)
    order = sorted(range(len(shares)), key=lambda i: (-(raw[i] - base[i]), i))
    for i in order[:remainder]:
        base[i] += 1
    return tuple(base)


@dataclass(frozen=True, slots=True)
class ElectionResult:
    pk: bytes
    score: float
    miner_class: int
    rnd1: bytes
    proof1: bytes
    rnd2: bytes | None = None
    proof2: bytes | None = None
    assignment: SlotId | None = None

    @property
    def elected(self) -> bool:
        return self.assignment is not None


def derive_seeds(master_seed: int, epoch: int) -> tuple[bytes, bytes]:
    """Per-epoch sortition seeds, standing in for mainchain randomness."""
    base = master_seed.to_bytes(8, "big") + epoch.to_bytes(8, "big")
    return (
        hashlib.blake2b(b"seed1" + base, digest_size=32).digest(),
        hashlib.blake2b(b"seed2" + base, digest_size=32).digest(),
    )


def _passes_coin(value: int, n_all: int, mu: int) -> bool:
    # value / 2^256 < n_all / mu
    return value * mu < n_all * _SCALE


def elect(
    seed1: bytes,
    seed2: bytes,
    keypair: VrfKeypair,
    index: int,
    board: ScoreBoard,
    quotas: ClassQuota,
) -> ElectionResult:
    """Run the local election for miner ``index``."""
    miner_class = board.class_of(index)
    mu = board.class_size(miner_class)
    n_all = quotas.n_all(miner_class)
    if n_all > mu:
        raise QuotaInfeasible(f"class {miner_class}: quota {n_all} exceeds class size {mu}")

    first = keypair.eval(seed1 + keypair.pk)
    result = ElectionResult(
        pk=keypair.pk,
        score=board.scores[index],
        miner_class=miner_class,
        rnd1=first.output,
        proof1=first.proof,
    )
    if n_all == 0 or not _passes_coin(first.value, n_all, mu):
        return result

    second = keypair.eval(seed2 + keypair.pk)
    return ElectionResult(
        pk=result.pk,
        score=result.score,
        miner_class=miner_class,
        rnd1=result.rnd1,
        proof1=result.proof1,
        rnd2=second.output,
        proof2=second.proof,
        assignment=quotas.pick(miner_class, second.value),
    )


def verify_election(
    result: ElectionResult,
    seed1: bytes,
    seed2: bytes,
    board: ScoreBoard,
    quotas: ClassQuota,
) -> bool:
    """Recheck a published election result against public data."""
    index = board.index_of(result.pk)
    if index is None:
        return False
    miner_class = board.class_of(index)
    if result.miner_class != miner_class or result.score != board.scores[index]:
        return False
    if not vrf_verify(result.pk, seed1 + result.pk, VrfOutput(result.rnd1, result.proof1)):
        return False

    mu = board.class_size(miner_class)
    n_all = quotas.n_all(miner_class)
    if n_all > mu:
        return False
    passed = n_all > 0 and _passes_coin(int.from_bytes(result.rnd1, "big"), n_all, mu)
    if not passed:
        return result.assignment is None and result.rnd2 is None

    if result.assignment is None or result.rnd2 is None or result.proof2 is None:
        return False
    second = VrfOutput(result.rnd2, result.proof2)
    if not vrf_verify(result.pk, seed2 + result.pk, second):
        return False
    return quotas.pick(miner_class, second.value) == result.assignment


@dataclass
class SortitionOutcome:
    results: list[ElectionResult]
    members: dict[SlotId, tuple[int, ...]]
    trimmed: int = 0
    backfilled: int = 0
    classes: dict[int, int] = field(default_factory=dict)

    def committee(self, slot: SlotId, role: CommitteeRole | None = None) -> Committee:
        members = self.members[slot]
        if role is None:
            role = CommitteeRole.PRIMARY if slot.rank == 0 else CommitteeRole.BACKUP
        return Committee(
            sidechain_id=slot.chain,
            members=members,
            leader=0,
            role=role,
            rank=slot.rank,
            classes=tuple(self.classes[m] for m in members),
        )


def run_sortition(
    keypairs: Sequence[VrfKeypair],
    board: ScoreBoard,
    quotas: ClassQuota,
    seed1: bytes,
    seed2: bytes,
) -> SortitionOutcome:
    """Elect every slot and enforce exact committee sizes.

    Sortition meets quotas only in expectation. Within each class, surplus
    members of a slot are released and deficits are backfilled from the
    class's unseated miners, both in ``blake2b(seed1 || pk)`` order. Members
    of each committee are ordered by first VRF output; the first leads.
    """
    results = [
        elect(seed1, seed2, keypair, index, board, quotas)
        for index, keypair in enumerate(keypairs)
    ]

    def tiebreak(index: int) -> bytes:
        return hashlib.blake2b(seed1 + keypairs[index].pk, digest_size=32).digest()

    seated: dict[SlotId, list[int]] = {slot: [] for slot in quotas.slots}
    trimmed = backfilled = 0
    for miner_class in range(1, quotas.classes + 1):
        by_slot: dict[SlotId, list[int]] = {slot: [] for slot in quotas.slots}
        for index in board.members(miner_class):
            slot = results[index].assignment
            if slot is not None:
                by_slot[slot].append(index)

        for slot in quotas.slots:
            want = quotas.n(miner_class, slot)
            chosen = sorted(by_slot[slot], key=tiebreak)
            trimmed += max(0, len(chosen) - want)
            by_slot[slot] = chosen[:want]

        taken = {i for members in by_slot.values() for i in members}
        pool = sorted(
            (i for i in board.members(miner_class) if i not in taken),
            key=tiebreak,
        )
        cursor = 0
        for slot in quotas.slots:
            deficit = quotas.n(miner_class, slot) - len(by_slot[slot])
            if deficit > 0:
                by_slot[slot].extend(pool[cursor : cursor + deficit])
                cursor += deficit
                backfilled += deficit
            seated[slot].extend(by_slot[slot])

    members = {
        slot: tuple(sorted(indices, key=lambda i: results[i].rnd1))
        for slot, indices in seated.items()
    }
    classes = {i: board.class_of(i) for indices in members.values() for i in indices}
    logger.debug(
        "Sortition complete",
        slots=len(quotas.slots),
        elected=sum(1 for r in results if r.elected),
        trimmed=trimmed,
        backfilled=backfilled,
    )
    return SortitionOutcome(results, members, trimmed, backfilled, classes)
