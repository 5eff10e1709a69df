"""Sub-sidechain allocation for heavy modules and their sync committees."""

from __future__ import annotations

import hashlib
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from chainscale.config.logging import get_logger
from chainscale.core.types import Committee, CommitteeRole
from chainscale.election.sortition import apportion
from chainscale.errors import NoCapacity

logger = get_logger(__name__)


@dataclass(frozen=True)
class SubchainRequest:
    """``count`` sub-sidechains, each needing ``quota[c]`` members of class c+1."""

    count: int
    quota: tuple[int, ...]


@dataclass(frozen=True)
class SubchainGrant:
    count: int
    quota: tuple[int, ...]
    scaled: bool = False

    @property
    def members(self) -> tuple[int, ...]:
        return tuple(self.count * q for q in self.quota)


@dataclass
class Allocation:
    grants: dict[str, SubchainGrant] = field(default_factory=dict)
    denied: list[str] = field(default_factory=list)
    remaining: tuple[int, ...] = ()


def allocate_subchains(
    requests: Mapping[str, SubchainRequest],
    available: Sequence[int],
    priority: Sequence[str],
    *,
    min_committee: int = 1,
    strict: bool = True,
) -> Allocation:
    """Grant sub-sidechains module by module in priority order.

    Before serving a module, one sub-sidechain's quota is held back for every
    later module that still asks for one. A module gets the largest count its
    share of the pools covers; if not even one fits, a single committee with
    proportionally scaled quotas is granted when it still seats
    ``min_committee`` members.

    Raises:
        NoCapacity: with ``strict``, when a module cannot be seated at all
    """
    pools = [int(a) for a in available]
    ordered = [key for key in priority if key in requests and requests[key].count > 0]
    allocation = Allocation()
    for position, key in enumerate(ordered):
        request = requests[key]
        reserve = [0] * len(pools)
        for later in ordered[position + 1 :]:
            for c, q in enumerate(requests[later].quota):
                reserve[c] += q
        room = [max(0, pool - held) for pool, held in zip(pools, reserve)]

        needed = [(c, q) for c, q in enumerate(request.quota) if q > 0]
        count = request.count
        for c, q in needed:
            count = min(count, room[c] // q)

        if count >= 1:
            grant = SubchainGrant(count, request.quota)
        else:
            factor = min((room[c] / q for c, q in needed), default=0.0)
            scaled = tuple(math.floor(q * factor) for q in request.quota)
            if sum(scaled) < min_committee:
                if strict:
                    raise NoCapacity(f"module {key}: pools {tuple(pools)} seat no committee")
                allocation.denied.append(key)
                logger.warning("Subchain request denied", module=key, pools=tuple(pools))
                continue
            grant = SubchainGrant(1, scaled, scaled=True)

        for c, used in enumerate(grant.members):
            pools[c] -= used
        allocation.grants[key] = grant

    allocation.remaining = tuple(pools)
    logger.debug(
        "Subchains allocated",
        grants={k: g.count for k, g in allocation.grants.items()},
        remaining=allocation.remaining,
    )
    return allocation


def elect_sync_committee(
    sub_committees: Sequence[Committee], size: int, rng: np.random.Generator
) -> Committee:
    """Sample one committee from the union of sub-committees.

    Class proportions follow the sub-committees' aggregate composition.
    """
    if len(sub_committees) == 1:
        return replace(sub_committees[0], role=CommitteeRole.SYNC, leader=0)

    by_class: dict[int, list[int]] = {}
    for committee in sub_committees:
        classes = committee.classes or (1,) * committee.size
        for member, miner_class in zip(committee.members, classes):
            by_class.setdefault(miner_class, []).append(member)
    ordered = sorted(by_class)
    total = sum(len(by_class[c]) for c in ordered)
    size = min(size, total)
    counts = apportion(size, [len(by_class[c]) / total for c in ordered])

    members: list[int] = []
    classes_out: list[int] = []
    for miner_class, count in zip(ordered, counts):
        picks = rng.choice(len(by_class[miner_class]), size=count, replace=False)
        members.extend(by_class[miner_class][int(i)] for i in picks)
        classes_out.extend([miner_class] * count)
    return Committee(
        sidechain_id=sub_committees[0].sidechain_id.base,
        members=tuple(members),
        leader=0,
        role=CommitteeRole.SYNC,
        classes=tuple(classes_out),
    )


def assign_subchain(contract_id: int, epoch: int, count: int) -> int:
    """Sub-sidechain that serves a contract this epoch."""
    if count <= 1:
        return 0
    digest = hashlib.blake2b(
        contract_id.to_bytes(8, "big") + epoch.to_bytes(8, "big"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big") % count
