"""Committee voting for one sidechain round."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

from chainscale.config.scenario import MaliciousStrategy
from chainscale.core.types import Behavior, Committee
from chainscale.errors import ConsensusFailure


@dataclass(frozen=True, slots=True)
class VoteOutcome:
    votes: int
    required: int
    voters: tuple[int, ...]
    absent: tuple[int, ...]
    view_change: bool = False

    @property
    def produced(self) -> bool:
        return not self.view_change


@dataclass(frozen=True)
class Pbft:
    """Vote model: a block needs ``size - theta_l + 1`` votes.

    Lazy members never vote. Malicious members withhold votes (or propose
    invalid blocks, which honest members refuse) whenever their strategy is
    active; under the worst-case strategy that is only the last sidechain
    round of the epoch.
    """

    behaviors: Sequence[Behavior]
    theta_l: int
    strategy: MaliciousStrategy
    rounds_per_epoch: int

    def misbehaving(self, miner: int, round_in_epoch: int) -> bool:
        behavior = self.behaviors[miner]
        if behavior is Behavior.LAZY:
            return True
        if behavior is Behavior.MALICIOUS:
            if self.strategy is MaliciousStrategy.INVALID_LAST_ROUND:
                return round_in_epoch == self.rounds_per_epoch - 1
            return True
        return False

    def required(self, committee: Committee) -> int:
        return committee.size - self.theta_l + 1

    def vote(
        self, committee: Committee, round_in_epoch: int, *, forced_failure: bool = False
    ) -> VoteOutcome:
        """Run one round of voting.

        Raises:
            ConsensusFailure: if ``theta_l`` or more members are absent, or
                the failure is scripted
        """
        absent = tuple(m for m in committee.members if self.misbehaving(m, round_in_epoch))
        absent_set = set(absent)
        voters = tuple(m for m in committee.members if m not in absent_set)
        required = self.required(committee)
        if forced_failure or len(absent) >= self.theta_l:
            raise ConsensusFailure(str(committee.sidechain_id), len(voters), required)
        leader_absent = self.misbehaving(committee.leader_miner, round_in_epoch)
        return VoteOutcome(
            votes=len(voters),
            required=required,
            voters=voters,
            absent=absent,
            view_change=leader_absent,
        )
