"""Service contracts of the storage market."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class ContractState(str, Enum):
    ACTIVE = "active"
    EXPIRED = "expired"
    NEGOTIATING = "negotiating"
    TERMINATED = "terminated"


# Allowed moves; TERMINATED is absorbing.
TRANSITIONS: dict[ContractState, frozenset[ContractState]] = {
    ContractState.ACTIVE: frozenset({ContractState.EXPIRED, ContractState.TERMINATED}),
    ContractState.EXPIRED: frozenset({ContractState.NEGOTIATING}),
    ContractState.NEGOTIATING: frozenset({ContractState.ACTIVE}),
    ContractState.TERMINATED: frozenset(),
}


@dataclass(slots=True)
class ServiceContract:
    """A storage contract between a server and a client.

    ``duration_rounds`` counts the active rounds left including the current
    one; ``elapsed_active`` counts the active rounds served in the current
    term and is what the expiry payment charges for.
    """

    contract_id: int
    server: int
    client: int
    state: ContractState
    duration_rounds: int
    price_per_round: int
    negotiation_remaining: int = 0
    elapsed_active: int = 0
    next_term: int = 0
    dispute_round: int | None = None
    terminate_pending: bool = False

    def move_to(self, state: ContractState) -> None:
        if state not in TRANSITIONS[self.state]:
            raise ValueError(
                f"contract {self.contract_id}: {self.state.value} -> {state.value} not allowed"
            )
        self.state = state

    @property
    def expiring(self) -> bool:
        return self.state is ContractState.ACTIVE and self.duration_rounds == 1
