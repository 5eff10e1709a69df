"""Storage-market workload generator.

The stream depends only on the scenario seed and market parameters, never on
chain state, so every system under comparison consumes the same transactions.
All transactions of a mainchain round are created at its start.
"""

from __future__ import annotations

import math
from collections.abc import Iterator
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from chainscale.config.logging import get_logger
from chainscale.config.scenario import ScenarioConfig
from chainscale.core.modules import ModuleTable, annotate, default_module_table
from chainscale.core.types import Transaction, TxType
from chainscale.market.contracts import ContractState, ServiceContract

logger = get_logger(__name__)

SERVICE_COUNTED = frozenset(
    {TxType.ASK, TxType.OFFER, TxType.AGREEMENT, TxType.POR, TxType.PAYMENT, TxType.DISPUTE}
)


@dataclass(frozen=True)
class GenesisAllocation:
    balances: dict[int, int]
    escrows: dict[int, int]
    contracts: frozenset[int]
    servers: dict[int, int]


class TrafficGenerator:
    """Owns the contract set and the traffic rng for one run."""

    def __init__(
        self,
        config: ScenarioConfig,
        rng: np.random.Generator,
        table: ModuleTable | None = None,
    ) -> None:
        self.config = config
        self.rng = rng
        self.table = table or default_module_table()
        self._next_id = 1
        self._prefixes = {
            tx_type: annotate(tx_type, self.table) for tx_type in TxType if tx_type != TxType.SYNC
        }
        self._sizes = {tx_type: config.tx_size(tx_type) for tx_type in self._prefixes}
        self.num_servers = max(1, config.contracts // 8)
        self.num_parties = self.num_servers + config.contracts
        share = Fraction(str(config.transfer_share))
        self._transfer_ratio = share / (1 - share)
        self.contracts: list[ServiceContract] = [
            self._new_contract(cid) for cid in range(config.contracts)
        ]
        self._initial_escrows = {
            c.contract_id: c.price_per_round * c.duration_rounds for c in self.contracts
        }

    def _new_contract(self, cid: int) -> ServiceContract:
        cfg = self.config
        term = int(self.rng.integers(cfg.term_min, cfg.term_max + 1))
        return ServiceContract(
            contract_id=cid,
            server=int(self.rng.integers(0, self.num_servers)),
            client=self.num_servers + cid,
            state=ContractState.ACTIVE,
            duration_rounds=int(self.rng.integers(1, term + 1)),
            price_per_round=int(self.rng.integers(cfg.price_min, cfg.price_max + 1)),
        )

    def genesis(self) -> GenesisAllocation:
        """Balances for every party and escrows funding the initial terms."""
        return GenesisAllocation(
            balances={party: self.config.initial_balance for party in range(self.num_parties)},
            escrows=dict(self._initial_escrows),
            contracts=frozenset(c.contract_id for c in self.contracts),
            servers={c.contract_id: c.server for c in self.contracts},
        )

    def gen_round_traffic(self, round_index: int) -> list[Transaction]:
        """Transactions created at the start of mainchain round ``round_index``."""
        if round_index % self.config.epoch_length == 0:
            self._schedule_disputes(round_index)

        txs: list[Transaction] = []
        for contract in self.contracts:
            if contract.state is ContractState.ACTIVE:
                self._active_traffic(contract, round_index, txs)
            elif contract.state is ContractState.NEGOTIATING:
                self._negotiation_traffic(contract, round_index, txs)

        service = sum(1 for tx in txs if tx.tx_type in SERVICE_COUNTED)
        for _ in range(math.ceil(service * self._transfer_ratio)):
            txs.append(self._transfer(round_index))

        logger.debug("Traffic generated", round=round_index, txs=len(txs), service=service)
        return txs

    def advance_contracts(self, round_index: int) -> None:
        """Move every contract one mainchain round forward."""
        cfg = self.config
        for contract in self.contracts:
            if contract.state is ContractState.ACTIVE:
                if contract.terminate_pending:
                    contract.move_to(ContractState.TERMINATED)
                elif contract.duration_rounds == 1:
                    contract.move_to(ContractState.EXPIRED)
                    contract.move_to(ContractState.NEGOTIATING)
                    contract.duration_rounds = 0
                    contract.elapsed_active = 0
                    contract.negotiation_remaining = self._negotiation_length()
                    contract.next_term = int(self.rng.integers(cfg.term_min, cfg.term_max + 1))
                else:
                    contract.duration_rounds -= 1
            elif contract.state is ContractState.NEGOTIATING:
                if contract.negotiation_remaining == 1:
                    contract.move_to(ContractState.ACTIVE)
                    contract.negotiation_remaining = 0
                    contract.duration_rounds = contract.next_term
                else:
                    contract.negotiation_remaining -= 1

    def step(self, round_index: int) -> list[Transaction]:
        txs = self.gen_round_traffic(round_index)
        self.advance_contracts(round_index)
        return txs

    def stream(self, rounds: int) -> Iterator[list[Transaction]]:
        for round_index in range(rounds):
            yield self.step(round_index)

    # Internals

    def _active_traffic(
        self, contract: ServiceContract, round_index: int, txs: list[Transaction]
    ) -> None:
        disputed = contract.dispute_round == round_index
        por = self._tx(
            TxType.POR,
            round_index,
            contract_id=contract.contract_id,
            issuer=contract.server,
            counterparty=contract.client,
            valid=not disputed,
        )
        txs.append(por)
        contract.elapsed_active += 1

        if disputed:
            contract.dispute_round = None
            contract.terminate_pending = True
            txs.append(
                self._tx(
                    TxType.DISPUTE,
                    round_index,
                    contract_id=contract.contract_id,
                    issuer=contract.client,
                    counterparty=contract.server,
                    ref_id=por.id,
                    valid=True,
                )
            )
        elif contract.duration_rounds == 1:
            txs.append(
                self._tx(
                    TxType.PAYMENT,
                    round_index,
                    contract_id=contract.contract_id,
                    issuer=contract.client,
                    counterparty=contract.server,
                    amount=contract.price_per_round * contract.elapsed_active,
                )
            )

    def _negotiation_traffic(
        self, contract: ServiceContract, round_index: int, txs: list[Transaction]
    ) -> None:
        for k in range(self.config.negotiation_messages):
            is_ask = k % 2 == 0
            txs.append(
                self._tx(
                    TxType.ASK if is_ask else TxType.OFFER,
                    round_index,
                    contract_id=contract.contract_id,
                    issuer=contract.client if is_ask else contract.server,
                    counterparty=contract.server if is_ask else contract.client,
                    price=contract.price_per_round,
                    duration=contract.next_term,
                )
            )
        if contract.negotiation_remaining == 1:
            txs.append(
                self._tx(
                    TxType.AGREEMENT,
                    round_index,
                    contract_id=contract.contract_id,
                    issuer=contract.server,
                    counterparty=contract.client,
                    price=contract.price_per_round,
                    duration=contract.next_term,
                )
            )
            txs.append(
                self._tx(
                    TxType.ESCROW_CREATE,
                    round_index,
                    contract_id=contract.contract_id,
                    issuer=contract.client,
                    counterparty=contract.server,
                    amount=contract.price_per_round * contract.next_term,
                )
            )

    def _transfer(self, round_index: int) -> Transaction:
        issuer = int(self.rng.integers(0, self.num_parties))
        counterparty = int(self.rng.integers(0, self.num_parties))
        return self._tx(
            TxType.TRANSFER,
            round_index,
            contract_id=None,
            issuer=issuer,
            counterparty=counterparty,
            amount=int(self.rng.integers(1, 100)),
        )

    def _schedule_disputes(self, round_index: int) -> None:
        active = [c for c in self.contracts if c.state is ContractState.ACTIVE]
        count = round(self.config.dispute_rate * len(active))
        if count == 0:
            return
        picks = self.rng.choice(len(active), size=count, replace=False)
        for pick in sorted(int(p) for p in picks):
            contract = active[pick]
            window = min(self.config.epoch_length, contract.duration_rounds)
            contract.dispute_round = round_index + int(self.rng.integers(0, window))
        logger.debug("Disputes scheduled", round=round_index, count=count)

    def _negotiation_length(self) -> int:
        cfg = self.config
        drawn = round(float(self.rng.normal(cfg.negotiation_mean, cfg.negotiation_std)))
        return max(1, min(cfg.negotiation_max, drawn))

    def _tx(
        self,
        tx_type: TxType,
        round_index: int,
        *,
        contract_id: int | None,
        issuer: int,
        counterparty: int = 0,
        amount: int = 0,
        valid: bool = True,
        price: int = 0,
        duration: int = 0,
        ref_id: int = 0,
    ) -> Transaction:
        tx_id = self._next_id
        self._next_id += 1
        return Transaction(
            id=tx_id,
            prefix=self._prefixes[tx_type],
            tx_type=tx_type,
            contract_id=contract_id,
            issuer=issuer,
            amount=amount,
            valid=valid,
            size_bytes=self._sizes[tx_type],
            created_round=round_index,
            counterparty=counterparty,
            price=price,
            duration=duration,
            ref_id=ref_id,
        )
