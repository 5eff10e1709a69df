"""Unit tests for the storage-market workload generator."""

import math
from collections import Counter

import numpy as np
import pytest

from chainscale.core.types import TxType
from chainscale.market.contracts import ContractState, ServiceContract
from chainscale.market.traffic import SERVICE_COUNTED, TrafficGenerator


def _generator(config, seed: int = 0) -> TrafficGenerator:
    return TrafficGenerator(config, np.random.default_rng(seed))


class TestGenesis:
    """Tests for the initial contract set and allocation."""

    def test_parties_and_escrows(self, make_config):
        config = make_config(contracts=64)
        traffic = _generator(config)
        genesis = traffic.genesis()

        assert traffic.num_servers == 8
        assert len(genesis.balances) == 8 + 64
        assert set(genesis.balances.values()) == {config.initial_balance}
        for contract in traffic.contracts:
            assert contract.state is ContractState.ACTIVE
            assert genesis.escrows[contract.contract_id] == (
                contract.price_per_round * contract.duration_rounds
            )
            assert genesis.servers[contract.contract_id] == contract.server

    def test_same_seed_same_stream(self, make_config):
        config = make_config(contracts=32)
        first = [tx for txs in _generator(config, 5).stream(8) for tx in txs]
        second = [tx for txs in _generator(config, 5).stream(8) for tx in txs]
        assert first == second


class TestRoundTraffic:
    """Tests for per-round transaction generation."""

    def test_every_active_contract_proves_storage(self, make_config):
        config = make_config(contracts=40, dispute_rate=0.0)
        txs = _generator(config).gen_round_traffic(0)
        proofs = [tx for tx in txs if tx.tx_type is TxType.POR]
        assert len(proofs) == 40
        assert all(tx.valid for tx in proofs)

    def test_disputes_reference_invalid_proofs(self, make_config):
        config = make_config(contracts=16, dispute_rate=0.5, epoch_length=10)
        traffic = _generator(config)
        disputes = []
        proofs = {}
        for txs in traffic.stream(config.epoch_length):
            for tx in txs:
                if tx.tx_type is TxType.POR:
                    proofs[tx.id] = tx
                elif tx.tx_type is TxType.DISPUTE:
                    disputes.append(tx)

        assert len(disputes) == 8
        for dispute in disputes:
            proof = proofs[dispute.ref_id]
            assert not proof.valid
            assert proof.contract_id == dispute.contract_id
            assert proof.created_round == dispute.created_round
            assert dispute.size_bytes == 515

    def test_disputed_contract_terminates(self, make_config):
        config = make_config(contracts=16, dispute_rate=1.0, epoch_length=30)
        traffic = _generator(config)
        list(traffic.stream(25))
        assert all(c.state is ContractState.TERMINATED for c in traffic.contracts)

    def test_transfer_share(self, make_config):
        config = make_config(contracts=50, transfer_share=0.2)
        traffic = _generator(config)
        for round_index in range(5):
            txs = traffic.step(round_index)
            counts = Counter(tx.tx_type for tx in txs)
            service = sum(counts[t] for t in SERVICE_COUNTED)
            assert counts[TxType.TRANSFER] == math.ceil(service * 0.25)

    def test_agreements_come_with_escrow(self, make_config):
        config = make_config(contracts=30, dispute_rate=0.0)
        traffic = _generator(config, 2)
        agreements = 0
        for txs in traffic.stream(30):
            escrows = {
                tx.contract_id: tx for tx in txs if tx.tx_type is TxType.ESCROW_CREATE
            }
            for tx in txs:
                if tx.tx_type is not TxType.AGREEMENT:
                    continue
                agreements += 1
                escrow = escrows[tx.contract_id]
                assert escrow.amount == tx.price * tx.duration
                assert escrow.issuer == tx.counterparty
        assert agreements > 0

    def test_payment_charges_elapsed_rounds(self, make_config):
        config = make_config(contracts=30, dispute_rate=0.0)
        traffic = _generator(config, 4)
        expected = {
            c.contract_id: c.price_per_round * c.duration_rounds for c in traffic.contracts
        }
        for txs in traffic.stream(5):
            for tx in txs:
                if tx.tx_type is TxType.PAYMENT and tx.contract_id in expected:
                    assert tx.amount == expected.pop(tx.contract_id)


class TestServiceContract:
    """Tests for contract state transitions."""

    def _contract(self, state: ContractState) -> ServiceContract:
        return ServiceContract(1, 0, 1, state, duration_rounds=3, price_per_round=2)

    def test_allowed_transition(self):
        contract = self._contract(ContractState.ACTIVE)
        contract.move_to(ContractState.EXPIRED)
        assert contract.state is ContractState.EXPIRED

    def test_terminated_is_absorbing(self):
        contract = self._contract(ContractState.TERMINATED)
        with pytest.raises(ValueError, match="not allowed"):
            contract.move_to(ContractState.ACTIVE)

    def test_expiring(self):
        contract = self._contract(ContractState.ACTIVE)
        contract.duration_rounds = 1
        assert contract.expiring
