"""Tests for the single-sidechain and sharded comparators."""

import numpy as np
import pytest

from chainscale.baselines.sharded import (
    ContractLineage,
    ShardBlock,
    ShardedMarket,
    assign_to_shard,
    forward_cross_shard,
    inputs_of,
    run_sharded_market,
)
from chainscale.baselines.single import simulate_single_sidechain, single_sidechain_config
from chainscale.core.types import TxType
from chainscale.errors import ConfigError, InvariantViolation


class TestSingleSidechain:
    """Tests for the one-module rewrite of a scenario."""

    def test_config_rewrite(self, make_config):
        events = [
            {"kind": "committee_failure", "round": 1, "module": "P"},
            {"kind": "rollback", "round": 2, "depth": 1},
        ]
        config = single_sidechain_config(make_config(events=events, subchains=2))
        assert [m.key for m in config.modules] == ["S"]
        assert config.priority == ["S"]
        assert config.dependencies == {}
        assert config.class_shares["S"] == pytest.approx([1.6 / 3, 1.4 / 3])
        assert config.subchains == 1
        assert [e.module for e in config.events] == ["S", None]
        assert config.seed == 3

    def test_run(self, make_config):
        result = simulate_single_sidechain(make_config())
        assert result.report.run_id == "single-1P1M1D-s3"
        assert list(result.syncs_issued) == [1]
        assert result.report.generated == result.report.confirmed + result.report.rejected


def _lineage():
    return ContractLineage(anchor={5: 1, 6: 0}, escrow={5: 2})


class TestShardHelpers:
    """Tests for shard assignment, inputs and forwarding."""

    def test_assign_to_shard(self, make_tx):
        rng = np.random.default_rng(0)
        tx = make_tx()
        homes = {assign_to_shard(tx, 4, rng) for _ in range(200)}
        assert homes == {0, 1, 2, 3}
        with pytest.raises(ValueError):
            assign_to_shard(tx, 0, rng)

    def test_inputs(self, make_tx):
        lineage = _lineage()
        assert inputs_of(make_tx(TxType.ASK, contract_id=5), lineage) == frozenset()
        assert inputs_of(make_tx(TxType.POR, contract_id=5), lineage) == {1}
        assert inputs_of(make_tx(TxType.PAYMENT, contract_id=5), lineage) == {1, 2}
        assert inputs_of(make_tx(TxType.POR, contract_id=99), lineage) == frozenset()

    def test_lineage_follows_new_records(self, make_tx):
        lineage = _lineage()
        lineage.record(make_tx(TxType.AGREEMENT, contract_id=6), 3)
        lineage.record(make_tx(TxType.ESCROW_CREATE, contract_id=6, size=250), 2)
        assert (lineage.anchor[6], lineage.escrow[6]) == (3, 2)

    def test_scatter_covers_every_contract(self):
        lineage = ContractLineage.scatter([1, 2, 3], 2, np.random.default_rng(0))
        assert set(lineage.anchor) == set(lineage.escrow) == {1, 2, 3}
        assert set(lineage.anchor.values()) <= {0, 1}

    def test_one_hop_per_round(self, make_config, make_tx):
        market = ShardedMarket(make_config(), 3)
        tx = make_tx(TxType.PAYMENT, contract_id=5)
        forward = forward_cross_shard(tx, 0, frozenset({1, 2}), market.shards, 0)
        assert list(forward.hops) == [1, 2]
        assert market.shards[1].inbox[0] is forward

        market.deliver(0)
        assert market.shards[1].inbox[0] is forward
        market.deliver(1)
        assert not market.shards[1].inbox
        assert market.shards[2].inbox[0] is forward
        market.deliver(2)
        assert not market.shards[2].inbox
        assert list(market.shards[0].mempool) == [tx]

    def test_forward_needs_remote_input(self, make_config, make_tx):
        market = ShardedMarket(make_config(), 2)
        with pytest.raises(ValueError):
            forward_cross_shard(make_tx(), 0, frozenset({0}), market.shards, 0)

    def test_block_overflow(self, make_tx):
        with pytest.raises(InvariantViolation):
            ShardBlock(0, 0, (make_tx(size=300),), capacity_bytes=200)


class TestShardedMarket:
    """End-to-end sharded runs."""

    def test_single_shard_has_no_cross_shard_traffic(self, make_config):
        report = run_sharded_market(make_config(), 1)
        assert report.ctr_percent == 0.0
        assert report.forwards == 0
        assert report.generated == report.confirmed + report.rejected

    def test_cross_shard_traffic(self, make_config):
        result = ShardedMarket(make_config(), 4).run()
        assert result.report.ctr_percent > 0.0
        assert result.report.run_id == "sharded-4shards-s3"
        assert result.report.storage_bytes == sum(s.storage_bytes for s in result.shards)

    def test_defaults_to_one_shard_per_chain(self, make_config):
        assert ShardedMarket(make_config(subchains=2)).num_shards == 4

    @pytest.mark.parametrize("shards", [0, 13])
    def test_shard_count_validated(self, make_config, shards):
        with pytest.raises(ConfigError) as excinfo:
            ShardedMarket(make_config(), shards)
        assert excinfo.value.field == "shards"
