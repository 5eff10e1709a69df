"""Comparison systems sharing traffic and metrics with chainScale runs."""

from chainscale.baselines.sharded import (
    ContractLineage,
    ShardBlock,
    ShardedMarket,
    ShardedResult,
    ShardState,
    assign_to_shard,
    forward_cross_shard,
    inputs_of,
    run_sharded_market,
)
from chainscale.baselines.single import (
    run_single_sidechain,
    simulate_single_sidechain,
    single_sidechain_config,
)

__all__ = [
    "ContractLineage",
    "ShardBlock",
    "ShardState",
    "ShardedMarket",
    "ShardedResult",
    "assign_to_shard",
    "forward_cross_shard",
    "inputs_of",
    "run_sharded_market",
    "run_single_sidechain",
    "simulate_single_sidechain",
    "single_sidechain_config",
]
