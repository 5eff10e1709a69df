"""Storage-market contracts and workload generation."""

from chainscale.core.modules import ChainTarget, annotate, classify
from chainscale.market.contracts import ContractState, ServiceContract
from chainscale.market.traffic import GenesisAllocation, TrafficGenerator

__all__ = [
    "ChainTarget",
    "ContractState",
    "GenesisAllocation",
    "ServiceContract",
    "TrafficGenerator",
    "annotate",
    "classify",
]
