"""Randomly sharded storage market with cross-shard forwarding.

Transactions land on a uniformly random home shard. One that reads a
contract record homed elsewhere is forwarded, one hop per mainchain round,
through every shard holding one of its inputs before its home shard can
include it. Shards never prune, so every block counts toward storage.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from chainscale.chains.consensus import Pbft
from chainscale.config.logging import get_logger
from chainscale.config.scenario import ScenarioConfig
from chainscale.core.types import ChainId, Committee, Transaction, TxType
from chainscale.election.scoring import ScoreBoard, ScoreWeights
from chainscale.election.sortition import ClassQuota, SlotId, derive_seeds, run_sortition
from chainscale.errors import ConfigError, ConsensusFailure, IncompleteRun, InvariantViolation
from chainscale.market.traffic import TrafficGenerator
from chainscale.metrics.store import MetricsReport, MetricsStore, ObservationKind, aggregate
from chainscale.simulation.population import build_population

logger = get_logger(__name__)

SYSTEM = "sharded"

# Types that read no earlier contract record.
_NO_INPUTS = frozenset({TxType.ASK, TxType.TRANSFER, TxType.ESCROW_CREATE})


@dataclass(frozen=True, slots=True)
class ShardBlock:
    shard_id: int
    round: int
    txs: tuple[Transaction, ...]
    capacity_bytes: int
    header_bytes: int = 80

    def __post_init__(self) -> None:
        if self.payload_bytes > self.capacity_bytes:
            raise InvariantViolation(f"shard {self.shard_id} round {self.round}: block overflows")

    @property
    def payload_bytes(self) -> int:
        return sum(tx.size_bytes for tx in self.txs)

    @property
    def size_bytes(self) -> int:
        return self.header_bytes + self.payload_bytes


@dataclass
class Forward:
    """A cross-shard transaction on its way home."""

    tx: Transaction
    home: int
    hops: deque[int]
    ready_round: int


@dataclass
class ShardState:
    shard_id: int
    blocks: list[ShardBlock] = field(default_factory=list)
    mempool: deque[Transaction] = field(default_factory=deque)
    inbox: deque[Forward] = field(default_factory=deque)
    committee: Committee | None = None
    stalled: bool = False
    stalled_at: int = -1

    def append(self, block: ShardBlock) -> None:
        if block.shard_id != self.shard_id:
            raise InvariantViolation(f"shard {block.shard_id} block appended to {self.shard_id}")
        self.blocks.append(block)

    @property
    def label(self) -> str:
        return f"shard-{self.shard_id}"

    @property
    def storage_bytes(self) -> int:
        return sum(block.size_bytes for block in self.blocks)


@dataclass
class ContractLineage:
    """Shard holding each contract's anchor record (deal) and escrow."""

    anchor: dict[int, int] = field(default_factory=dict)
    escrow: dict[int, int] = field(default_factory=dict)

    @classmethod
    def scatter(
        cls, contracts: list[int], num_shards: int, rng: np.random.Generator
    ) -> ContractLineage:
        anchors = rng.integers(0, num_shards, size=len(contracts))
        escrows = rng.integers(0, num_shards, size=len(contracts))
        return cls(
            anchor={cid: int(s) for cid, s in zip(contracts, anchors)},
            escrow={cid: int(s) for cid, s in zip(contracts, escrows)},
        )

    def record(self, tx: Transaction, shard: int) -> None:
        if tx.contract_id is None:
            return
        if tx.tx_type is TxType.AGREEMENT:
            self.anchor[tx.contract_id] = shard
        elif tx.tx_type is TxType.ESCROW_CREATE:
            self.escrow[tx.contract_id] = shard


def assign_to_shard(tx: Transaction, num_shards: int, rng: np.random.Generator) -> int:
    """Uniform random home shard."""
    if num_shards < 1:
        raise ValueError("num_shards must be at least 1")
    return int(rng.integers(0, num_shards))


def inputs_of(tx: Transaction, lineage: ContractLineage) -> frozenset[int]:
    """Shards holding records the transaction reads."""
    if tx.tx_type in _NO_INPUTS or tx.contract_id is None:
        return frozenset()
    shards: set[int] = set()
    if tx.contract_id in lineage.anchor:
        shards.add(lineage.anchor[tx.contract_id])
    if tx.tx_type is TxType.PAYMENT and tx.contract_id in lineage.escrow:
        shards.add(lineage.escrow[tx.contract_id])
    return frozenset(shards)


def forward_cross_shard(
    tx: Transaction, home: int, remote: frozenset[int], shards: list[ShardState], now: int
) -> Forward:
    """Queue ``tx`` at its first remote input shard; it moves one hop per round."""
    hops = deque(sorted(remote - {home}))
    if not hops:
        raise ValueError(f"tx {tx.id} has no remote inputs")
    forward = Forward(tx, home, hops, now + 1)
    shards[hops[0]].inbox.append(forward)
    return forward


@dataclass
class ShardedResult:
    report: MetricsReport
    store: MetricsStore
    shards: list[ShardState]


class ShardedMarket:
    """Sharded comparator sharing the traffic stream and metrics of chainScale runs.

    Committees are drawn by random sortition each epoch, one per shard, with
    chainScale's committee size and liveness threshold. A failed committee
    leaves its shard stalled until the next epoch.
    """

    def __init__(self, config: ScenarioConfig, num_shards: int | None = None) -> None:
        if num_shards is None:
            num_shards = sum(config.cap_for(key) for key in config.module_table().keys)
        if num_shards < 1:
            raise ConfigError("shards: must be at least 1", field="shards")
        if num_shards * config.committee_size > config.num_miners:
            raise ConfigError(
                f"shards: {num_shards} committees of {config.committee_size} exceed "
                f"{config.num_miners} miners",
                field="shards",
            )
        self.config = config
        self.num_shards = num_shards
        self.run_id = f"{SYSTEM}-{num_shards}shards-s{config.seed}"

        traffic_seq, miner_seq, shard_seq = np.random.SeedSequence(config.seed).spawn(3)
        self.traffic = TrafficGenerator(config, np.random.default_rng(traffic_seq))
        self.miners, self.keypairs = build_population(config, np.random.default_rng(miner_seq))
        self.rng = np.random.default_rng(shard_seq)
        self.weights = ScoreWeights.from_config(config.score_weights)
        self.pbft = Pbft(
            [m.behavior for m in self.miners],
            config.effective_theta_l,
            config.malicious_strategy,
            config.rounds_per_epoch,
        )
        self.contracts = frozenset(c.contract_id for c in self.traffic.contracts)
        self.lineage = ContractLineage.scatter(sorted(self.contracts), num_shards, self.rng)
        self.shards = [ShardState(i) for i in range(num_shards)]
        self.store = MetricsStore(self.run_id)
        self.epoch = -1

    def seat_committees(self, r: int) -> None:
        self.epoch += 1
        board = ScoreBoard.from_miners(self.miners, self.weights, 1)
        slots = {
            SlotId(ChainId(0, shard.shard_id)): (self.config.committee_size,)
            for shard in self.shards
        }
        seed1, seed2 = derive_seeds(self.config.seed, self.epoch)
        outcome = run_sortition(self.keypairs, board, ClassQuota.build(slots), seed1, seed2)
        for shard in self.shards:
            if shard.stalled:
                self.store.emit(
                    r,
                    shard.label,
                    ObservationKind.RECOVERED,
                    latency_rounds=float(r * self.config.rho - shard.stalled_at),
                )
            shard.committee = outcome.committee(SlotId(ChainId(0, shard.shard_id)))
            shard.stalled = False
        logger.debug("Shard committees seated", epoch=self.epoch, round=r)

    def route(self, txs: list[Transaction], r: int) -> None:
        for tx in txs:
            self.store.emit(r, SYSTEM, ObservationKind.TX_GENERATED, tx_id=tx.id)
            home = assign_to_shard(tx, self.num_shards, self.rng)
            remote = inputs_of(tx, self.lineage) - {home}
            if not remote:
                self.shards[home].mempool.append(tx)
                continue
            forward = forward_cross_shard(tx, home, remote, self.shards, r)
            self.store.emit(
                r,
                self.shards[home].label,
                ObservationKind.CROSS_CHAIN_FORWARD,
                tx_id=tx.id,
                tx_count=len(forward.hops),
            )

    def deliver(self, r: int) -> None:
        """Advance every forward whose hop is due by one shard."""
        moving: list[Forward] = []
        for shard in self.shards:
            kept: deque[Forward] = deque()
            for forward in shard.inbox:
                (moving if forward.ready_round <= r else kept).append(forward)
            shard.inbox = kept
        for forward in moving:
            forward.hops.popleft()
            if forward.hops:
                forward.ready_round = r + 1
                self.shards[forward.hops[0]].inbox.append(forward)
            else:
                self.shards[forward.home].mempool.append(forward.tx)

    def _valid(self, tx: Transaction) -> bool:
        if tx.contract_id is not None and tx.contract_id not in self.contracts:
            return False
        return tx.valid or tx.tx_type is TxType.DISPUTE

    def shard_round(self, shard: ShardState, g: int, r: int, round_in_epoch: int) -> None:
        cfg = self.config
        if shard.stalled or shard.committee is None:
            return
        try:
            vote = self.pbft.vote(shard.committee, round_in_epoch)
        except ConsensusFailure:
            shard.stalled = True
            shard.stalled_at = g
            self.store.emit(r, shard.label, ObservationKind.COMMITTEE_FAILED, epoch=self.epoch)
            logger.info("Shard stalled", shard=shard.shard_id, round=g)
            return
        if vote.view_change:
            shard.committee = shard.committee.with_leader(shard.committee.leader + 1)
            return

        included: list[Transaction] = []
        rejected: list[Transaction] = []
        used = 0
        while shard.mempool:
            tx = shard.mempool[0]
            if used + tx.size_bytes > cfg.side_block_bytes:
                break
            shard.mempool.popleft()
            if not self._valid(tx):
                rejected.append(tx)
                continue
            included.append(tx)
            used += tx.size_bytes
            self.lineage.record(tx, shard.shard_id)

        block = ShardBlock(
            shard.shard_id, g, tuple(included), cfg.side_block_bytes, cfg.main_header_bytes
        )
        shard.append(block)
        self.store.emit(
            r,
            shard.label,
            ObservationKind.BLOCK_PRODUCED,
            size_bytes=block.size_bytes,
            tx_count=len(included),
            persistent=True,
            epoch=self.epoch,
        )
        for tx in included:
            self.store.emit(
                r,
                shard.label,
                ObservationKind.TX_CONFIRMED,
                tx_id=tx.id,
                latency_rounds=(g + 1 - tx.created_round * cfg.rho) / cfg.rho,
                size_bytes=tx.size_bytes,
            )
        for tx in rejected:
            self.store.emit(r, shard.label, ObservationKind.TX_REJECTED, tx_id=tx.id)

    def _drained(self) -> bool:
        return all(not shard.mempool and not shard.inbox for shard in self.shards)

    def run(self) -> ShardedResult:
        cfg = self.config
        limit = cfg.run_rounds + cfg.max_drain_rounds
        logger.info("Sharded market started", run_id=self.run_id, shards=self.num_shards)
        r = 0
        epoch_start = 0
        while r < cfg.run_rounds or not self._drained():
            if r >= limit:
                raise IncompleteRun(f"{self.run_id}: queues not drained after {limit} rounds")
            if r % cfg.epoch_length == 0:
                self.seat_committees(r)
                epoch_start = r
            self.deliver(r)
            if r < cfg.run_rounds:
                self.route(self.traffic.step(r), r)
            for s in range(cfg.rho):
                g = r * cfg.rho + s
                for shard in self.shards:
                    self.shard_round(shard, g, r, g - epoch_start * cfg.rho)
            r += 1

        report = aggregate(
            self.store.observations,
            run_rounds=cfg.run_rounds,
            round_seconds=cfg.round_seconds,
            side_round_seconds=cfg.round_seconds / cfg.rho,
            run_id=self.run_id,
        )
        logger.info(
            "Sharded market finished",
            run_id=self.run_id,
            rounds=r,
            ctr_percent=round(report.ctr_percent, 2),
            storage_bytes=report.storage_bytes,
        )
        return ShardedResult(report, self.store, self.shards)


def run_sharded_market(config: ScenarioConfig, num_shards: int | None = None) -> MetricsReport:
    return ShardedMarket(config, num_shards).run().report
