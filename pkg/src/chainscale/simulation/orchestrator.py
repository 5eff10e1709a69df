"""Round scheduler: traffic, epochs, committees, sidechain and mainchain rounds.

One mainchain round runs ``rho`` sidechain rounds and then one mainchain
block. Epochs span ``epoch_length`` mainchain rounds; committees are seated
when an epoch opens and every module syncs when it closes. After the last
traffic round the run keeps going until every queue is empty.
"""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from chainscale.chains.consensus import Pbft
from chainscale.chains.mainchain import produce_main_block, rollback
from chainscale.chains.scaling import (
    SubchainRequest,
    allocate_subchains,
    assign_subchain,
    elect_sync_committee,
)
from chainscale.chains.setup import SystemState, setup
from chainscale.chains.sidechain import (
    BlockOutcome,
    TxValidator,
    detect_heavy,
    produce_meta_block,
    prune,
)
from chainscale.chains.state import ChainStatus, EpochStats, SidechainState
from chainscale.chains.summary import SyncSizing, verify_sync_tx
from chainscale.config.logging import get_logger
from chainscale.config.scenario import ElectionMode, ScenarioConfig, ScenarioEvent
from chainscale.core.modules import ModuleSpec, TargetKind, classify
from chainscale.core.types import MAINCHAIN_ID, ChainId, SyncTransaction, Transaction
from chainscale.election.scoring import ScoreBoard, ScoreWeights
from chainscale.election.sortition import (
    ClassQuota,
    SlotId,
    apportion,
    derive_seeds,
    run_sortition,
)
from chainscale.errors import (
    AllCommitteesExhausted,
    ConsensusFailure,
    IncompleteRun,
    NoCapacity,
)
from chainscale.market.traffic import TrafficGenerator
from chainscale.metrics.persist import export_ledger, write_observations, write_report
from chainscale.metrics.store import (
    MetricsReport,
    MetricsStore,
    Observation,
    ObservationKind,
    aggregate,
)
from chainscale.recovery.autorecovery import (
    DependencyGraph,
    Directive,
    detect_interruption,
    failover,
    gate_on_dependency,
    mass_sync,
    resume_if_due,
    view_change,
)
from chainscale.simulation.population import build_population

logger = get_logger(__name__)

# Sync ids live above every ordinary transaction id.
SYNC_ID_BASE = 1 << 40


@dataclass
class SimulationResult:
    report: MetricsReport
    store: MetricsStore
    system: SystemState
    syncs_issued: Counter[int]


class Simulation:
    """One seeded run of the modular (or single-module) sidechain system."""

    def __init__(self, config: ScenarioConfig, *, system: str = "chainscale") -> None:
        self.config = config
        self.table = config.module_table()
        self.run_id = f"{system}-{config.layout_name}-s{config.seed}"

        traffic_seq, miner_seq, sync_seq = np.random.SeedSequence(config.seed).spawn(3)
        self.traffic = TrafficGenerator(config, np.random.default_rng(traffic_seq), self.table)
        self.system = setup(
            self.traffic.genesis(),
            self.table,
            epoch_length=config.epoch_length,
            main_block_bytes=config.main_block_bytes,
            main_header_bytes=config.main_header_bytes,
        )
        self.main = self.system.mainchain
        self.miners, self.keypairs = build_population(config, np.random.default_rng(miner_seq))
        self.sync_rng = np.random.default_rng(sync_seq)

        self.weights = ScoreWeights.from_config(config.score_weights)
        self.classes = config.classes if config.election_mode is ElectionMode.WEIGHTED else 1
        self.pbft = Pbft(
            [m.behavior for m in self.miners],
            config.effective_theta_l,
            config.malicious_strategy,
            config.rounds_per_epoch,
        )
        self.validator = TxValidator(self.main)
        self.dependencies = DependencyGraph.from_keys(config.dependencies, self.table)
        self.sizing = SyncSizing(config.tx_sizes.sync_base, config.tx_sizes.sync_per_entry)
        self.store = MetricsStore(self.run_id)

        self.modules: list[ModuleSpec] = [self.table.by_key(key) for key in config.priority]
        self.subchains = {m.module_id: 1 for m in self.modules}
        self.plan = {m.module_id: 1 for m in self.modules}
        self.deferred: dict[int, set[int]] = {m.module_id: set() for m in self.modules}
        self.in_flight: dict[int, SyncTransaction] = {}
        self.syncs_issued: Counter[int] = Counter()
        self.recorded_summaries: set[tuple[int, int]] = set()
        self.forced: dict[ChainId, int] = {}
        self.events: dict[int, list[ScenarioEvent]] = {}
        for event in config.events:
            self.events.setdefault(event.round, []).append(event)

        self.epoch = -1
        self.epoch_start = 0
        self.epoch_open = False
        self._next_sync_id = SYNC_ID_BASE

    # Chains

    def active_chains(self, module_id: int) -> list[SidechainState]:
        return self.system.module_chains(module_id)[: self.subchains[module_id]]

    def _chain(self, module_id: int, sub: int) -> SidechainState:
        chain_id = ChainId(module_id, sub)
        sc = self.system.sidechains.get(chain_id)
        if sc is None:
            base = self.system.sidechains[ChainId(module_id)]
            sc = SidechainState(chain_id, genesis_ref=base.genesis_ref)
            self.system.sidechains[chain_id] = sc
        return sc

    def _sidechains_drained(self) -> bool:
        return all(not sc.mempool for sc in self.system.sidechains.values())

    def _settled(self) -> bool:
        return (
            self._sidechains_drained()
            and not self.main.pending
            and not self.main.pending_syncs
            and not self.in_flight
            and not any(self.deferred.values())
        )

    # Epochs

    def _committee_quota(self, key: str) -> tuple[int, ...]:
        size = self.config.committee_size
        if self.classes == 1:
            return (size,)
        return apportion(size, self.config.class_shares[key])

    def open_epoch(self, r: int) -> None:
        """Rank miners, size every module and seat primary and backup committees."""
        cfg = self.config
        self.epoch += 1
        self.epoch_start = r
        self.epoch_open = True
        epoch = self.epoch
        seats = cfg.kappa + 1

        board = ScoreBoard.from_miners(self.miners, self.weights, self.classes)
        quotas = {m.key: self._committee_quota(m.key) for m in self.modules}
        requests = {
            m.key: SubchainRequest(self.plan[m.module_id], tuple(q * seats for q in quotas[m.key]))
            for m in self.modules
        }
        allocation = allocate_subchains(requests, board.class_sizes(), cfg.priority)

        slots: dict[SlotId, tuple[int, ...]] = {}
        for module in self.modules:
            grant = allocation.grants[module.key]
            per_committee = quotas[module.key]
            if grant.scaled:
                per_committee = tuple(q // seats for q in grant.quota)
                if sum(per_committee) == 0:
                    raise NoCapacity(f"module {module.key}: no committee fits epoch {epoch}")
            for sub in range(grant.count):
                for rank in range(seats):
                    slots[SlotId(ChainId(module.module_id, sub), rank)] = per_committee

        seed1, seed2 = derive_seeds(cfg.seed, epoch)
        outcome = run_sortition(self.keypairs, board, ClassQuota.build(slots), seed1, seed2)

        for module in self.modules:
            mid = module.module_id
            previous = self.subchains[mid]
            count = allocation.grants[module.key].count
            self.subchains[mid] = count
            chains = [self._chain(mid, sub) for sub in range(max(count, previous))]
            for sub, sc in enumerate(chains):
                if sc.status is not ChainStatus.ACTIVE and sc.failed_at >= 0:
                    self._recovered(sc, r * cfg.rho, r)
                sc.stats = EpochStats()
                sc.committees_used = 1
                sc.status = ChainStatus.ACTIVE
                sc.heavy = count > 1
                if sub < count:
                    chain_id = ChainId(mid, sub)
                    sc.committee = outcome.committee(SlotId(chain_id, 0))
                    sc.backups = [
                        outcome.committee(SlotId(chain_id, rank)) for rank in range(1, seats)
                    ]
                else:
                    sc.committee = None
                    sc.backups = []
            if count > 1 or previous > 1:
                self._redistribute(chains, count, epoch)

        logger.info(
            "Epoch opened",
            epoch=epoch,
            round=r,
            subchains={m.key: self.subchains[m.module_id] for m in self.modules},
            backfilled=outcome.backfilled,
        )

    def _redistribute(self, chains: Sequence[SidechainState], count: int, epoch: int) -> None:
        waiting = sorted((tx for sc in chains for tx in sc.mempool), key=lambda tx: tx.id)
        for sc in chains:
            sc.mempool.clear()
        for tx in waiting:
            chains[assign_subchain(tx.contract_id or 0, epoch, count)].mempool.append(tx)

    def close_epoch(self, r: int) -> None:
        """Plan next epoch's sub-sidechains and sync every module that is live."""
        cfg = self.config
        epoch = self.epoch
        self.epoch_open = False
        epoch_capacity = cfg.side_block_bytes * cfg.rounds_per_epoch
        for module in self.modules:
            mid = module.module_id
            chains = self.system.module_chains(mid)
            active = chains[: self.subchains[mid]]
            stats = EpochStats()
            for sc in active:
                stats = stats.merge(sc.stats)
            backlog = sum(sc.mempool_bytes for sc in chains)
            cap = cfg.cap_for(module.key)
            heavy_request = detect_heavy(stats, backlog, epoch_capacity, cap)
            demand = math.ceil(stats.arrival_bytes / epoch_capacity)
            self.plan[mid] = min(cap, max(1, heavy_request, demand))
            chains[0].requested_subchains = self.plan[mid]

            if all(sc.live for sc in active):
                self._issue_sync(module, chains, active, r)
            else:
                self.deferred[mid].add(epoch)
                logger.warning("Sync deferred", module=module.key, epoch=epoch)

    def _issue_sync(
        self,
        module: ModuleSpec,
        chains: Sequence[SidechainState],
        active: Sequence[SidechainState],
        r: int,
    ) -> None:
        mid = module.module_id
        committees = [sc.committee for sc in active if sc.committee is not None]
        if len(committees) > 1:
            issuer = elect_sync_committee(
                committees, self.config.committee_size, self.sync_rng
            ).leader_miner
        else:
            issuer = committees[0].leader_miner
        sync = mass_sync(
            chains,
            self.deferred[mid] | {self.epoch},
            tx_id=self._next_sync_id,
            issuer=issuer,
            created_round=r,
            sizing=self.sizing,
        )
        self._next_sync_id += 1
        self.deferred[mid].clear()
        self.main.pending_syncs.append(sync)
        self.in_flight[sync.id] = sync
        self.syncs_issued[mid] += 1
        for summary in sync.summaries:
            if (mid, summary.epoch) in self.recorded_summaries:
                continue
            self.recorded_summaries.add((mid, summary.epoch))
            self.store.emit(
                r,
                str(summary.sidechain_id),
                ObservationKind.BLOCK_PRODUCED,
                size_bytes=summary.size_bytes,
                tx_count=len(summary.entries),
                persistent=True,
                epoch=summary.epoch,
            )

    # Rounds

    def route(self, txs: Sequence[Transaction], r: int) -> None:
        for tx in txs:
            self.store.emit(r, MAINCHAIN_ID, ObservationKind.TX_GENERATED, tx_id=tx.id)
            target = classify(tx, self.table)
            if target.kind is TargetKind.MAINCHAIN or target.module_id is None:
                self.main.pending.append(tx)
                continue
            mid = target.module_id
            sub = assign_subchain(tx.contract_id or 0, self.epoch, self.subchains[mid])
            sc = self._chain(mid, sub)
            sc.mempool.append(tx)
            sc.stats.arrival_bytes += tx.size_bytes

    def apply_events(self, r: int) -> None:
        rho = self.config.rho
        for event in self.events.get(r, []):
            if event.kind == "rollback":
                before = self.main.storage_bytes
                dropped = rollback(self.main, event.depth, depth=self.config.confirmation_depth)
                for sync in dropped:
                    self.in_flight.pop(sync.id, None)
                    self.deferred[sync.sidechain_id.module].update(sync.epochs)
                self.store.emit(
                    r,
                    MAINCHAIN_ID,
                    ObservationKind.ROLLED_BACK,
                    size_bytes=before - self.main.storage_bytes,
                    tx_count=len(dropped),
                )
                continue
            module = self.table.by_key(event.module or "")
            if event.kind == "committee_failure":
                self.forced[ChainId(module.module_id)] = r * rho
            elif event.kind == "stall":
                for sc in self.active_chains(module.module_id):
                    sc.stalled_until = r * rho + event.rounds
            logger.info("Scripted event", kind=event.kind, module=module.key, round=r)

    def _gated(self, module_id: int, sc: SidechainState, g: int) -> bool:
        for dependency in self.dependencies.dependencies_of(module_id):
            for dep in self.active_chains(dependency):
                event = detect_interruption(dep, g, self.config.eta, epoch=self.epoch)
                if gate_on_dependency(sc, event) is Directive.MINE_EMPTY:
                    return True
        return False

    def side_round(self, g: int, r: int) -> None:
        cfg = self.config
        round_in_epoch = g - self.epoch_start * cfg.rho
        for module in self.modules:
            mid = module.module_id
            for sc in self.active_chains(mid):
                if sc.status is ChainStatus.RECOVERING:
                    if not resume_if_due(sc, g):
                        continue
                    self._recovered(sc, g, r)
                if not sc.live or g < sc.stalled_until:
                    continue
                forced = self.forced.get(sc.sidechain_id) == g
                try:
                    outcome = produce_meta_block(
                        sc,
                        epoch=self.epoch,
                        side_round=g,
                        round_in_epoch=round_in_epoch,
                        capacity=cfg.side_block_bytes,
                        validator=self.validator,
                        pbft=self.pbft,
                        gated=self._gated(mid, sc, g),
                        forced_failure=forced,
                    )
                except ConsensusFailure:
                    self._committee_failed(sc, g, r, round_in_epoch)
                    continue
                if outcome.view_change:
                    view_change(sc)
                    continue
                self._block_produced(sc, outcome, g, r)

    def _committee_failed(self, sc: SidechainState, g: int, r: int, round_in_epoch: int) -> None:
        failed = sc.committee
        if failed is None:
            return
        self.store.emit(r, str(sc.sidechain_id), ObservationKind.COMMITTEE_FAILED, epoch=self.epoch)
        for member in failed.members:
            if self.pbft.misbehaving(member, round_in_epoch):
                self.miners[member].disputes += 1
        try:
            failover(
                sc,
                failed,
                now=g,
                step_in_rounds=self.config.step_in_rounds,
                detection=self.config.detection,
                round_in_epoch=round_in_epoch,
            )
        except AllCommitteesExhausted:
            if sc.failed_at < 0:
                sc.failed_at = g

    def _recovered(self, sc: SidechainState, g: int, r: int) -> None:
        self.store.emit(
            r,
            str(sc.sidechain_id),
            ObservationKind.RECOVERED,
            latency_rounds=float(g - sc.failed_at),
            epoch=self.epoch,
        )
        sc.failed_at = -1

    def _block_produced(self, sc: SidechainState, outcome: BlockOutcome, g: int, r: int) -> None:
        block = outcome.block
        if block is None:
            return
        rho = self.config.rho
        for member in outcome.vote.voters:
            self.miners[member].participation += 1
        chain = str(sc.sidechain_id)
        self.store.emit(
            r,
            chain,
            ObservationKind.BLOCK_PRODUCED,
            size_bytes=block.used_bytes,
            tx_count=len(block.txs),
            empty=block.empty,
            epoch=block.epoch,
        )
        for tx in block.txs:
            self.store.emit(
                r,
                chain,
                ObservationKind.TX_CONFIRMED,
                tx_id=tx.id,
                latency_rounds=(g + 1 - tx.created_round * rho) / rho,
                size_bytes=tx.size_bytes,
            )
        for tx in outcome.rejected:
            self.store.emit(r, chain, ObservationKind.TX_REJECTED, tx_id=tx.id)

    def main_round(self, r: int) -> None:
        cfg = self.config
        queued = list(self.main.pending_syncs)

        def verify(sync: SyncTransaction) -> bool:
            return verify_sync_tx(self.system.module_chains(sync.sidechain_id.module), sync)

        block = produce_main_block(
            self.main,
            r,
            capacity=cfg.main_block_bytes,
            header_bytes=cfg.main_header_bytes,
            depth=cfg.confirmation_depth,
            verify=verify,
        )
        self.store.emit(
            r,
            MAINCHAIN_ID,
            ObservationKind.BLOCK_PRODUCED,
            size_bytes=block.size_bytes,
            tx_count=len(block.txs) + len(block.syncs),
            persistent=True,
        )
        for tx in block.txs:
            self.store.emit(
                r,
                MAINCHAIN_ID,
                ObservationKind.TX_CONFIRMED,
                tx_id=tx.id,
                latency_rounds=float(r + 1 - tx.created_round),
                size_bytes=tx.size_bytes,
            )
        for tx in self.main.last_rejected:
            self.store.emit(r, MAINCHAIN_ID, ObservationKind.TX_REJECTED, tx_id=tx.id)

        waiting = {sync.id for sync in self.main.pending_syncs}
        included = {sync.id for sync in block.syncs}
        for sync in queued:
            if sync.id not in waiting and sync.id not in included:
                self.in_flight.pop(sync.id, None)
                self.deferred[sync.sidechain_id.module].update(sync.epochs)
                logger.warning("Sync rejected", sync_id=sync.id, epochs=sync.epochs)

        for sync in self.main.last_confirmed_syncs:
            self.in_flight.pop(sync.id, None)
            mid = sync.sidechain_id.module
            for epoch in sync.epochs:
                self.store.emit(
                    r, str(sync.sidechain_id), ObservationKind.SYNC_CONFIRMED, epoch=epoch
                )
                for sc in self.system.module_chains(mid):
                    freed = prune(sc, epoch, self.main)
                    if freed:
                        self.store.emit(
                            r,
                            str(sc.sidechain_id),
                            ObservationKind.PRUNED,
                            size_bytes=freed,
                            epoch=epoch,
                        )

    # Driver

    def run(self) -> SimulationResult:
        cfg = self.config
        limit = cfg.run_rounds + cfg.max_drain_rounds
        self.store.emit(
            0,
            MAINCHAIN_ID,
            ObservationKind.BLOCK_PRODUCED,
            size_bytes=self.main.blocks[0].size_bytes,
            persistent=True,
        )
        logger.info(
            "Simulation started",
            run_id=self.run_id,
            miners=cfg.num_miners,
            contracts=cfg.contracts,
            run_rounds=cfg.run_rounds,
        )
        r = 0
        while True:
            if r >= limit:
                raise IncompleteRun(f"{self.run_id}: queues not drained after {limit} rounds")
            needs_epoch = not self._sidechains_drained() or any(self.deferred.values())
            if not self.epoch_open and (r == 0 or r < cfg.run_rounds or needs_epoch):
                self.open_epoch(r)
            if r < cfg.run_rounds:
                self.route(self.traffic.step(r), r)
            self.apply_events(r)
            if self.epoch_open:
                for s in range(cfg.rho):
                    self.side_round(r * cfg.rho + s, r)
                elapsed = r + 1 - self.epoch_start
                tail = r + 1 >= cfg.run_rounds and self._sidechains_drained()
                if elapsed >= cfg.epoch_length or tail:
                    self.close_epoch(r)
            self.main_round(r)
            r += 1
            if r >= cfg.run_rounds and not self.epoch_open and self._settled():
                break

        self.validator.assert_isolated()
        report = aggregate(
            self.store.observations,
            run_rounds=cfg.run_rounds,
            round_seconds=cfg.round_seconds,
            side_round_seconds=cfg.round_seconds / cfg.rho,
            run_id=self.run_id,
        )
        logger.info(
            "Simulation finished",
            run_id=self.run_id,
            rounds=r,
            epochs=self.epoch + 1,
            throughput=round(report.throughput, 2),
            storage_bytes=report.storage_bytes,
        )
        return SimulationResult(report, self.store, self.system, self.syncs_issued)


def write_run(
    report: MetricsReport, observations: Sequence[Observation], out_dir: str | Path
) -> Path:
    """Observations, report and block ledger of one run under ``out_dir``."""
    out = Path(out_dir)
    write_observations(observations, out / f"observations_{report.run_id}.csv")
    write_report(report, out / f"report_{report.run_id}.csv")
    export_ledger(observations, out / f"ledger_{report.run_id}.csv")
    logger.info("Run written", run_id=report.run_id, out_dir=str(out))
    return out


def run_experiment(
    config: ScenarioConfig, *, system: str = "chainscale", out_dir: str | Path | None = None
) -> MetricsReport:
    """Run one scenario and return its report, writing CSVs when ``out_dir`` is set."""
    result = Simulation(config, system=system).run()
    if out_dir is not None:
        write_run(result.report, result.store.observations, out_dir)
    return result.report
