"""Autorecovery: interruption detection, gating, failover, view changes, mass-sync."""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum

from chainscale.chains.state import ChainStatus, SidechainState
from chainscale.chains.summary import SyncSizing, create_sync_tx, produce_summary_block
from chainscale.config.logging import get_logger
from chainscale.config.scenario import Detection
from chainscale.core.modules import ModuleTable
from chainscale.core.types import ChainId, Committee, SummaryBlock, SyncTransaction
from chainscale.errors import AllCommitteesExhausted, MissingMetaBlocks

logger = get_logger(__name__)


class InterruptionKind(str, Enum):
    COMMITTEE_FAILURE = "committee_failure"
    LEADER_FAILURE = "leader_failure"
    ROLLBACK = "rollback"
    DEPENDENCY_STALL = "dependency_stall"


@dataclass(frozen=True, slots=True)
class InterruptionEvent:
    sidechain_id: ChainId | None
    epoch: int
    round_detected: int
    kind: InterruptionKind
    depth: int = 0


class Directive(str, Enum):
    MINE_NORMAL = "mine_normal"
    MINE_EMPTY = "mine_empty"


@dataclass(frozen=True)
class DependencyGraph:
    """Module id -> module ids whose liveness it gates on."""

    edges: Mapping[int, tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        state: dict[int, int] = {}

        def visit(node: int) -> None:
            if state.get(node) == 1:
                raise ValueError(f"dependency cycle through module {node}")
            if state.get(node) == 2:
                return
            state[node] = 1
            for target in self.edges.get(node, ()):
                visit(target)
            state[node] = 2

        for node in list(self.edges):
            visit(node)

    @classmethod
    def from_keys(
        cls, dependencies: Mapping[str, Sequence[str]], table: ModuleTable
    ) -> DependencyGraph:
        ids = {module.key: module.module_id for module in table.modules}
        return cls(
            {
                ids[source]: tuple(ids[t] for t in targets if t in ids)
                for source, targets in dependencies.items()
                if source in ids
            }
        )

    def dependencies_of(self, module_id: int) -> tuple[int, ...]:
        return tuple(self.edges.get(module_id, ()))


def detect_interruption(
    observed: SidechainState,
    now: int,
    eta: int,
    *,
    epoch: int = 0,
    consensus_failed: bool = False,
) -> InterruptionEvent | None:
    """Report a committee failure, or a stall once ``observed`` is silent for ``eta`` rounds."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    if consensus_failed:
        return InterruptionEvent(
            observed.sidechain_id, epoch, now, InterruptionKind.COMMITTEE_FAILURE
        )
    if now - observed.last_block_round >= eta:
        return InterruptionEvent(
            observed.sidechain_id, epoch, now, InterruptionKind.DEPENDENCY_STALL
        )
    return None


def gate_on_dependency(sc: SidechainState, event: InterruptionEvent | None) -> Directive:
    if event is not None and event.kind is InterruptionKind.DEPENDENCY_STALL:
        logger.debug(
            "Gated on dependency",
            sidechain=str(sc.sidechain_id),
            dependency=str(event.sidechain_id),
        )
        return Directive.MINE_EMPTY
    return Directive.MINE_NORMAL


def failover(
    sc: SidechainState,
    failed: Committee,
    *,
    now: int,
    step_in_rounds: int,
    detection: Detection = "best",
    round_in_epoch: int = 0,
) -> Committee:
    """Hand the chain to its next backup committee.

    The backup resumes after the step-in delay. Under ``worst`` detection the
    failure only surfaces at the end of the epoch, so the backup also redoes
    the ``round_in_epoch`` rounds already spent since the epoch opened.

    Raises:
        AllCommitteesExhausted: when no backup is left; the chain stays down
            until the next epoch's committees are seated
    """
    if not sc.backups:
        sc.status = ChainStatus.EXHAUSTED
        logger.error("All committees exhausted", sidechain=str(sc.sidechain_id), round=now)
        raise AllCommitteesExhausted(f"{sc.sidechain_id}: primary and every backup failed")
    successor = sc.backups.pop(0)
    sc.committee = successor
    sc.committees_used += 1
    if sc.status is ChainStatus.ACTIVE:
        sc.failed_at = now
    sc.status = ChainStatus.RECOVERING
    redo = round_in_epoch if detection == "worst" else 0
    sc.resume_at = now + step_in_rounds + redo
    logger.info(
        "Failover",
        sidechain=str(sc.sidechain_id),
        failed_rank=failed.rank,
        rank=successor.rank,
        resume_at=sc.resume_at,
        redo_rounds=redo,
    )
    return successor


def resume_if_due(sc: SidechainState, now: int) -> bool:
    """Reactivate a recovering chain once its step-in time has passed."""
    if sc.status is ChainStatus.RECOVERING and now >= sc.resume_at:
        sc.status = ChainStatus.ACTIVE
        return True
    return False


def view_change(sc: SidechainState) -> Committee:
    """Round-robin the leader role to the next member."""
    if sc.committee is None:
        raise ValueError(f"{sc.sidechain_id} has no committee")
    sc.committee = sc.committee.with_leader(sc.committee.leader + 1)
    return sc.committee


def summary_for(ledgers: Sequence[SidechainState], epoch: int) -> SummaryBlock:
    """Stored summary for ``epoch``, else one recomputed from held meta-blocks.

    Raises:
        MissingMetaBlocks: if the epoch was pruned and never summarized
    """
    for ledger in ledgers:
        if epoch in ledger.summaries:
            return ledger.summaries[epoch]
    if any(epoch in ledger.pruned_epochs for ledger in ledgers):
        raise MissingMetaBlocks(f"{ledgers[0].sidechain_id} epoch {epoch} pruned without summary")
    base = ledgers[0]
    metas = [m for ledger in ledgers for m in ledger.metas_for(epoch)]
    summary = produce_summary_block(
        base.sidechain_id, epoch, metas, requested_subchains=base.requested_subchains
    )
    base.summaries[epoch] = summary
    return summary


def mass_sync(
    ledgers: Sequence[SidechainState],
    missing_epochs: Iterable[int],
    *,
    tx_id: int,
    issuer: int,
    created_round: int,
    sizing: SyncSizing | None = None,
) -> SyncTransaction:
    """One sync-transaction carrying every listed epoch, oldest first."""
    epochs = sorted(set(missing_epochs))
    if not epochs:
        raise ValueError("mass_sync needs at least one epoch")
    summaries = [summary_for(ledgers, epoch) for epoch in epochs]
    sync = create_sync_tx(
        summaries, tx_id=tx_id, issuer=issuer, created_round=created_round, sizing=sizing
    )
    if len(epochs) > 1:
        logger.info(
            "Mass sync", sidechain=str(ledgers[0].sidechain_id), epochs=epochs, sync_id=tx_id
        )
    return sync
