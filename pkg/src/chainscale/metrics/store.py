"""Run observations and the report computed from them."""

from __future__ import annotations

from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from enum import Enum
from typing import Any

from chainscale.config.logging import get_logger
from chainscale.errors import DuplicateConfirmation, IncompleteRun

logger = get_logger(__name__)


class ObservationKind(str, Enum):
    TX_GENERATED = "tx_generated"
    TX_CONFIRMED = "tx_confirmed"
    TX_REJECTED = "tx_rejected"
    BLOCK_PRODUCED = "block_produced"
    SYNC_CONFIRMED = "sync_confirmed"
    PRUNED = "pruned"
    CROSS_CHAIN_FORWARD = "cross_chain_forward"
    COMMITTEE_FAILED = "committee_failed"
    RECOVERED = "recovered"
    ROLLED_BACK = "rolled_back"


@dataclass(frozen=True, slots=True)
class Observation:
    """One measurement, stamped with the mainchain round it happened in.

    ``latency_rounds`` is in mainchain rounds for confirmations and in
    sidechain rounds for recoveries. ``persistent`` marks blocks that are
    never pruned.
    """

    run_id: str
    round: int
    chain_id: str
    kind: ObservationKind
    tx_id: int | None = None
    latency_rounds: float | None = None
    size_bytes: int = 0
    tx_count: int = 0
    empty: bool = False
    persistent: bool = False
    epoch: int | None = None


class MetricsStore:
    """Append-only observation log for one run."""

    def __init__(self, run_id: str) -> None:
        self.run_id = run_id
        self._observations: list[Observation] = []
        self._confirmed: set[int] = set()

    def record(self, obs: Observation) -> None:
        if obs.kind is ObservationKind.TX_CONFIRMED and obs.tx_id is not None:
            if obs.tx_id in self._confirmed:
                raise DuplicateConfirmation(f"tx {obs.tx_id} confirmed twice")
            self._confirmed.add(obs.tx_id)
        self._observations.append(obs)

    def emit(self, round_index: int, chain_id: str, kind: ObservationKind, **fields: Any) -> None:
        self.record(Observation(self.run_id, round_index, chain_id, kind, **fields))

    @property
    def observations(self) -> tuple[Observation, ...]:
        return tuple(self._observations)

    def count(self, kind: ObservationKind) -> int:
        return sum(1 for obs in self._observations if obs.kind is kind)

    def __len__(self) -> int:
        return len(self._observations)


@dataclass(frozen=True, slots=True)
class RoundPoint:
    round: int
    confirmed: int
    storage_bytes: int
    persistent_bytes: int
    backlog: int


@dataclass(frozen=True)
class MetricsReport:
    run_id: str
    run_rounds: int
    rounds_total: int
    generated: int
    confirmed: int
    rejected: int
    confirmed_in_window: int
    throughput: float
    confirmation_seconds: float
    storage_bytes: int
    ctr_percent: float
    forwards: int
    committee_failures: int
    recovery_time_min: float
    series: tuple[RoundPoint, ...] = ()

    def scalars(self) -> dict[str, object]:
        return {
            "run_id": self.run_id,
            "run_rounds": self.run_rounds,
            "rounds_total": self.rounds_total,
            "generated": self.generated,
            "confirmed": self.confirmed,
            "rejected": self.rejected,
            "confirmed_in_window": self.confirmed_in_window,
            "throughput": self.throughput,
            "confirmation_seconds": self.confirmation_seconds,
            "storage_bytes": self.storage_bytes,
            "ctr_percent": self.ctr_percent,
            "forwards": self.forwards,
            "committee_failures": self.committee_failures,
            "recovery_time_min": self.recovery_time_min,
        }


def aggregate(
    observations: Iterable[Observation],
    *,
    run_rounds: int,
    round_seconds: float = 30.0,
    side_round_seconds: float = 10.0,
    run_id: str | None = None,
) -> MetricsReport:
    """Compute the run report.

    Throughput counts confirmations within the first ``run_rounds``
    mainchain rounds; confirmation time averages every confirmation,
    including those of the drain phase.

    Raises:
        IncompleteRun: if a generated transaction was neither confirmed nor rejected
    """
    obs = list(observations)
    kinds = Counter(o.kind for o in obs)
    generated = kinds[ObservationKind.TX_GENERATED]
    confirmed_obs = [o for o in obs if o.kind is ObservationKind.TX_CONFIRMED]
    confirmed = len(confirmed_obs)
    rejected = kinds[ObservationKind.TX_REJECTED]
    if generated != confirmed + rejected:
        raise IncompleteRun(
            f"{generated} generated, {confirmed} confirmed, {rejected} rejected"
        )

    window = max(1, run_rounds)
    in_window = sum(1 for o in confirmed_obs if o.round < run_rounds)
    latencies = [o.latency_rounds or 0.0 for o in confirmed_obs]
    mean_latency = sum(latencies) / len(latencies) if latencies else 0.0

    storage = sum(
        o.size_bytes for o in obs if o.kind is ObservationKind.BLOCK_PRODUCED and o.persistent
    ) - sum(o.size_bytes for o in obs if o.kind is ObservationKind.ROLLED_BACK)
    forwards = kinds[ObservationKind.CROSS_CHAIN_FORWARD]
    recoveries = [o.latency_rounds or 0.0 for o in obs if o.kind is ObservationKind.RECOVERED]
    recovery_min = (
        sum(recoveries) / len(recoveries) * side_round_seconds / 60.0 if recoveries else 0.0
    )

    report = MetricsReport(
        run_id=run_id or (obs[0].run_id if obs else ""),
        run_rounds=run_rounds,
        rounds_total=max((o.round for o in obs), default=-1) + 1,
        generated=generated,
        confirmed=confirmed,
        rejected=rejected,
        confirmed_in_window=in_window,
        throughput=in_window / window,
        confirmation_seconds=mean_latency * round_seconds,
        storage_bytes=storage,
        ctr_percent=forwards / generated * 100.0 if generated else 0.0,
        forwards=forwards,
        committee_failures=kinds[ObservationKind.COMMITTEE_FAILED],
        recovery_time_min=recovery_min,
        series=round_series(obs),
    )
    logger.debug("Report aggregated", run_id=report.run_id, throughput=report.throughput)
    return report


def round_series(observations: Sequence[Observation]) -> tuple[RoundPoint, ...]:
    """Per-round confirmations, cumulative storage and live backlog."""
    rounds = max((o.round for o in observations), default=-1) + 1
    confirmed = [0] * rounds
    settled = [0] * rounds
    generated = [0] * rounds
    storage_delta = [0] * rounds
    persistent_delta = [0] * rounds
    for o in observations:
        if o.round < 0:
            continue
        if o.kind is ObservationKind.TX_CONFIRMED:
            confirmed[o.round] += 1
            settled[o.round] += 1
        elif o.kind is ObservationKind.TX_REJECTED:
            settled[o.round] += 1
        elif o.kind is ObservationKind.TX_GENERATED:
            generated[o.round] += 1
        elif o.kind is ObservationKind.BLOCK_PRODUCED:
            storage_delta[o.round] += o.size_bytes
            if o.persistent:
                persistent_delta[o.round] += o.size_bytes
        elif o.kind is ObservationKind.PRUNED:
            storage_delta[o.round] -= o.size_bytes
        elif o.kind is ObservationKind.ROLLED_BACK:
            storage_delta[o.round] -= o.size_bytes
            persistent_delta[o.round] -= o.size_bytes

    points: list[RoundPoint] = []
    storage = persistent = backlog = 0
    for r in range(rounds):
        storage += storage_delta[r]
        persistent += persistent_delta[r]
        backlog += generated[r] - settled[r]
        points.append(
            RoundPoint(r, confirmed[r], storage, persistent, backlog)
        )
    return tuple(points)
