"""Monte Carlo estimate of autorecovery time under random and weighted sortition.

Each run seats a primary and ``kappa`` backups, drawn without replacement
from the population (per class for weighted elections). Committees take over
in rank order; the run recovers at the first committee whose misbehaving
members stay below the threshold.
"""

from __future__ import annotations

import csv
import math
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from chainscale.config.logging import get_logger
from chainscale.config.scenario import Detection, liveness_threshold
from chainscale.errors import InvalidCounts, InvalidProbability

logger = get_logger(__name__)

FailureCriterion = Literal["liveness", "safety"]


@dataclass(frozen=True)
class Population:
    num_miners: int
    p_lazy: float = 0.0
    p_malicious: float = 0.0

    def __post_init__(self) -> None:
        if self.num_miners < 1:
            raise InvalidCounts("population needs at least one miner")
        for p in (self.p_lazy, self.p_malicious, self.p_lazy + self.p_malicious):
            if not 0.0 <= p <= 1.0:
                raise InvalidProbability(f"adversarial rate {p} outside [0, 1]")

    @property
    def misbehaving(self) -> int:
        return round((self.p_lazy + self.p_malicious) * self.num_miners)


@dataclass(frozen=True)
class WeightedElection:
    """Class sizes, misbehaving miners per class and per-committee class quotas."""

    class_sizes: tuple[int, ...]
    misbehaving: tuple[int, ...]
    quotas: tuple[int, ...]

    def __post_init__(self) -> None:
        if not len(self.class_sizes) == len(self.misbehaving) == len(self.quotas):
            raise InvalidCounts("need one size, misbehaving count and quota per class")
        for size, bad, quota in zip(self.class_sizes, self.misbehaving, self.quotas):
            if min(size, bad, quota) < 0 or bad > size:
                raise InvalidCounts(f"class of {size} cannot hold {bad} misbehaving miners")

    @property
    def committee_size(self) -> int:
        return sum(self.quotas)

    @classmethod
    def two_class(
        cls,
        population: Population,
        committee_size: int,
        class1_seats: float,
        class1_adversaries: float,
    ) -> WeightedElection:
        """WXX-AYY election: ``class1_seats`` of the committee from class 1,
        which holds ``class1_adversaries`` of all misbehaving miners.

        Classes split the population in half; adversaries that do not fit in
        class 1 spill into class 2.
        """
        n = population.num_miners
        sizes = (n - n // 2, n // 2)
        bad = population.misbehaving
        bad1 = min(sizes[0], round(class1_adversaries * bad))
        bad2 = min(sizes[1], bad - bad1)
        seats1 = round(class1_seats * committee_size)
        return cls(sizes, (bad1, bad2), (seats1, committee_size - seats1))


@dataclass(frozen=True)
class MonteCarloResult:
    times: np.ndarray
    failed_committees: np.ndarray
    exhausted: np.ndarray
    step_in_minutes: float
    kappa: int

    @property
    def runs(self) -> int:
        return len(self.times)

    @property
    def mean(self) -> float:
        """Mean recovery minutes; exhausted runs are charged every committee's step-in."""
        return float(self.times.mean()) if self.runs else 0.0

    @property
    def mean_recovered(self) -> float:
        recovered = self.times[~self.exhausted]
        return float(recovered.mean()) if len(recovered) else math.nan

    @property
    def failure_rate(self) -> float:
        return float(self.exhausted.mean()) if self.runs else 0.0

    @property
    def failure_stderr(self) -> float:
        p = self.failure_rate
        return math.sqrt(p * (1.0 - p) / self.runs) if self.runs else 0.0

    def histogram(self) -> dict[int, int]:
        """Runs per number of failed committees."""
        values, counts = np.unique(self.failed_committees, return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts)}

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["run", "failed_committees", "exhausted", "recovery_minutes"])
            for run, (failed, exhausted, minutes) in enumerate(
                zip(self.failed_committees, self.exhausted, self.times)
            ):
                writer.writerow([run, int(failed), int(bool(exhausted)), repr(float(minutes))])
        return path


def failure_threshold(committee_size: int, criterion: FailureCriterion = "liveness") -> int:
    """Misbehaving members at which a 3f+2 committee fails.

    ``liveness`` (the default) is f+1, enough to withhold a quorum. ``safety``
    is 2f+2, enough to sign a block on their own.
    """
    if criterion == "safety":
        return 2 * max(0, (committee_size - 2) // 3) + 2
    return liveness_threshold(committee_size)


def _draw_class(
    rng: np.random.Generator, bad: int, size: int, quota: int, committees: int, runs: int
) -> np.ndarray:
    """Misbehaving members per committee (runs x committees) for one class."""
    drawn = np.zeros((runs, committees), dtype=np.int64)
    bad_left = np.full(runs, bad, dtype=np.int64)
    good_left = np.full(runs, size - bad, dtype=np.int64)
    for j in range(committees):
        if quota == 0:
            continue
        k = rng.hypergeometric(bad_left, good_left, quota) if bad else np.zeros(runs, np.int64)
        drawn[:, j] = k
        bad_left -= k
        good_left -= quota - k
    return drawn


def monte_carlo_recovery(
    population: Population,
    committee_size: int,
    *,
    election: WeightedElection | None = None,
    kappa: int = 2,
    theta: int | None = None,
    step_in_minutes: float = 5.0,
    runs: int = 10_000,
    seed: int = 0,
    detection: Detection = "best",
    detection_delay_minutes: float = 5.0,
) -> MonteCarloResult:
    """Distribution of time to recover a chain.

    Args:
        population: Miner count and adversarial rates
        committee_size: Members per committee (random election)
        election: Weighted election; ``None`` draws uniformly
        kappa: Backup committees
        theta: Misbehaving members at which a committee fails (default f+1)
        step_in_minutes: Delay charged per failed committee
        runs: Independent runs
        seed: Seed of the run generator
        detection: ``best`` detects a failure immediately; ``worst`` only at
            the end of the epoch, adding ``detection_delay_minutes`` per failure

    Returns:
        Per-run recovery times, failure counts and exhaustion flags
    """
    if runs < 1:
        raise InvalidCounts("runs must be >= 1")
    committees = kappa + 1
    rng = np.random.default_rng(seed)

    if election is None:
        size = committee_size
        seats = committees * size
        if seats > population.num_miners:
            raise InvalidCounts(f"{seats} seats exceed {population.num_miners} miners")
        misbehaving = _draw_class(
            rng, population.misbehaving, population.num_miners, size, committees, runs
        )
    else:
        size = election.committee_size
        misbehaving = np.zeros((runs, committees), dtype=np.int64)
        for class_size, bad, quota in zip(
            election.class_sizes, election.misbehaving, election.quotas
        ):
            if committees * quota > class_size:
                raise InvalidCounts(f"class of {class_size} cannot seat {committees}x{quota}")
            misbehaving += _draw_class(rng, bad, class_size, quota, committees, runs)

    threshold = failure_threshold(size) if theta is None else theta
    failed = misbehaving >= threshold
    survivors = ~failed
    exhausted = ~survivors.any(axis=1)
    failed_before = np.where(exhausted, committees, survivors.argmax(axis=1))

    per_failure = step_in_minutes
    if detection == "worst":
        per_failure += detection_delay_minutes
    times = failed_before.astype(float) * per_failure

    result = MonteCarloResult(times, failed_before, exhausted, step_in_minutes, kappa)
    logger.info(
        "Recovery Monte Carlo",
        election="random" if election is None else "weighted",
        runs=runs,
        mean_minutes=result.mean,
        failure_rate=result.failure_rate,
        detection=detection,
    )
    return result


def compare_elections(
    population: Population,
    committee_size: int,
    splits: Sequence[tuple[float, float]],
    *,
    kappa: int = 2,
    theta: int | None = None,
    step_in_minutes: float = 5.0,
    runs: int = 10_000,
    seed: int = 0,
    detection: Detection = "best",
) -> dict[str, MonteCarloResult]:
    """Random election against each WXX-AYY split, keyed ``random`` / ``W60-A15``."""
    elections: dict[str, WeightedElection | None] = {"random": None}
    for seats, adversaries in splits:
        key = f"W{round(seats * 100)}-A{round(adversaries * 100)}"
        elections[key] = WeightedElection.two_class(population, committee_size, seats, adversaries)
    return {
        key: monte_carlo_recovery(
            population,
            committee_size,
            election=election,
            kappa=kappa,
            theta=theta,
            step_in_minutes=step_in_minutes,
            runs=runs,
            seed=seed,
            detection=detection,
        )
        for key, election in elections.items()
    }
