"""Miner scores and score classes."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

from chainscale.config.scenario import ScoreWeightsConfig
from chainscale.core.types import MinerRecord
from chainscale.errors import EmptyPopulation, InvalidWeights

WEIGHT_TOLERANCE = 1e-12


@dataclass(frozen=True, slots=True)
class ScoreWeights:
    alpha: float
    beta: float
    gamma: float

    def __post_init__(self) -> None:
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise InvalidWeights(f"weights must be nonnegative: {self}")
        if abs(self.alpha + self.beta + self.gamma - 1.0) > WEIGHT_TOLERANCE:
            raise InvalidWeights(f"weights must sum to 1: {self}")

    @classmethod
    def from_config(cls, config: ScoreWeightsConfig) -> ScoreWeights:
        return cls(config.alpha, config.beta, config.gamma)


def compute_score(record: MinerRecord, weights: ScoreWeights) -> float:
    """alpha * mining power + beta * participation - gamma * disputes."""
    return (
        weights.alpha * record.mining_power
        + weights.beta * record.participation
        - weights.gamma * record.disputes
    )


def _class_for_rank(rank: int, population: int, classes: int) -> int:
    # upsilon = (rank + 1) / N; class = clamp(ceil(upsilon * C), 1, C)
    return min(classes, max(1, -(-(rank + 1) * classes // population)))


def assign_class(
    score: float,
    scores: Sequence[float],
    classes: int,
    *,
    pk: bytes | None = None,
    pks: Sequence[bytes] | None = None,
) -> int:
    """Class of ``score`` within ``scores``.

    The percentile is the fraction of the population ranked strictly below.
    With ``pk``/``pks`` given, equal scores are ordered by ascending pk (the
    smaller pk ranks higher); without them, equal scores share a class.
    """
    if not scores:
        raise EmptyPopulation("cannot rank a score in an empty population")
    if classes < 1:
        raise ValueError("classes must be >= 1")

    if pk is not None and pks is not None:
        below = sum(
            1 for other, other_pk in zip(scores, pks, strict=True)
            if other < score or (other == score and other_pk > pk)
        )
    else:
        below = sum(1 for other in scores if other < score)
    population = len(scores)
    return _class_for_rank(population - below - 1, population, classes)


class ScoreBoard:
    """Public ranking of one epoch's scores.

    Miners are ordered by descending score, ties by ascending pk; the top
    ``floor(N / C)`` land in class 1.
    """

    def __init__(self, scores: Sequence[float], pks: Sequence[bytes], classes: int) -> None:
        if not scores:
            raise EmptyPopulation("no miners to rank")
        if len(scores) != len(pks):
            raise ValueError("scores and pks differ in length")
        self.scores = tuple(scores)
        self.pks = tuple(pks)
        self.classes = classes
        population = len(scores)
        order = sorted(range(population), key=lambda i: (-scores[i], pks[i]))
        self._class = [0] * population
        self._members: list[list[int]] = [[] for _ in range(classes)]
        for rank, index in enumerate(order):
            miner_class = _class_for_rank(rank, population, classes)
            self._class[index] = miner_class
            self._members[miner_class - 1].append(index)
        self._index = {pk: i for i, pk in enumerate(pks)}

    @classmethod
    def from_miners(
        cls, miners: Sequence[MinerRecord], weights: ScoreWeights, classes: int
    ) -> ScoreBoard:
        """Refresh every miner's score and class and return the board."""
        for miner in miners:
            miner.score = compute_score(miner, weights)
        board = cls([m.score for m in miners], [m.pk for m in miners], classes)
        for miner in miners:
            miner.miner_class = board.class_of(miner.index)
        return board

    def __len__(self) -> int:
        return len(self.scores)

    def class_of(self, index: int) -> int:
        return self._class[index]

    def class_size(self, miner_class: int) -> int:
        return len(self._members[miner_class - 1])

    def class_sizes(self) -> tuple[int, ...]:
        return tuple(len(members) for members in self._members)

    def members(self, miner_class: int) -> tuple[int, ...]:
        return tuple(self._members[miner_class - 1])

    def index_of(self, pk: bytes) -> int | None:
        return self._index.get(pk)
