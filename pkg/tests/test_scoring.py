"""Unit tests for miner scores and score classes."""

import numpy as np
import pytest

from chainscale.config.scenario import ScoreWeightsConfig
from chainscale.core.types import MinerRecord
from chainscale.election.scoring import ScoreBoard, ScoreWeights, assign_class, compute_score
from chainscale.errors import EmptyPopulation, InvalidWeights


class TestScoreWeights:
    """Tests for ScoreWeights validation."""

    def test_from_config(self):
        weights = ScoreWeights.from_config(ScoreWeightsConfig())
        assert (weights.alpha, weights.beta, weights.gamma) == (0.5, 0.3, 0.2)

    def test_must_sum_to_one(self):
        with pytest.raises(InvalidWeights, match="sum"):
            ScoreWeights(0.5, 0.5, 0.5)

    def test_must_be_nonnegative(self):
        with pytest.raises(InvalidWeights):
            ScoreWeights(1.2, 0.0, -0.2)


def test_compute_score():
    record = MinerRecord(index=0, pk=b"\x00", mining_power=4.0, participation=10, disputes=3)
    assert compute_score(record, ScoreWeights(0.5, 0.3, 0.2)) == pytest.approx(
        0.5 * 4.0 + 0.3 * 10 - 0.2 * 3
    )


class TestAssignClass:
    """Tests for assign_class."""

    @pytest.mark.parametrize(("score", "expected"), [(4.0, 1), (3.0, 1), (2.0, 2), (1.0, 2)])
    def test_two_classes(self, score, expected):
        assert assign_class(score, [1.0, 2.0, 3.0, 4.0], 2) == expected

    def test_ranks_fill_classes_evenly(self):
        scores = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
        assert [assign_class(s, scores, 3) for s in scores] == [3, 3, 2, 2, 1, 1]

    def test_ties_without_pks_share_a_class(self):
        scores = [1.0, 1.0, 1.0, 1.0]
        assert {assign_class(s, scores, 2) for s in scores} == {2}

    def test_ties_broken_by_pk(self):
        scores = [1.0, 1.0]
        pks = [b"\x01", b"\x02"]
        assert assign_class(1.0, scores, 2, pk=b"\x01", pks=pks) == 1
        assert assign_class(1.0, scores, 2, pk=b"\x02", pks=pks) == 2

    def test_empty_population(self):
        with pytest.raises(EmptyPopulation):
            assign_class(1.0, [], 2)


class TestScoreBoard:
    """Tests for the epoch ranking."""

    def test_class_one_holds_floor_n_over_c(self):
        board = ScoreBoard([5.0, 4.0, 3.0, 2.0, 1.0], [bytes([i]) for i in range(5)], 2)
        assert board.class_sizes() == (2, 3)
        assert board.members(1) == (0, 1)

    def test_equal_scores_ranked_by_pk(self):
        board = ScoreBoard([1.0, 1.0, 1.0, 1.0], [b"\x04", b"\x03", b"\x02", b"\x01"], 2)
        assert board.members(1) == (3, 2)
        assert board.class_of(0) == 2

    def test_matches_assign_class(self):
        rng = np.random.default_rng(3)
        scores = [float(s) for s in rng.integers(0, 6, size=30)]
        pks = [rng.bytes(8) for _ in scores]
        board = ScoreBoard(scores, pks, 3)
        for i, (score, pk) in enumerate(zip(scores, pks)):
            assert board.class_of(i) == assign_class(score, scores, 3, pk=pk, pks=pks)

    def test_from_miners_refreshes_records(self):
        miners = [
            MinerRecord(index=i, pk=bytes([i]), mining_power=float(i)) for i in range(4)
        ]
        board = ScoreBoard.from_miners(miners, ScoreWeights(1.0, 0.0, 0.0), 2)
        assert [m.score for m in miners] == [0.0, 1.0, 2.0, 3.0]
        assert [m.miner_class for m in miners] == [2, 2, 1, 1]
        assert board.index_of(bytes([3])) == 3

    def test_empty(self):
        with pytest.raises(EmptyPopulation):
            ScoreBoard([], [], 2)
