"""Tests for the recovery-time Monte Carlo."""

import csv
import math

import pytest

from chainscale.config.scenario import liveness_threshold
from chainscale.election.analysis import autorecovery_failure
from chainscale.errors import InvalidCounts, InvalidProbability
from chainscale.recovery.monte_carlo import (
    Population,
    WeightedElection,
    compare_elections,
    failure_threshold,
    monte_carlo_recovery,
)


@pytest.mark.parametrize(
    ("size", "liveness", "safety"),
    [(2, 1, 2), (5, 2, 4), (8, 3, 6), (100, 33, 66), (500, 167, 334)],
)
def test_failure_threshold(size, liveness, safety):
    assert failure_threshold(size) == liveness == liveness_threshold(size)
    assert failure_threshold(size, "safety") == safety


class TestPopulation:
    """Tests for Population and WeightedElection."""

    def test_misbehaving(self):
        assert Population(1000, 0.1, 0.15).misbehaving == 250

    def test_rates_validated(self):
        with pytest.raises(InvalidProbability):
            Population(100, 0.7, 0.5)
        with pytest.raises(InvalidCounts):
            Population(0)

    def test_two_class_split(self):
        election = WeightedElection.two_class(Population(1000, 0.0, 0.25), 100, 0.6, 0.15)
        assert election.class_sizes == (500, 500)
        assert election.misbehaving == (38, 212)
        assert election.quotas == (60, 40)
        assert election.committee_size == 100

    def test_adversaries_spill_into_class_two(self):
        election = WeightedElection.two_class(Population(10, 0.0, 0.8), 4, 0.5, 1.0)
        assert election.misbehaving == (5, 3)

    def test_inconsistent_election(self):
        with pytest.raises(InvalidCounts):
            WeightedElection((10,), (11,), (2,))


class TestMonteCarloRecovery:
    """Tests for monte_carlo_recovery."""

    def test_honest_population_recovers_at_once(self):
        result = monte_carlo_recovery(Population(100), 10, runs=50)
        assert result.mean == 0.0
        assert result.failure_rate == 0.0
        assert result.histogram() == {0: 50}

    def test_all_misbehaving_exhausts_every_committee(self):
        result = monte_carlo_recovery(
            Population(100, 1.0), 10, kappa=2, step_in_minutes=5.0, runs=20
        )
        assert result.failure_rate == 1.0
        assert result.mean == pytest.approx(15.0)
        assert math.isnan(result.mean_recovered)

    def test_worst_case_detection_adds_delay(self):
        best = monte_carlo_recovery(Population(100, 1.0), 10, kappa=1, runs=10)
        worst = monte_carlo_recovery(
            Population(100, 1.0), 10, kappa=1, runs=10, detection="worst"
        )
        assert worst.mean == pytest.approx(best.mean + 2 * 5.0)

    def test_seeded(self):
        first = monte_carlo_recovery(Population(200, 0.1, 0.2), 20, runs=500, seed=4)
        second = monte_carlo_recovery(Population(200, 0.1, 0.2), 20, runs=500, seed=4)
        assert (first.times == second.times).all()

    def test_seats_exceed_population(self):
        with pytest.raises(InvalidCounts):
            monte_carlo_recovery(Population(20), 10, kappa=2, runs=1)

    def test_weighted_class_too_small(self):
        election = WeightedElection((10, 10), (0, 0), (6, 1))
        with pytest.raises(InvalidCounts):
            monte_carlo_recovery(Population(20), 7, election=election, kappa=1, runs=1)

    def test_matches_analytic_failure(self):
        population = Population(60, 0.0, 0.5)
        runs = 20_000
        result = monte_carlo_recovery(population, 5, kappa=1, theta=3, runs=runs, seed=1)
        expected = autorecovery_failure(60, 30, 5, 1, 3)
        assert abs(result.failure_rate - expected) <= 3 * math.sqrt(
            expected * (1 - expected) / runs
        )

    def test_default_threshold_is_liveness(self):
        population = Population(60, 0.0, 0.5)
        runs = 20_000
        result = monte_carlo_recovery(population, 5, kappa=1, runs=runs, seed=2)
        expected = autorecovery_failure(60, 30, 5, 1, liveness_threshold(5))
        assert abs(result.failure_rate - expected) <= 3 * math.sqrt(
            expected * (1 - expected) / runs
        )

    def test_two_misbehaving_of_five_fail_by_default(self):
        election = WeightedElection((10,), (2,), (5,))
        default = monte_carlo_recovery(Population(10), 5, election=election, kappa=0, runs=200)
        safety = monte_carlo_recovery(
            Population(10), 5, election=election, kappa=0, theta=4, runs=200
        )
        assert default.failure_rate > 0.0
        assert safety.failure_rate == 0.0

    def test_write_csv(self, tmp_path):
        result = monte_carlo_recovery(Population(100, 0.2), 10, runs=5)
        path = result.write_csv(tmp_path / "mc" / "recovery.csv")
        with path.open() as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ["run", "failed_committees", "exhausted", "recovery_minutes"]
        assert len(rows) == 6
        assert [float(row[3]) for row in rows[1:]] == list(result.times)


class TestCompareElections:
    """Tests for random against weighted sortition."""

    def test_keys(self):
        results = compare_elections(
            Population(1000, 0.1, 0.1), 20, [(0.6, 0.15), (0.8, 0.1)], runs=50
        )
        assert list(results) == ["random", "W60-A15", "W80-A10"]

    @pytest.mark.parametrize("p_lazy", [0.25, 0.3])
    @pytest.mark.parametrize("p_malicious", [0.25, 0.3])
    def test_weighted_recovers_no_slower(self, p_lazy, p_malicious):
        population = Population(10_000, p_lazy, p_malicious)
        results = compare_elections(population, 100, [(0.6, 0.15)], runs=2000, seed=3)
        assert results["W60-A15"].mean <= results["random"].mean
