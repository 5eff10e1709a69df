"""Unit tests for the observation store, the report and CSV persistence."""

import pytest

from chainscale.errors import DuplicateConfirmation, IncompleteRun, InvariantViolation
from chainscale.metrics.persist import (
    OBSERVATIONS_SCHEMA,
    append_summary,
    export_ledger,
    read_observations,
    read_report,
    write_observations,
    write_report,
    write_summary,
)
from chainscale.metrics.store import (
    MetricsStore,
    Observation,
    ObservationKind,
    aggregate,
    round_series,
)

K = ObservationKind


def _store() -> MetricsStore:
    """Three txs: two confirmed (latencies 1 and 3 rounds), one rejected."""
    store = MetricsStore("run-a")
    for tx_id in (1, 2, 3):
        store.emit(0, "side-2.0", K.TX_GENERATED, tx_id=tx_id)
    store.emit(1, "side-2.0", K.BLOCK_PRODUCED, size_bytes=400, tx_count=2, epoch=0)
    store.emit(1, "main", K.BLOCK_PRODUCED, size_bytes=80, persistent=True)
    store.emit(1, "main", K.TX_CONFIRMED, tx_id=1, latency_rounds=1.0)
    store.emit(1, "side-2.0", K.TX_REJECTED, tx_id=3)
    store.emit(3, "main", K.BLOCK_PRODUCED, size_bytes=1200, persistent=True, epoch=0)
    store.emit(3, "main", K.TX_CONFIRMED, tx_id=2, latency_rounds=3.0)
    store.emit(3, "side-2.0", K.PRUNED, size_bytes=400, epoch=0)
    return store


class TestMetricsStore:
    """Tests for MetricsStore."""

    def test_counts(self):
        store = _store()
        assert len(store) == 11
        assert store.count(K.TX_GENERATED) == 3
        assert store.observations[0].run_id == "run-a"

    def test_duplicate_confirmation(self):
        store = MetricsStore("run-b")
        store.emit(0, "main", K.TX_CONFIRMED, tx_id=9)
        with pytest.raises(DuplicateConfirmation):
            store.emit(1, "main", K.TX_CONFIRMED, tx_id=9)


class TestAggregate:
    """Tests for the run report."""

    def test_report(self):
        report = aggregate(_store().observations, run_rounds=2, round_seconds=30.0)
        assert (report.generated, report.confirmed, report.rejected) == (3, 2, 1)
        assert report.confirmed_in_window == 1
        assert report.throughput == 0.5
        assert report.confirmation_seconds == pytest.approx(60.0)
        assert report.storage_bytes == 1280
        assert report.rounds_total == 4
        assert report.ctr_percent == 0.0
        assert report.run_id == "run-a"

    def test_incomplete_run(self):
        store = MetricsStore("run-c")
        store.emit(0, "side-1.0", K.TX_GENERATED, tx_id=1)
        with pytest.raises(IncompleteRun):
            aggregate(store.observations, run_rounds=1)

    def test_rollback_subtracts_storage(self):
        store = _store()
        store.emit(3, "main", K.ROLLED_BACK, size_bytes=1024)
        assert aggregate(store.observations, run_rounds=4).storage_bytes == 256

    def test_cross_chain_and_recovery(self):
        store = MetricsStore("run-d")
        for tx_id in range(4):
            store.emit(0, "shard-0", K.TX_GENERATED, tx_id=tx_id)
            store.emit(2, "shard-0", K.TX_CONFIRMED, tx_id=tx_id, latency_rounds=2.0)
        store.emit(1, "shard-0", K.CROSS_CHAIN_FORWARD, tx_id=0)
        store.emit(1, "side-2.0", K.COMMITTEE_FAILED)
        store.emit(1, "side-2.0", K.RECOVERED, latency_rounds=3.0)
        report = aggregate(store.observations, run_rounds=3, side_round_seconds=10.0)
        assert report.ctr_percent == 25.0
        assert report.forwards == 1
        assert report.committee_failures == 1
        assert report.recovery_time_min == pytest.approx(0.5)

    def test_empty_run(self):
        report = aggregate([], run_rounds=5, run_id="idle")
        assert report.throughput == 0.0
        assert report.confirmation_seconds == 0.0
        assert report.series == ()


def test_round_series():
    series = round_series(_store().observations)
    assert [p.confirmed for p in series] == [0, 1, 0, 1]
    assert [p.storage_bytes for p in series] == [0, 480, 480, 1280]
    assert [p.persistent_bytes for p in series] == [0, 80, 80, 1280]
    assert [p.backlog for p in series] == [3, 1, 1, 0]


class TestPersistence:
    """Tests for the CSV files."""

    def test_observations_read_back(self, tmp_path):
        observations = _store().observations
        path = write_observations(observations, tmp_path / "out" / "run.observations.csv")
        assert path.read_text().splitlines()[0] == OBSERVATIONS_SCHEMA
        assert read_observations(path) == list(observations)

    def test_wrong_schema(self, tmp_path):
        path = tmp_path / "bogus.csv"
        path.write_text("run_id,round\n")
        with pytest.raises(InvariantViolation, match="schema"):
            read_observations(path)

    def test_report_read_back(self, tmp_path):
        report = aggregate(_store().observations, run_rounds=2)
        values = read_report(write_report(report, tmp_path / "run.report.csv"))
        assert values == report.scalars()

    def test_summary_appends_rows(self, tmp_path):
        path = tmp_path / "summary.csv"
        append_summary({"label": "a", "throughput": 1.5}, path)
        append_summary({"label": "b", "throughput": 2.0}, path)
        lines = path.read_text().splitlines()
        assert lines == ["# schema chainscale-summary v1", "label,throughput", "a,1.5", "b,2.0"]

    def test_write_summary_replaces_file(self, tmp_path):
        path = tmp_path / "summary.csv"
        append_summary({"label": "old"}, path)
        write_summary([{"label": "new"}], path)
        assert path.read_text().splitlines()[1:] == ["label", "new"]

    def test_ledger_lists_blocks(self, tmp_path):
        observations = [
            Observation("r", 0, "main", K.BLOCK_PRODUCED, size_bytes=80, persistent=True),
            Observation("r", 0, "side-1.0", K.TX_GENERATED, tx_id=1),
            Observation("r", 1, "side-1.0", K.BLOCK_PRODUCED, size_bytes=0, empty=True, epoch=0),
        ]
        lines = export_ledger(observations, tmp_path / "ledger.csv").read_text().splitlines()
        assert lines[1] == "round,chain_id,epoch,size_bytes,tx_count,empty,persistent"
        assert lines[2:] == ["0,main,,80,0,0,1", "1,side-1.0,0,0,0,1,0"]
