"""Observations, run reports and their CSV persistence."""

from chainscale.metrics.persist import (
    append_summary,
    export_ledger,
    read_observations,
    read_report,
    write_observations,
    write_report,
    write_summary,
)
from chainscale.metrics.store import (
    MetricsReport,
    MetricsStore,
    Observation,
    ObservationKind,
    RoundPoint,
    aggregate,
    round_series,
)

__all__ = [
    "MetricsReport",
    "MetricsStore",
    "Observation",
    "ObservationKind",
    "RoundPoint",
    "aggregate",
    "append_summary",
    "export_ledger",
    "read_observations",
    "read_report",
    "round_series",
    "write_observations",
    "write_report",
    "write_summary",
]
