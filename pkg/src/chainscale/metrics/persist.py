"""Flat CSV persistence for observations, reports and ledgers.

Every file starts with a ``# schema <name> v<N>`` comment line followed by
a header row. Floats are written with ``repr`` so they read back exactly.
"""

from __future__ import annotations

import csv
from collections.abc import Iterable, Sequence
from dataclasses import fields
from pathlib import Path
from typing import Any

from chainscale.config.logging import get_logger
from chainscale.errors import InvariantViolation
from chainscale.metrics.store import MetricsReport, Observation, ObservationKind

logger = get_logger(__name__)

OBSERVATIONS_SCHEMA = "# schema chainscale-observations v1"
REPORT_SCHEMA = "# schema chainscale-report v1"
SUMMARY_SCHEMA = "# schema chainscale-summary v1"
LEDGER_SCHEMA = "# schema chainscale-ledger v1"

OBSERVATION_COLUMNS = [f.name for f in fields(Observation)]
LEDGER_COLUMNS = ["round", "chain_id", "epoch", "size_bytes", "tx_count", "empty", "persistent"]


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, ObservationKind):
        return value.value
    return str(value)


def _optional_int(text: str) -> int | None:
    return int(text) if text else None


def _optional_float(text: str) -> float | None:
    return float(text) if text else None


def _open_rows(path: Path, schema: str) -> list[dict[str, str]]:
    with path.open(newline="") as handle:
        first = handle.readline().rstrip("\r\n")
        if first != schema:
            raise InvariantViolation(f"{path}: expected {schema!r}, found {first!r}")
        return list(csv.DictReader(handle))


def write_observations(observations: Iterable[Observation], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        handle.write(OBSERVATIONS_SCHEMA + "\n")
        writer = csv.writer(handle)
        writer.writerow(OBSERVATION_COLUMNS)
        for obs in observations:
            writer.writerow([_cell(getattr(obs, name)) for name in OBSERVATION_COLUMNS])
    return path


def read_observations(path: str | Path) -> list[Observation]:
    return [
        Observation(
            run_id=row["run_id"],
            round=int(row["round"]),
            chain_id=row["chain_id"],
            kind=ObservationKind(row["kind"]),
            tx_id=_optional_int(row["tx_id"]),
            latency_rounds=_optional_float(row["latency_rounds"]),
            size_bytes=int(row["size_bytes"]),
            tx_count=int(row["tx_count"]),
            empty=row["empty"] == "1",
            persistent=row["persistent"] == "1",
            epoch=_optional_int(row["epoch"]),
        )
        for row in _open_rows(Path(path), OBSERVATIONS_SCHEMA)
    ]


def write_report(report: MetricsReport, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    scalars = report.scalars()
    with path.open("w", newline="") as handle:
        handle.write(REPORT_SCHEMA + "\n")
        writer = csv.writer(handle)
        writer.writerow(list(scalars))
        writer.writerow([_cell(v) for v in scalars.values()])
    return path


def read_report(path: str | Path) -> dict[str, Any]:
    """Scalar report fields, typed as in :meth:`MetricsReport.scalars`."""
    rows = _open_rows(Path(path), REPORT_SCHEMA)
    if len(rows) != 1:
        raise InvariantViolation(f"{path}: expected one report row, found {len(rows)}")
    row = rows[0]
    typed: dict[str, Any] = {}
    for name, value in row.items():
        if name == "run_id":
            typed[name] = value
        elif name in ("throughput", "confirmation_seconds", "ctr_percent", "recovery_time_min"):
            typed[name] = float(value)
        else:
            typed[name] = int(value)
    return typed


def append_summary(row: dict[str, Any], path: str | Path) -> Path:
    """Add one run's row to a cross-run summary file, creating it if needed."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fresh = not path.exists()
    with path.open("a", newline="") as handle:
        if fresh:
            handle.write(SUMMARY_SCHEMA + "\n")
        writer = csv.writer(handle)
        if fresh:
            writer.writerow(list(row))
        writer.writerow([_cell(v) for v in row.values()])
    return path


def write_summary(rows: Sequence[dict[str, Any]], path: str | Path) -> Path:
    path = Path(path)
    if path.exists():
        path.unlink()
    for row in rows:
        append_summary(row, path)
    return path


def export_ledger(observations: Iterable[Observation], path: str | Path) -> Path:
    """One record per produced block, with its size and whether it persists."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", newline="") as handle:
        handle.write(LEDGER_SCHEMA + "\n")
        writer = csv.writer(handle)
        writer.writerow(LEDGER_COLUMNS)
        for obs in observations:
            if obs.kind is not ObservationKind.BLOCK_PRODUCED:
                continue
            writer.writerow(
                [
                    obs.round,
                    obs.chain_id,
                    _cell(obs.epoch),
                    obs.size_bytes,
                    obs.tx_count,
                    _cell(obs.empty),
                    _cell(obs.persistent),
                ]
            )
            count += 1
    logger.info("Ledger exported", path=str(path), blocks=count)
    return path
