"""Command-line entry point: simulations, baselines, analytics and sweeps."""

from __future__ import annotations

import argparse
import csv
import itertools
import sys
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any

from pydantic import BaseModel
from rich.console import Console
from rich.table import Table

from chainscale import __version__
from chainscale.baselines.sharded import ShardedMarket
from chainscale.baselines.single import simulate_single_sidechain
from chainscale.config.logging import get_logger, setup_logging
from chainscale.config.overrides import apply_overrides, merge_overrides, parse_override
from chainscale.config.scenario import PRESETS, ScenarioConfig, build_scenario, load_scenario
from chainscale.config.settings import get_settings
from chainscale.election.analysis import (
    autorecovery_failure,
    calibrate_liveness_threshold,
    chainscale_autorecovery_bound,
    committee_failure_exact_hypergeometric,
    committee_failure_weighted,
)
from chainscale.errors import ChainScaleError, ConfigError, InvariantViolation
from chainscale.metrics.persist import append_summary
from chainscale.metrics.store import MetricsReport, Observation
from chainscale.recovery.monte_carlo import Population, compare_elections, failure_threshold
from chainscale.simulation.orchestrator import Simulation, write_run

logger = get_logger(__name__)
console = Console()

SYSTEMS = ("chainscale", "single", "sharded")

# argparse exits with 2 on bad usage; 2 is taken by invariant violations.
USAGE_ERROR = 64


def config_keys() -> list[tuple[str, str, str]]:
    """(key, default, description) for every scenario key, nested tables dotted."""
    rows: list[tuple[str, str, str]] = []

    def walk(model: type[BaseModel], prefix: str, defaults: BaseModel) -> None:
        for name, info in model.model_fields.items():
            value = getattr(defaults, name)
            if isinstance(value, BaseModel):
                walk(type(value), f"{prefix}{name}.", value)
                continue
            rows.append((f"{prefix}{name}", repr(value), info.description or ""))

    walk(ScenarioConfig, "", ScenarioConfig())
    return rows


def _epilog() -> str:
    lines = ["config keys (use with --set key=value):"]
    lines.extend(f"  {key} = {default}  {text}" for key, default, text in config_keys())
    return "\n".join(lines)


def _add_scenario_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="TOML scenario file")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="Base preset")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override a config key (repeatable)",
    )
    parser.add_argument("--seed", type=int, help="Master seed")
    parser.add_argument("--out", type=Path, help="Output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chainscale",
        description="Hybrid sidechain-sharding simulator for a file-storage market.",
        epilog=_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", help="Logging level (default from CHAINSCALE_LOG_LEVEL)")
    parser.add_argument("--json-logs", action="store_true", help="Emit JSON log lines")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Simulate the modular sidechain system")
    _add_scenario_args(run)

    baseline = sub.add_parser("baseline", help="Simulate a comparison system")
    _add_scenario_args(baseline)
    baseline.add_argument("--system", choices=("single", "sharded"), required=True)
    baseline.add_argument("--shards", type=int, help="Shard count (default: chain count)")

    analyze = sub.add_parser("analyze", help="Committee failure probabilities")
    analyze.add_argument("--population", type=int, default=10**6, help="Miners N")
    analyze.add_argument("--misbehaving", type=int, help="Misbehaving miners M (default N/4)")
    analyze.add_argument("--committee-size", type=int, default=747)
    analyze.add_argument("--kappa", type=int, default=2, help="Backup committees")
    analyze.add_argument("--theta-l", type=int, default=250, help="Liveness threshold")
    analyze.add_argument("--chains", type=int, default=3, help="Sidechains k in the union bound")
    analyze.add_argument(
        "--class-counts", default="349,249,149", help="Weighted committee members per class"
    )
    analyze.add_argument(
        "--class-rates", default="0.15,0.25,0.35", help="Adversarial rate per class"
    )
    analyze.add_argument("--calibrate", action="store_true", help="Search the liveness threshold")
    analyze.add_argument("--csv", type=Path, help="Also write the table as CSV")

    mc = sub.add_parser("recover-mc", help="Autorecovery Monte Carlo")
    mc.add_argument("--miners", type=int, default=10_000)
    mc.add_argument("--p-lazy", type=float, default=0.25)
    mc.add_argument("--p-malicious", type=float, default=0.25)
    mc.add_argument("--committee-size", type=int, default=100)
    mc.add_argument("--kappa", type=int, default=2)
    mc.add_argument(
        "--theta-l", type=int, help="Misbehaving members that fail a committee (default f+1)"
    )
    mc.add_argument("--step-in", type=float, default=5.0, help="Step-in minutes")
    mc.add_argument("--runs", type=int, default=10_000)
    mc.add_argument("--seed", type=int, default=0)
    mc.add_argument(
        "--split",
        action="append",
        default=[],
        metavar="SEATS,ADVERSARIES",
        help="Weighted split, e.g. 0.6,0.15 for W60-A15 (repeatable)",
    )
    mc.add_argument("--detection", choices=("best", "worst"), default="best")
    mc.add_argument("--out", type=Path, help="Directory for per-run CSV files")

    sweep = sub.add_parser("sweep", help="Run a parameter grid")
    _add_scenario_args(sweep)
    sweep.add_argument(
        "--param",
        action="append",
        default=[],
        metavar="KEY=V1,V2",
        help="Swept key and its values (repeatable; grids multiply)",
    )
    sweep.add_argument("--system", choices=SYSTEMS, default="chainscale")
    sweep.add_argument("--shards", type=int)
    sweep.add_argument("--jobs", type=int, help="Parallel workers (default CHAINSCALE_JOBS)")

    sub.add_parser("config-keys", help="List every config key with its default")
    return parser


def load_config(args: argparse.Namespace) -> ScenarioConfig:
    config = load_scenario(args.config, args.preset)
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    config, fields = apply_overrides(config, overrides)
    if fields:
        logger.info("Config overridden", fields=fields)
    return config


def simulate(
    config: ScenarioConfig, system: str, shards: int | None = None
) -> tuple[MetricsReport, Sequence[Observation]]:
    if system == "single":
        result = simulate_single_sidechain(config)
        return result.report, result.store.observations
    if system == "sharded":
        sharded = ShardedMarket(config, shards).run()
        return sharded.report, sharded.store.observations
    run = Simulation(config).run()
    return run.report, run.store.observations


def _print_report(report: MetricsReport) -> None:
    table = Table(title=report.run_id)
    table.add_column("metric")
    table.add_column("value", justify="right")
    for key, value in report.scalars().items():
        if key == "run_id":
            continue
        text = f"{value:.4f}" if isinstance(value, float) else str(value)
        table.add_row(key, text)
    console.print(table)


def _simulate_and_write(config: ScenarioConfig, system: str, shards: int | None, out: Path) -> int:
    report, observations = simulate(config, system, shards)
    write_run(report, observations, out)
    _print_report(report)
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args)
    return _simulate_and_write(config, "chainscale", None, args.out or get_settings().output_dir)


def cmd_baseline(args: argparse.Namespace) -> int:
    config = load_config(args)
    out = args.out or get_settings().output_dir
    return _simulate_and_write(config, args.system, args.shards, out)


def _ints(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from exc


def _floats(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def cmd_analyze(args: argparse.Namespace) -> int:
    n = args.population
    m = args.misbehaving if args.misbehaving is not None else n // 4
    counts = _ints(args.class_counts)
    rates = _floats(args.class_rates)
    size = args.committee_size
    theta = args.theta_l

    random_failure = committee_failure_exact_hypergeometric(n, [m], [size], theta)
    rows: list[tuple[str, float]] = [
        ("random committee failure", random_failure),
        ("weighted committee failure", committee_failure_weighted(counts, rates, theta)),
    ]
    if (args.kappa + 1) * size <= n:
        p_af = autorecovery_failure(n, m, size, args.kappa, theta)
        rows.append(("autorecovery failure", p_af))
        bound = chainscale_autorecovery_bound(args.chains, p_af)
        rows.append((f"union bound over {args.chains} chains", bound))

    table = Table(title=f"N={n} M={m} S_c={size} kappa={args.kappa} theta_l={theta}")
    table.add_column("quantity")
    table.add_column("probability", justify="right")
    for name, value in rows:
        table.add_row(name, f"{value:.6e}")
    console.print(table)

    if args.calibrate:
        result = calibrate_liveness_threshold(
            committee_size=size,
            adversarial_rate=m / n,
            weighted_counts=counts,
            weighted_rates=rates,
            population=n,
        )
        console.print(
            f"calibrated theta_l={result.theta_l} random={result.random_failure:.3e} "
            f"weighted={result.weighted_failure:.3e} reconciled={result.reconciled}"
        )

    if args.csv is not None:
        args.csv.parent.mkdir(parents=True, exist_ok=True)
        with args.csv.open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["quantity", "probability"])
            writer.writerows((name, repr(float(value))) for name, value in rows)
    return 0


def cmd_recover_mc(args: argparse.Namespace) -> int:
    population = Population(args.miners, args.p_lazy, args.p_malicious)
    splits = []
    for text in args.split or ["0.6,0.15"]:
        values = _floats(text)
        if len(values) != 2:
            raise ConfigError(f"split {text!r} needs SEATS,ADVERSARIES", field="split")
        splits.append((values[0], values[1]))
    theta = args.theta_l if args.theta_l is not None else failure_threshold(args.committee_size)
    results = compare_elections(
        population,
        args.committee_size,
        splits,
        kappa=args.kappa,
        theta=theta,
        step_in_minutes=args.step_in,
        runs=args.runs,
        seed=args.seed,
        detection=args.detection,
    )

    table = Table(
        title=f"Autorecovery (theta_l={theta}, {args.detection} detection, {args.runs} runs)"
    )
    for column in ("election", "mean min", "mean recovered min", "all failed", "stderr"):
        table.add_column(column, justify="right")
    for key, result in results.items():
        table.add_row(
            key,
            f"{result.mean:.3f}",
            f"{result.mean_recovered:.3f}",
            f"{result.failure_rate:.4f}",
            f"{result.failure_stderr:.4f}",
        )
        if args.out is not None:
            result.write_csv(args.out / f"recovery-{key}-s{args.seed}.csv")
    console.print(table)
    return 0


def _sweep_grid(params: Sequence[str]) -> list[dict[str, Any]]:
    axes: list[list[tuple[str, Any]]] = []
    for text in params:
        key, sep, raw = text.partition("=")
        if not sep or not raw:
            raise ConfigError(f"param {text!r} is not key=v1,v2", field="param")
        axes.append([parse_override(f"{key}={value}") for value in raw.split(",")])
    return [dict(point) for point in itertools.product(*axes)]


def _sweep_point(
    data: dict[str, Any], system: str, shards: int | None, out: str
) -> dict[str, Any]:
    config = build_scenario(data)
    report, observations = simulate(config, system, shards)
    write_run(report, observations, out)
    return report.scalars()


def cmd_sweep(args: argparse.Namespace) -> int:
    base = load_config(args)
    points = _sweep_grid(args.param) or [{}]
    out = args.out or get_settings().output_dir
    jobs = args.jobs or get_settings().jobs

    tasks = []
    for index, point in enumerate(points):
        config, _ = merge_overrides(base, point)
        label = "-".join(f"{k}={v}" for k, v in point.items()) or "base"
        target = out / f"point-{index:03d}-{label}"
        tasks.append((config.model_dump(mode="json", exclude={"layout"}), str(target)))

    logger.info("Sweep started", points=len(tasks), jobs=jobs, system=args.system)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(_sweep_point, data, args.system, args.shards, target)
                for data, target in tasks
            ]
            scalars = [future.result() for future in futures]
    else:
        scalars = [
            _sweep_point(data, args.system, args.shards, target) for data, target in tasks
        ]

    summary = out / "summary.csv"
    if summary.exists():
        summary.unlink()
    table = Table(title=f"Sweep ({args.system})")
    table.add_column("point")
    for column in ("throughput", "confirmation_seconds", "storage_bytes", "ctr_percent"):
        table.add_column(column, justify="right")
    for point, row in zip(points, scalars):
        append_summary({**{f"param.{k}": v for k, v in point.items()}, **row}, summary)
        table.add_row(
            ", ".join(f"{k}={v}" for k, v in point.items()) or "base",
            f"{row['throughput']:.2f}",
            f"{row['confirmation_seconds']:.1f}",
            str(row["storage_bytes"]),
            f"{row['ctr_percent']:.2f}",
        )
    console.print(table)
    return 0


def cmd_config_keys(args: argparse.Namespace) -> int:
    table = Table(title="Scenario config keys")
    table.add_column("key")
    table.add_column("default")
    table.add_column("description")
    for row in config_keys():
        table.add_row(*row)
    console.print(table)
    return 0


COMMANDS = {
    "run": cmd_run,
    "baseline": cmd_baseline,
    "analyze": cmd_analyze,
    "recover-mc": cmd_recover_mc,
    "sweep": cmd_sweep,
    "config-keys": cmd_config_keys,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code else 0

    settings = get_settings()
    log_format = "json" if args.json_logs else settings.log_format
    json_format = log_format == "json" or (log_format == "auto" and not sys.stderr.isatty())
    setup_logging(level=args.log_level or settings.effective_log_level, json_format=json_format)

    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        console.print(f"[red]config error[/red]: {exc}")
        return 1
    except InvariantViolation as exc:
        logger.error("Invariant violated", error=str(exc))
        console.print(f"[red]invariant violated[/red]: {exc}")
        return 2
    except ChainScaleError as exc:
        console.print(f"[red]error[/red]: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
