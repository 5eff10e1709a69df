"""Tests for the command-line entry point."""

import csv

import pytest

from chainscale import cli
from chainscale.errors import InvariantViolation

SCENARIO_TOML = """\
seed = 3
num_miners = 60
committee_size = 5
kappa = 1
contracts = 16
run_rounds = 6
epoch_length = 3
rho = 2
side_block_bytes = 4000
main_block_bytes = 20000
"""


@pytest.fixture
def scenario(tmp_path):
    path = tmp_path / "scenario.toml"
    path.write_text(SCENARIO_TOML)
    return path


def _run_cli(*argv):
    return cli.main(["--log-level", "WARNING", *argv])


class TestParser:
    """Tests for argument parsing."""

    def test_subcommand_required(self):
        with pytest.raises(SystemExit):
            cli.build_parser().parse_args([])

    def test_repeatable_overrides(self):
        args = cli.build_parser().parse_args(
            ["run", "--set", "seed=1", "--set", "rho=2", "--seed", "9"]
        )
        assert args.overrides == ["seed=1", "rho=2"]
        assert args.seed == 9

    def test_baseline_needs_system(self):
        with pytest.raises(SystemExit):
            cli.build_parser().parse_args(["baseline"])

    def test_usage_error_exit_code_differs_from_invariant(self):
        assert _run_cli("run", "--bogus") == cli.USAGE_ERROR
        assert cli.USAGE_ERROR not in (0, 1, 2)

    def test_help_exits_zero(self):
        assert _run_cli("--help") == 0


def test_config_keys_cover_nested_tables():
    keys = {key for key, _, _ in cli.config_keys()}
    assert {"seed", "num_miners", "tx_sizes.por", "score_weights.alpha"} <= keys


class TestRun:
    """Tests for ``run`` and ``baseline``."""

    def test_run_writes_files(self, scenario, tmp_path):
        out = tmp_path / "out"
        assert _run_cli("run", "--config", str(scenario), "--out", str(out)) == 0
        for suffix in ("observations", "report", "ledger"):
            assert (out / f"{suffix}_chainscale-1P1M1D-s3.csv").exists()

    def test_seed_flag_overrides_file(self, scenario, tmp_path):
        out = tmp_path / "out"
        assert _run_cli("run", "--config", str(scenario), "--seed", "5", "--out", str(out)) == 0
        assert (out / "report_chainscale-1P1M1D-s5.csv").exists()

    def test_single_baseline(self, scenario, tmp_path):
        out = tmp_path / "out"
        argv = ["baseline", "--system", "single", "--config", str(scenario), "--out", str(out)]
        assert _run_cli(*argv) == 0
        assert (out / "report_single-1P1M1D-s3.csv").exists()

    def test_sharded_baseline(self, scenario, tmp_path):
        out = tmp_path / "out"
        argv = ["baseline", "--system", "sharded", "--shards", "2", "--config", str(scenario)]
        assert _run_cli(*argv, "--out", str(out)) == 0
        assert (out / "report_sharded-2shards-s3.csv").exists()

    def test_config_error_exits_one(self, scenario, tmp_path):
        argv = ["run", "--config", str(scenario), "--set", "num_miners=10"]
        assert _run_cli(*argv, "--out", str(tmp_path)) == 1

    def test_missing_config_exits_one(self, tmp_path):
        assert _run_cli("run", "--config", str(tmp_path / "absent.toml")) == 1

    def test_invariant_violation_exits_two(self, scenario, tmp_path, monkeypatch):
        def broken(*_args, **_kwargs):
            raise InvariantViolation("summary mismatch")

        monkeypatch.setattr(cli, "simulate", broken)
        assert _run_cli("run", "--config", str(scenario), "--out", str(tmp_path)) == 2


class TestAnalyze:
    """Tests for ``analyze``."""

    def test_csv(self, tmp_path):
        path = tmp_path / "analysis.csv"
        argv = [
            "analyze",
            "--population", "1000",
            "--misbehaving", "250",
            "--committee-size", "20",
            "--kappa", "1",
            "--theta-l", "8",
            "--class-counts", "10,6,4",
            "--class-rates", "0.15,0.25,0.35",
            "--csv", str(path),
        ]  # fmt: skip
        assert _run_cli(*argv) == 0
        with path.open() as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ["quantity", "probability"]
        assert all(len(row) == 2 for row in rows)
        assert [row[0] for row in rows[1:]] == [
            "random committee failure",
            "weighted committee failure",
            "autorecovery failure",
            "union bound over 3 chains",
        ]
        values = [float(row[1]) for row in rows[1:]]
        assert all(0.0 <= value <= 1.0 for value in values)
        assert values[3] == pytest.approx(min(1.0, 3 * values[2]))

    def test_bad_class_counts(self):
        assert _run_cli("analyze", "--class-counts", "a,b") == 1


class TestRecoverMonteCarlo:
    """Tests for ``recover-mc``."""

    def test_writes_one_file_per_election(self, tmp_path):
        argv = [
            "recover-mc",
            "--miners", "200",
            "--committee-size", "10",
            "--runs", "20",
            "--split", "0.6,0.15",
            "--out", str(tmp_path),
        ]  # fmt: skip
        assert _run_cli(*argv) == 0
        assert (tmp_path / "recovery-random-s0.csv").exists()
        assert (tmp_path / "recovery-W60-A15-s0.csv").exists()

    @pytest.mark.parametrize(("theta", "any_failure"), [(None, True), ("11", False)])
    def test_theta_l(self, tmp_path, theta, any_failure):
        argv = [
            "recover-mc",
            "--miners", "200",
            "--p-lazy", "0",
            "--p-malicious", "0.3",
            "--committee-size", "10",
            "--runs", "50",
            "--out", str(tmp_path),
        ]  # fmt: skip
        if theta is not None:
            argv += ["--theta-l", theta]
        assert _run_cli(*argv) == 0
        with (tmp_path / "recovery-random-s0.csv").open() as handle:
            minutes = [float(row["recovery_minutes"]) for row in csv.DictReader(handle)]
        assert len(minutes) == 50
        assert any(m > 0 for m in minutes) is any_failure

    def test_malformed_split(self, tmp_path):
        argv = ["recover-mc", "--miners", "200", "--committee-size", "10", "--split", "0.6"]
        assert _run_cli(*argv, "--runs", "5") == 1


class TestSweep:
    """Tests for ``sweep``."""

    def test_grid_multiplies(self):
        grid = cli._sweep_grid(["seed=1,2", "rho=2,3"])
        assert grid == [
            {"seed": 1, "rho": 2},
            {"seed": 1, "rho": 3},
            {"seed": 2, "rho": 2},
            {"seed": 2, "rho": 3},
        ]

    def test_malformed_param(self):
        with pytest.raises(cli.ConfigError):
            cli._sweep_grid(["seed"])

    def test_summary(self, scenario, tmp_path):
        out = tmp_path / "sweep"
        argv = ["sweep", "--config", str(scenario), "--param", "seed=1,2", "--jobs", "1"]
        assert _run_cli(*argv, "--out", str(out)) == 0
        assert (out / "point-000-seed=1" / "report_chainscale-1P1M1D-s1.csv").exists()
        assert (out / "point-001-seed=2" / "report_chainscale-1P1M1D-s2.csv").exists()
        lines = (out / "summary.csv").read_text().splitlines()
        assert lines[0] == "# schema chainscale-summary v1"
        assert lines[1].startswith("param.seed,")
        assert len(lines) == 4

    def test_unknown_swept_key(self, scenario, tmp_path):
        argv = ["sweep", "--config", str(scenario), "--param", "bogus=1", "--jobs", "1"]
        assert _run_cli(*argv, "--out", str(tmp_path)) == 1


def test_config_keys_command():
    assert _run_cli("config-keys") == 0
