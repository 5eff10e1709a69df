"""Single-sidechain comparator: every service transaction on one sidechain."""

from __future__ import annotations

from chainscale.config.scenario import ScenarioConfig, build_scenario
from chainscale.core.modules import single_module_table
from chainscale.metrics.store import MetricsReport
from chainscale.simulation.orchestrator import Simulation, SimulationResult

SYSTEM = "single"


def single_sidechain_config(config: ScenarioConfig) -> ScenarioConfig:
    """The same scenario with one module owning all service types.

    Summaries, syncs, pruning and recovery stay as configured. Scripted
    module events retarget the single module; class shares are the mean of
    the configured modules' shares.

    Raises:
        ConfigError: if the rewritten scenario does not validate
    """
    (spec,) = single_module_table().modules
    data = config.model_dump(mode="json", exclude={"layout"})
    shares = list(config.class_shares.values())
    mean_shares = (
        [sum(column) / len(shares) for column in zip(*shares)]
        if shares
        else [1.0 / config.classes] * config.classes
    )
    data.update(
        modules=[
            {
                "id": spec.module_id,
                "key": spec.key,
                "name": spec.name,
                "tx_types": sorted(t.value for t in spec.tx_types),
            }
        ],
        dependencies={},
        priority=[spec.key],
        class_shares={spec.key: mean_shares},
        subchains=1,
        match_subchains=1,
        dispute_subchains=1,
        events=[
            {**event, "module": spec.key} if event["kind"] != "rollback" else event
            for event in data["events"]
        ],
    )
    return build_scenario(data)


def simulate_single_sidechain(config: ScenarioConfig) -> SimulationResult:
    return Simulation(single_sidechain_config(config), system=SYSTEM).run()


def run_single_sidechain(config: ScenarioConfig) -> MetricsReport:
    return simulate_single_sidechain(config).report
