"""Scenario runs: the modular sidechain system and its population."""

from chainscale.simulation.orchestrator import (
    Simulation,
    SimulationResult,
    run_experiment,
    write_run,
)
from chainscale.simulation.population import build_population

__all__ = [
    "Simulation",
    "SimulationResult",
    "build_population",
    "run_experiment",
    "write_run",
]
