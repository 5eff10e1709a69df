"""Autorecovery protocol and its Monte Carlo harness."""

from chainscale.recovery.autorecovery import (
    DependencyGraph,
    Directive,
    InterruptionEvent,
    InterruptionKind,
    detect_interruption,
    failover,
    gate_on_dependency,
    mass_sync,
    resume_if_due,
    summary_for,
    view_change,
)
from chainscale.recovery.monte_carlo import (
    MonteCarloResult,
    Population,
    WeightedElection,
    compare_elections,
    failure_threshold,
    monte_carlo_recovery,
)

__all__ = [
    "DependencyGraph",
    "Directive",
    "InterruptionEvent",
    "InterruptionKind",
    "MonteCarloResult",
    "Population",
    "WeightedElection",
    "compare_elections",
    "failure_threshold",
    "detect_interruption",
    "failover",
    "gate_on_dependency",
    "mass_sync",
    "monte_carlo_recovery",
    "resume_if_due",
    "summary_for",
    "view_change",
]
