"""Exception hierarchy for chainscale.

Every error raised by the package derives from :class:`ChainScaleError`. The CLI
maps :class:`ConfigError` to exit code 1 and :class:`InvariantViolation` to exit
code 2.
"""

from __future__ import annotations


class ChainScaleError(Exception):
    """Base class for all chainscale errors."""


class ConfigError(ChainScaleError, ValueError):
    """A scenario or settings value is invalid.

    Attributes:
        field: Dotted name of the offending config key, when known.
    """

    def __init__(self, message: str, field: str | None = None) -> None:
        self.field = field
        if field and field not in message:
            message = f"{field}: {message}"
        super().__init__(message)


# Encoding


class EncodingError(ChainScaleError):
    """Base class for byte-level codec failures."""


class MalformedEncoding(EncodingError):
    """Bytes are truncated, garbled, or inconsistent with the routing table."""


# Routing / module tables


class RoutingError(ChainScaleError):
    """Base class for traffic classification failures."""


class UnknownPrefix(RoutingError):
    """A prefix byte names no configured chain."""


class UnassignedType(RoutingError):
    """A transaction type is owned by no module and is not mainchain-routed."""


class BadModuleTable(RoutingError):
    """A module table leaves a service type unassigned or assigns it twice."""


# Election and analytics


class ElectionError(ChainScaleError):
    """Base class for scoring, sortition and analytic calculator failures."""


class InvalidWeights(ElectionError):
    """Score weights are negative or do not sum to one."""


class EmptyPopulation(ElectionError):
    """A percentile was requested over an empty population."""


class QuotaInfeasible(ElectionError):
    """A class is asked for more members than it has."""


class InvalidProbability(ElectionError):
    """A probability lies outside [0, 1]."""


class InvalidCounts(ElectionError):
    """Population, draw or threshold counts are inconsistent."""


class Infeasible(ElectionError):
    """No committee composition meets the target failure probability."""


# Chains


class ChainError(ChainScaleError):
    """Base class for chain engine failures."""


class ConsensusFailure(ChainError):
    """A committee could not gather enough votes for a block."""

    def __init__(self, chain_id: str, votes: int, required: int) -> None:
        self.chain_id = chain_id
        self.votes = votes
        self.required = required
        super().__init__(f"{chain_id}: {votes} votes, {required} required")


class InvalidSummary(ChainError):
    """A sync-transaction does not match the ledger it claims to summarize."""


class PruneBeforeConfirm(ChainError):
    """Meta-blocks were pruned before their epoch's sync was confirmed."""


class NoCapacity(ChainError):
    """Remaining miner pools cannot seat even one minimum-size committee."""


# Recovery


class RecoveryError(ChainScaleError):
    """Base class for autorecovery failures."""


class AllCommitteesExhausted(RecoveryError):
    """The primary and every backup committee of a chain failed this epoch."""


# Invariants


class InvariantViolation(ChainScaleError):
    """An internal invariant was broken; the run cannot be trusted."""


class MissingMetaBlocks(InvariantViolation):
    """An unsynced epoch has neither meta-blocks nor a stored summary-block."""


class DuplicateConfirmation(InvariantViolation):
    """The same transaction was confirmed twice."""


class IncompleteRun(InvariantViolation):
    """Generated transactions remain neither confirmed nor rejected."""
