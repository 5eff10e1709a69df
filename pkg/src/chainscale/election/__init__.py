"""Miner scoring, VRF sortition and committee failure analytics."""

from chainscale.election.analysis import (
    CalibrationResult,
    autorecovery_failure,
    calibrate_liveness_threshold,
    chainscale_autorecovery_bound,
    committee_failure_exact_hypergeometric,
    committee_failure_weighted,
    derive_quotas,
)
from chainscale.election.scoring import ScoreBoard, ScoreWeights, assign_class, compute_score
from chainscale.election.sortition import (
    ClassQuota,
    ElectionResult,
    SlotId,
    SortitionOutcome,
    apportion,
    derive_seeds,
    elect,
    run_sortition,
    verify_election,
)
from chainscale.election.vrf import VrfKeypair, VrfOutput, vrf_verify

__all__ = [
    "CalibrationResult",
    "ClassQuota",
    "ElectionResult",
    "ScoreBoard",
    "ScoreWeights",
    "SlotId",
    "SortitionOutcome",
    "VrfKeypair",
    "VrfOutput",
    "apportion",
    "assign_class",
    "autorecovery_failure",
    "calibrate_liveness_threshold",
    "chainscale_autorecovery_bound",
    "committee_failure_exact_hypergeometric",
    "committee_failure_weighted",
    "compute_score",
    "derive_quotas",
    "derive_seeds",
    "elect",
    "run_sortition",
    "verify_election",
]
