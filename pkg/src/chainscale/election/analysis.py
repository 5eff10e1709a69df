"""Committee and autorecovery failure probabilities.

All calculators build the full distribution of the misbehaving-member count
by convolving per-class distributions, then sum its upper tail directly so
tails near 1e-12 keep full relative precision.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom, hypergeom

from chainscale.config.logging import get_logger
from chainscale.errors import Infeasible, InvalidCounts, InvalidProbability

logger = get_logger(__name__)


def _check_counts(counts: Sequence[int], name: str) -> list[int]:
    values = [int(n) for n in counts]
    if any(n < 0 for n in values):
        raise InvalidCounts(f"{name} must be nonnegative: {values}")
    return values


def _check_probabilities(probabilities: Sequence[float]) -> list[float]:
    values = [float(p) for p in probabilities]
    for p in values:
        if not 0.0 <= p <= 1.0 or math.isnan(p):
            raise InvalidProbability(f"probability {p} outside [0, 1]")
    return values


def _convolve_all(distributions: Sequence[np.ndarray]) -> np.ndarray:
    total = np.array([1.0])
    for dist in distributions:
        total = np.convolve(total, dist)
    return total


def _tail(dist: np.ndarray, theta_l: int) -> float:
    if theta_l <= 0:
        return 1.0
    if theta_l >= len(dist):
        return 0.0
    return float(min(1.0, dist[theta_l:].sum()))


def weighted_distribution(n: Sequence[int], p: Sequence[float]) -> np.ndarray:
    """Distribution of misbehaving members, independent binomial per class."""
    counts = _check_counts(n, "class counts")
    probs = _check_probabilities(p)
    if len(counts) != len(probs):
        raise InvalidCounts("need one probability per class")
    return _convolve_all([binom.pmf(np.arange(k + 1), k, q) for k, q in zip(counts, probs)])


def committee_failure_weighted(n: Sequence[int], p: Sequence[float], theta_l: int) -> float:
    """Probability that at least ``theta_l`` members of the committee misbehave.

    Args:
        n: Members drawn from each class
        p: Adversarial rate of each class
        theta_l: Liveness threshold (absent or withheld votes)

    Returns:
        1 - Pr(committee succeeds)
    """
    dist = weighted_distribution(n, p)
    if theta_l > len(dist) - 1:
        raise InvalidCounts(f"theta_l {theta_l} exceeds committee size {len(dist) - 1}")
    return _tail(dist, theta_l)


def hypergeometric_distribution(
    mu: int | Sequence[int], m: Sequence[int], n: Sequence[int]
) -> np.ndarray:
    """Distribution of misbehaving members, sampling each class without replacement."""
    bad = _check_counts(m, "misbehaving counts")
    drawn = _check_counts(n, "draw counts")
    if len(bad) != len(drawn):
        raise InvalidCounts("need one misbehaving count per class")
    sizes = _check_counts([mu] * len(bad) if isinstance(mu, int) else mu, "class sizes")
    if len(sizes) != len(bad):
        raise InvalidCounts("need one class size per class")
    dists = []
    for size, bad_i, drawn_i in zip(sizes, bad, drawn):
        if bad_i > size or drawn_i > size:
            raise InvalidCounts(f"class of {size} cannot hold {bad_i} bad or yield {drawn_i}")
        dists.append(hypergeom.pmf(np.arange(drawn_i + 1), size, bad_i, drawn_i))
    return _convolve_all(dists)


def committee_failure_exact_hypergeometric(
    mu: int | Sequence[int], m: Sequence[int], n: Sequence[int], theta_l: int
) -> float:
    """Exact committee failure probability under sampling without replacement.

    Args:
        mu: Class size (one value for all classes, or one per class)
        m: Misbehaving miners in each class
        n: Members drawn from each class
        theta_l: Liveness threshold
    """
    dist = hypergeometric_distribution(mu, m, n)
    if theta_l > len(dist) - 1:
        raise InvalidCounts(f"theta_l {theta_l} exceeds committee size {len(dist) - 1}")
    return _tail(dist, theta_l)


def autorecovery_failure(n: int, m: int, committee_size: int, kappa: int, theta_l: int) -> float:
    """Probability that the primary and all ``kappa`` backups fail.

    The ``(kappa+1) * committee_size`` seats are filled from ``n`` miners of
    which ``m`` misbehave. Given ``i`` misbehaving seats, the fraction of
    seat assignments in which every committee reaches ``theta_l`` is the
    ``y^i`` coefficient of ``(sum_{j >= theta_l} C(S, j) y^j)^(kappa+1)`` over
    ``C((kappa+1) S, i)``. Coefficients are exact integers.
    """
    if min(n, m, committee_size, kappa, theta_l) < 0:
        raise InvalidCounts("counts must be nonnegative")
    seats = (kappa + 1) * committee_size
    if seats > n or m > n:
        raise InvalidCounts(f"{seats} seats or {m} misbehaving exceed population {n}")
    if theta_l > committee_size:
        raise InvalidCounts(f"theta_l {theta_l} exceeds committee size {committee_size}")
    if m == 0 and theta_l > 0:
        return 0.0

    factor = np.zeros(committee_size + 1, dtype=object)
    for j in range(theta_l, committee_size + 1):
        factor[j] = math.comb(committee_size, j)
    psi = np.array([1], dtype=object)
    for _ in range(kappa + 1):
        psi = np.convolve(psi, factor)

    weights = hypergeom.pmf(np.arange(seats + 1), n, m, seats)
    total = 0.0
    for i in range((kappa + 1) * theta_l, seats + 1):
        coefficient = int(psi[i])
        if coefficient and weights[i] > 0.0:
            total += float(weights[i]) * (coefficient / math.comb(seats, i))
    return min(1.0, total)


def chainscale_autorecovery_bound(k: int, p_af: float) -> float:
    """Union bound over ``k`` sidechains."""
    if k < 1:
        raise InvalidCounts("k must be >= 1")
    _check_probabilities([p_af])
    return min(1.0, k * p_af)


def derive_quotas(
    classes: Sequence[tuple[float, int]],
    committee_size: int,
    target_failure: float,
    theta_l: int,
) -> tuple[int, ...]:
    """Per-class counts whose weighted failure probability meets ``target_failure``.

    Starts from a balanced split (remainder to the safest classes) and moves
    one member at a time from the riskiest non-empty class to the safest class
    with room until the target is met.

    Args:
        classes: (adversarial rate, class size) per class
        committee_size: S_c
        target_failure: F_w
        theta_l: Liveness threshold

    Raises:
        Infeasible: if even the safest composition exceeds the target
    """
    probs = _check_probabilities([p for p, _ in classes])
    sizes = _check_counts([mu for _, mu in classes], "class sizes")
    if sum(sizes) < committee_size:
        raise Infeasible(f"classes hold {sum(sizes)} miners, committee needs {committee_size}")
    safest_first = sorted(range(len(probs)), key=lambda i: (probs[i], i))

    best = [0] * len(probs)
    left = committee_size
    for i in safest_first:
        best[i] = min(sizes[i], left)
        left -= best[i]
    if committee_failure_weighted(best, probs, theta_l) > target_failure:
        raise Infeasible(f"safest composition {tuple(best)} misses target {target_failure}")

    counts = [min(committee_size // len(probs), size) for size in sizes]
    left = committee_size - sum(counts)
    for i in safest_first:
        extra = min(left, sizes[i] - counts[i])
        counts[i] += extra
        left -= extra

    steps = 0
    while committee_failure_weighted(counts, probs, theta_l) > target_failure:
        donor = next(i for i in reversed(safest_first) if counts[i] > 0)
        receiver = next(i for i in safest_first if counts[i] < sizes[i])
        if probs[donor] <= probs[receiver]:
            break
        counts[donor] -= 1
        counts[receiver] += 1
        steps += 1

    logger.debug("Quotas derived", counts=counts, moves=steps, target=target_failure)
    return tuple(counts)


@dataclass(frozen=True)
class CalibrationResult:
    """Outcome of searching the liveness threshold that reconciles two targets."""

    theta_l: int
    random_failure: float
    weighted_failure: float
    reconciled: bool
    candidates: tuple[int, ...]

    @property
    def gap(self) -> float:
        """weighted / random at the chosen threshold."""
        if self.random_failure == 0.0:
            return math.inf
        return self.weighted_failure / self.random_failure


def calibrate_liveness_threshold(
    committee_size: int = 747,
    adversarial_rate: float = 0.25,
    weighted_counts: Sequence[int] = (349, 249, 149),
    weighted_rates: Sequence[float] = (0.15, 0.25, 0.35),
    population: int = 10**6,
    random_window: tuple[float, float] = (5e-4, 2e-3),
    reference_weighted: float = 1.42e-12,
    weighted_ceiling: float = 1e-9,
    tolerance_factor: float = 100.0,
    theta_range: tuple[int, int] = (150, 400),
) -> CalibrationResult:
    """Find the threshold at which a random committee fails near 1e-3.

    Candidates are thresholds whose random-committee failure (exact
    hypergeometric over ``population``) lies inside ``random_window``. A
    candidate reconciles when the weighted composition's failure is at most
    ``weighted_ceiling`` and within ``tolerance_factor`` of
    ``reference_weighted``. When none reconciles, the closest fit is returned
    with ``reconciled=False``.
    """
    bad = round(adversarial_rate * population)
    random_dist = hypergeometric_distribution(population, [bad], [committee_size])
    weighted_dist = weighted_distribution(weighted_counts, weighted_rates)
    random_tails = np.cumsum(random_dist[::-1])[::-1]
    weighted_tails = np.cumsum(weighted_dist[::-1])[::-1]

    low, high = theta_range
    thetas = range(low, min(high, committee_size) + 1)
    candidates = tuple(
        t for t in thetas if random_window[0] <= random_tails[t] <= random_window[1]
    )

    def fits(t: int) -> bool:
        w = float(weighted_tails[t])
        return w <= weighted_ceiling and (
            reference_weighted / tolerance_factor <= w <= reference_weighted * tolerance_factor
        )

    def log_distance(value: float, target: float) -> float:
        return abs(math.log10(max(value, 1e-300)) - math.log10(target))

    if candidates:
        chosen = min(candidates, key=lambda t: log_distance(weighted_tails[t], reference_weighted))
    else:
        chosen = min(thetas, key=lambda t: log_distance(random_tails[t], 1e-3))

    result = CalibrationResult(
        theta_l=chosen,
        random_failure=float(random_tails[chosen]),
        weighted_failure=float(weighted_tails[chosen]),
        reconciled=bool(candidates) and fits(chosen),
        candidates=candidates,
    )
    logger.info(
        "Liveness threshold calibrated",
        theta_l=result.theta_l,
        random=result.random_failure,
        weighted=result.weighted_failure,
        reconciled=result.reconciled,
    )
    return result
