"""Miner population: identities, mining power and behaviour."""

from __future__ import annotations

import numpy as np

from chainscale.config.scenario import ScenarioConfig
from chainscale.core.types import Behavior, MinerRecord
from chainscale.election.vrf import VrfKeypair


def build_population(
    config: ScenarioConfig, rng: np.random.Generator
) -> tuple[list[MinerRecord], list[VrfKeypair]]:
    """Miners with Gamma(2, 1) mining power and a seeded behaviour assignment.

    ``round(p_lazy * N)`` miners are lazy and ``round(p_malicious * N)``
    malicious, placed by a random permutation.
    """
    n = config.num_miners
    keypairs = [VrfKeypair.generate(rng) for _ in range(n)]
    power = rng.gamma(2.0, 1.0, size=n)
    lazy = round(config.p_lazy * n)
    malicious = min(n - lazy, round(config.p_malicious * n))
    order = rng.permutation(n)
    behaviors = [Behavior.HONEST] * n
    for i in order[:lazy]:
        behaviors[int(i)] = Behavior.LAZY
    for i in order[lazy : lazy + malicious]:
        behaviors[int(i)] = Behavior.MALICIOUS
    miners = [
        MinerRecord(
            index=i,
            pk=keypairs[i].pk,
            mining_power=float(power[i]),
            behavior=behaviors[i],
        )
        for i in range(n)
    ]
    return miners, keypairs
