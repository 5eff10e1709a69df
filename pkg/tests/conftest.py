"""Shared fixtures: a small scenario and transaction builders."""

from typing import Any

import pytest

from chainscale.config.scenario import ScenarioConfig, build_scenario
from chainscale.core.modules import annotate, default_module_table
from chainscale.core.types import FIXED_SIZES, Transaction, TxType

# Small enough to run in well under a second, large enough that every module
# sees traffic in every epoch.
SMALL_SCENARIO: dict[str, Any] = {
    "seed": 3,
    "num_miners": 60,
    "committee_size": 5,
    "kappa": 1,
    "contracts": 16,
    "run_rounds": 6,
    "epoch_length": 3,
    "rho": 2,
    "side_block_bytes": 4000,
    "main_block_bytes": 20000,
}


def small_config(**overrides: Any) -> ScenarioConfig:
    return build_scenario({**SMALL_SCENARIO, **overrides})


@pytest.fixture
def make_config():
    return small_config


@pytest.fixture
def make_tx():
    counter = iter(range(1, 1_000_000))

    def _make(
        tx_type: TxType = TxType.POR,
        *,
        contract_id: int | None = 7,
        amount: int = 0,
        valid: bool = True,
        size: int | None = None,
        created_round: int = 0,
        issuer: int = 1,
        counterparty: int = 2,
        price: int = 0,
        duration: int = 0,
        ref_id: int = 0,
        tx_id: int | None = None,
    ) -> Transaction:
        return Transaction(
            id=next(counter) if tx_id is None else tx_id,
            prefix=annotate(tx_type, default_module_table()),
            tx_type=tx_type,
            contract_id=contract_id,
            issuer=issuer,
            amount=amount,
            valid=valid,
            size_bytes=size or FIXED_SIZES.get(tx_type, 200),
            created_round=created_round,
            counterparty=counterparty,
            price=price,
            duration=duration,
            ref_id=ref_id,
        )

    return _make
