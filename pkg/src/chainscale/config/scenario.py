"""Experiment parameterization.

Every key has a default matching the full-scale storage-market setup: 8000
miners with 8 contracts each, 61 mainchain rounds, epochs of 10 mainchain
rounds (30 sidechain rounds), 1 MB blocks, 500-member committees and a 10%
dispute rate.
"""

from __future__ import annotations

import math
import re
import tomllib
from enum import Enum
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from chainscale.core.modules import ModuleSpec, ModuleTable
from chainscale.core.types import TxType
from chainscale.errors import BadModuleTable, ConfigError

_LAYOUT = re.compile(r"^(\d+)P(\d+)M(\d+)D$")


class ElectionMode(str, Enum):
    RANDOM = "random"
    WEIGHTED = "weighted"


Detection = Literal["best", "worst"]


class MaliciousStrategy(str, Enum):
    """How malicious committee members misbehave.

    WITHHOLD never votes. INVALID_IMMEDIATELY proposes and votes for invalid
    blocks from the first round. INVALID_LAST_ROUND behaves honestly until the
    last sidechain round of the epoch.
    """

    WITHHOLD = "withhold"
    INVALID_IMMEDIATELY = "invalid_immediately"
    INVALID_LAST_ROUND = "invalid_last_round"


class ScoreWeightsConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    alpha: float = Field(default=0.5, ge=0.0, description="Weight of mining power")
    beta: float = Field(default=0.3, ge=0.0, description="Weight of sidechain participation")
    gamma: float = Field(default=0.2, ge=0.0, description="Penalty weight of disputes")


class TxSizes(BaseModel):
    """Byte sizes of transactions whose size is not fixed by the protocol."""

    model_config = ConfigDict(extra="forbid")

    por: int = Field(default=200, ge=67, description="Proof-of-retrievability size")
    ask: int = Field(default=150, ge=67, description="Ask size")
    offer: int = Field(default=150, ge=67, description="Offer size")
    payment: int = Field(default=120, ge=67, description="Service payment size")
    transfer: int = Field(default=100, ge=67, description="Currency transfer size")
    escrow: int = Field(default=250, ge=67, description="Escrow creation size")
    sync_base: int = Field(default=1024, ge=1, description="Sync-transaction base size")
    sync_per_entry: int = Field(default=32, ge=0, description="Sync-transaction bytes per entry")


class ModuleConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: int = Field(ge=1, le=63, description="Module id (prefix low six bits)")
    key: str = Field(description="Short key used by layouts, shares and dependencies")
    name: str = Field(description="Human-readable module name")
    tx_types: list[TxType] = Field(description="Transaction types owned by the module")


class ScenarioEvent(BaseModel):
    """A scripted interruption.

    ``rollback`` replaces the last ``depth`` mainchain blocks before round
    ``round``'s block. ``committee_failure`` forces the active committee of
    ``module`` to fail at the first sidechain round of ``round``. ``stall``
    silences ``module`` for ``rounds`` sidechain rounds starting at ``round``.
    """

    model_config = ConfigDict(extra="forbid")

    kind: Literal["rollback", "committee_failure", "stall"]
    round: int = Field(ge=0, description="Mainchain round at which the event fires")
    depth: int = Field(default=1, ge=1, description="Rollback depth in mainchain blocks")
    module: str | None = Field(default=None, description="Target module key")
    rounds: int = Field(default=1, ge=1, description="Stall length in sidechain rounds")


def _default_modules() -> list[ModuleConfig]:
    return [
        ModuleConfig(
            id=1,
            key="M",
            name="market-matching",
            tx_types=[TxType.ASK, TxType.OFFER, TxType.AGREEMENT],
        ),
        ModuleConfig(id=2, key="P", name="service-payment", tx_types=[TxType.POR, TxType.PAYMENT]),
        ModuleConfig(id=3, key="D", name="dispute", tx_types=[TxType.DISPUTE]),
    ]


class ScenarioConfig(BaseModel):
    """Full experiment parameterization."""

    model_config = ConfigDict(extra="forbid", validate_assignment=False)

    seed: int = Field(default=42, ge=0, description="Master seed for every random stream")

    # Population
    num_miners: int = Field(default=8000, ge=1, description="Number of miners N")
    p_lazy: float = Field(default=0.0, ge=0.0, le=1.0, description="Fraction of lazy miners")
    p_malicious: float = Field(
        default=0.0, ge=0.0, le=1.0, description="Fraction of malicious miners"
    )
    malicious_strategy: MaliciousStrategy = Field(
        default=MaliciousStrategy.INVALID_LAST_ROUND,
        description="Malicious committee strategy (worst case by default)",
    )

    # Election
    election_mode: ElectionMode = Field(
        default=ElectionMode.WEIGHTED, description="Committee election: random or weighted"
    )
    classes: int = Field(default=2, ge=1, description="Number of score classes C")
    score_weights: ScoreWeightsConfig = Field(
        default_factory=ScoreWeightsConfig, description="Score weights alpha, beta, gamma"
    )
    class_shares: dict[str, list[float]] = Field(
        default_factory=lambda: {"D": [0.6, 0.4], "P": [0.5, 0.5], "M": [0.5, 0.5]},
        description="Per-module share of each class in weighted committees",
    )
    committee_size: int = Field(default=500, ge=2, description="Committee size S_c")
    kappa: int = Field(default=2, ge=0, description="Backup committees per chain")
    theta_l: int | None = Field(
        default=None,
        ge=1,
        description="Liveness threshold in absent votes (default f+1 for size 3f+2)",
    )

    # Rounds
    epoch_length: int = Field(default=10, ge=1, description="Epoch length omega (mainchain rounds)")
    rho: int = Field(default=3, ge=1, description="Sidechain rounds per mainchain round")
    run_rounds: int = Field(default=61, ge=0, description="Mainchain rounds with new traffic")
    round_seconds: float = Field(default=30.0, gt=0, description="Seconds per mainchain round")
    max_drain_rounds: int = Field(
        default=5000, ge=0, description="Mainchain rounds allowed to drain queues after traffic"
    )

    # Blocks
    main_block_bytes: int = Field(default=1_000_000, ge=1, description="Mainchain block capacity")
    side_block_bytes: int = Field(default=1_000_000, ge=1, description="Sidechain block capacity")
    main_header_bytes: int = Field(default=80, ge=0, description="Mainchain block header size")
    confirmation_depth: int = Field(
        default=1, ge=1, description="Mainchain blocks needed to confirm a sync-transaction"
    )

    # Market
    contracts: int = Field(default=64_000, ge=0, description="Number of service contracts")
    dispute_rate: float = Field(
        default=0.1, ge=0.0, le=1.0, description="Fraction of active contracts disputed per epoch"
    )
    transfer_share: float = Field(
        default=0.02, ge=0.0, lt=1.0, description="Transfer share of transaction count"
    )
    negotiation_mean: float = Field(default=3.0, description="Negotiation length mean (rounds)")
    negotiation_std: float = Field(default=1.0, ge=0.0, description="Negotiation length std dev")
    negotiation_max: int = Field(default=10, ge=1, description="Negotiation length clamp")
    negotiation_messages: int = Field(
        default=2, ge=0, description="Ask/offer messages per negotiating round"
    )
    term_min: int = Field(default=5, ge=1, description="Shortest contract term (rounds)")
    term_max: int = Field(default=20, ge=1, description="Longest contract term (rounds)")
    price_min: int = Field(default=1, ge=0, description="Lowest price per active round")
    price_max: int = Field(default=10, ge=0, description="Highest price per active round")
    initial_balance: int = Field(default=10**9, ge=0, description="Genesis balance per party")
    tx_sizes: TxSizes = Field(default_factory=TxSizes, description="Transaction sizes")

    # Modules and scaling
    modules: list[ModuleConfig] = Field(
        default_factory=_default_modules, description="Module table"
    )
    dependencies: dict[str, list[str]] = Field(
        default_factory=lambda: {"M": ["D"], "P": ["D"]},
        description="Module -> modules it gates on",
    )
    priority: list[str] = Field(
        default_factory=lambda: ["D", "P", "M"], description="Module priority order"
    )
    layout: str | None = Field(
        default=None, description="Sub-sidechain caps in aPbMcD notation (sets the three caps)"
    )
    subchains: int = Field(default=1, ge=1, description="Service-payment sub-sidechain cap")
    match_subchains: int = Field(default=1, ge=1, description="Market-matching sub-sidechain cap")
    dispute_subchains: int = Field(default=1, ge=1, description="Dispute sub-sidechain cap")

    # Recovery
    eta: int = Field(default=2, ge=1, description="Dependency timeout eta (sidechain rounds)")
    step_in_minutes: float = Field(default=5.0, ge=0.0, description="Backup step-in time")
    detection: Detection = Field(
        default="best",
        description="Failure detection: best at once, worst at epoch end (backup redoes the epoch)",
    )
    events: list[ScenarioEvent] = Field(default_factory=list, description="Scripted interruptions")

    @model_validator(mode="before")
    @classmethod
    def _expand_layout(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("layout"):
            match = _LAYOUT.match(str(data["layout"]))
            if match is None:
                raise ValueError(f"layout {data['layout']!r} is not aPbMcD")
            p_cap, m_cap, d_cap = (int(group) for group in match.groups())
            data = {
                **data,
                "subchains": p_cap,
                "match_subchains": m_cap,
                "dispute_subchains": d_cap,
            }
        return data

    @model_validator(mode="after")
    def _check_invariants(self) -> ScenarioConfig:
        try:
            table = self.module_table()
        except BadModuleTable as exc:
            raise ValueError(f"modules: {exc}") from exc
        keys = set(table.keys)

        weights = self.score_weights
        if abs(weights.alpha + weights.beta + weights.gamma - 1.0) > 1e-12:
            raise ValueError("score_weights: alpha + beta + gamma must equal 1")
        if min(self.subchains, self.match_subchains, self.dispute_subchains) < 1:
            raise ValueError("layout: every module needs at least one chain")
        if set(self.priority) != keys:
            raise ValueError(f"priority: must list exactly the modules {sorted(keys)}")
        for source, targets in self.dependencies.items():
            if source not in keys or not set(targets) <= keys:
                raise ValueError(f"dependencies: unknown module in {source} -> {targets}")
        if _has_cycle(self.dependencies):
            raise ValueError("dependencies: graph must be acyclic")
        if self.term_min > self.term_max:
            raise ValueError("term_min: must not exceed term_max")
        if self.price_min > self.price_max:
            raise ValueError("price_min: must not exceed price_max")
        if self.p_lazy + self.p_malicious > 1.0:
            raise ValueError("p_malicious: p_lazy + p_malicious exceeds 1")
        if self.theta_l is not None and self.theta_l > self.committee_size:
            raise ValueError("theta_l: exceeds committee_size")

        chains = sum(self.cap_for(key) for key in keys)
        needed = (self.kappa + 1) * self.committee_size * chains
        if needed > self.num_miners:
            raise ValueError(
                f"num_miners: (kappa+1)*committee_size*chains = {needed} exceeds {self.num_miners}"
            )

        if self.election_mode is ElectionMode.WEIGHTED:
            for key in keys:
                shares = self.class_shares.get(key)
                if shares is None or len(shares) != self.classes:
                    raise ValueError(f"class_shares: {key} needs {self.classes} shares")
                if abs(sum(shares) - 1.0) > 1e-9 or min(shares) < 0:
                    raise ValueError(f"class_shares: {key} shares must be >= 0 and sum to 1")

        for event in self.events:
            if event.kind != "rollback" and event.module not in keys:
                raise ValueError(f"events: {event.kind} needs a configured module")
        return self

    # Derived values

    @property
    def layout_name(self) -> str:
        return f"{self.subchains}P{self.match_subchains}M{self.dispute_subchains}D"

    @property
    def rounds_per_epoch(self) -> int:
        """Sidechain rounds per epoch (omega * rho)."""
        return self.epoch_length * self.rho

    @property
    def effective_theta_l(self) -> int:
        if self.theta_l is not None:
            return self.theta_l
        return liveness_threshold(self.committee_size)

    @property
    def step_in_rounds(self) -> int:
        """Backup step-in time in sidechain rounds."""
        side_round_seconds = self.round_seconds / self.rho
        return max(1, math.ceil(self.step_in_minutes * 60.0 / side_round_seconds))

    def cap_for(self, key: str) -> int:
        return {"P": self.subchains, "M": self.match_subchains, "D": self.dispute_subchains}.get(
            key, 1
        )

    def module_table(self) -> ModuleTable:
        return ModuleTable(
            modules=tuple(
                ModuleSpec(m.id, m.key, m.name, frozenset(m.tx_types)) for m in self.modules
            )
        )

    def tx_size(self, tx_type: TxType) -> int:
        sizes = self.tx_sizes
        return {
            TxType.POR: sizes.por,
            TxType.ASK: sizes.ask,
            TxType.OFFER: sizes.offer,
            TxType.PAYMENT: sizes.payment,
            TxType.TRANSFER: sizes.transfer,
            TxType.ESCROW_CREATE: sizes.escrow,
            TxType.DISPUTE: 515,
            TxType.AGREEMENT: 716,
        }[tx_type]


def liveness_threshold(committee_size: int) -> int:
    """Absent votes that stall a committee of size 3f+2: f+1."""
    return max(1, (committee_size - 2) // 3 + 1)


def _has_cycle(edges: dict[str, list[str]]) -> bool:
    state: dict[str, int] = {}

    def visit(node: str) -> bool:
        if state.get(node) == 1:
            return True
        if state.get(node) == 2:
            return False
        state[node] = 1
        if any(visit(target) for target in edges.get(node, [])):
            return True
        state[node] = 2
        return False

    return any(visit(node) for node in list(edges))


PRESETS: dict[str, dict[str, Any]] = {
    "full": {},
    "desk": {
        "num_miners": 800,
        "contracts": 6400,
        "committee_size": 50,
        "side_block_bytes": 160_000,
    },
}


def build_scenario(data: dict[str, Any]) -> ScenarioConfig:
    """Validate raw data, converting validation failures to ConfigError."""
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        loc = ".".join(str(part) for part in first["loc"])
        message = str(first["msg"]).removeprefix("Value error, ")
        raise ConfigError(message, field=loc or _field_from_message(message)) from exc


def load_scenario(path: str | Path | None = None, preset: str | None = None) -> ScenarioConfig:
    """Load a TOML scenario, optionally layered over a named preset.

    A ``preset = "desk"`` key inside the file has the same effect as the
    ``preset`` argument.
    """
    data: dict[str, Any] = {}
    if path is not None:
        try:
            with Path(path).open("rb") as handle:
                data = tomllib.load(handle)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}", field="config") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML in {path}: {exc}", field="config") from exc

    preset = data.pop("preset", preset)
    base: dict[str, Any] = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}", field="preset")
        base = dict(PRESETS[preset])
    return build_scenario({**base, **data})


def _field_from_message(message: str) -> str | None:
    head = message.split(":", 1)[0]
    return head if head.isidentifier() else None
