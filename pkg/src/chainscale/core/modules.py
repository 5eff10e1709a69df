"""Module tables and prefix-byte routing.

A prefix byte whose top two bits are ``00`` routes to the mainchain; ``11``
followed by a six-bit module id routes to that module's sidechain. Only
prefixes named by the configured table are accepted.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from enum import Enum

from chainscale.core.types import MAINCHAIN_TYPES, SERVICE_TYPES, Transaction, TxType
from chainscale.errors import BadModuleTable, UnassignedType, UnknownPrefix

MAINCHAIN_PREFIX = 0x00
SIDECHAIN_MARK = 0xC0
MODULE_MASK = 0x3F


@dataclass(frozen=True, slots=True)
class ModuleSpec:
    """One functional module and the transaction types its sidechain owns."""

    module_id: int
    key: str
    name: str
    tx_types: frozenset[TxType]

    @property
    def prefix(self) -> int:
        return SIDECHAIN_MARK | self.module_id


class TargetKind(str, Enum):
    MAINCHAIN = "mainchain"
    SIDECHAIN = "sidechain"


@dataclass(frozen=True, slots=True)
class ChainTarget:
    kind: TargetKind
    module_id: int | None = None

    @classmethod
    def mainchain(cls) -> ChainTarget:
        return cls(TargetKind.MAINCHAIN)

    @classmethod
    def sidechain(cls, module_id: int) -> ChainTarget:
        return cls(TargetKind.SIDECHAIN, module_id)


@dataclass(frozen=True)
class ModuleTable:
    """Validated mapping of transaction types to module sidechains."""

    modules: tuple[ModuleSpec, ...]
    mainchain_types: frozenset[TxType] = MAINCHAIN_TYPES

    def __post_init__(self) -> None:
        validate_module_table(self.modules, self.mainchain_types)

    @property
    def keys(self) -> tuple[str, ...]:
        return tuple(module.key for module in self.modules)

    def by_id(self, module_id: int) -> ModuleSpec:
        for module in self.modules:
            if module.module_id == module_id:
                return module
        raise UnknownPrefix(f"module id {module_id} is not configured")

    def by_key(self, key: str) -> ModuleSpec:
        for module in self.modules:
            if module.key == key:
                return module
        raise BadModuleTable(f"module key {key!r} is not configured")

    def owner(self, tx_type: TxType) -> ModuleSpec | None:
        for module in self.modules:
            if tx_type in module.tx_types:
                return module
        return None


def validate_module_table(
    modules: Sequence[ModuleSpec],
    mainchain_types: Iterable[TxType] = MAINCHAIN_TYPES,
) -> None:
    """Raise BadModuleTable unless every service type has exactly one owner."""
    if not modules:
        raise BadModuleTable("module table is empty")

    mainchain = set(mainchain_types)
    seen_ids: set[int] = set()
    seen_keys: set[str] = set()
    owners: dict[TxType, str] = {}
    for module in modules:
        if not 1 <= module.module_id <= MODULE_MASK:
            raise BadModuleTable(f"module {module.key}: id {module.module_id} outside 1..63")
        if module.module_id in seen_ids or module.key in seen_keys:
            raise BadModuleTable(f"module {module.key}: duplicate id or key")
        seen_ids.add(module.module_id)
        seen_keys.add(module.key)
        for tx_type in module.tx_types:
            if tx_type in mainchain:
                raise BadModuleTable(
                    f"{tx_type.value} is mainchain-routed and owned by {module.key}"
                )
            if tx_type in owners:
                raise BadModuleTable(
                    f"{tx_type.value} assigned to both {owners[tx_type]} and {module.key}"
                )
            owners[tx_type] = module.key

    missing = SERVICE_TYPES - owners.keys()
    if missing:
        names = ", ".join(sorted(t.value for t in missing))
        raise BadModuleTable(f"service types unassigned: {names}")


def default_module_table() -> ModuleTable:
    """Market matching (0xC1), service-payment exchange (0xC2), dispute resolution (0xC3)."""
    return ModuleTable(
        modules=(
            ModuleSpec(
                1,
                "M",
                "market-matching",
                frozenset({TxType.ASK, TxType.OFFER, TxType.AGREEMENT}),
            ),
            ModuleSpec(2, "P", "service-payment", frozenset({TxType.POR, TxType.PAYMENT})),
            ModuleSpec(3, "D", "dispute", frozenset({TxType.DISPUTE})),
        )
    )


def single_module_table() -> ModuleTable:
    """Every service transaction on one sidechain."""
    return ModuleTable(modules=(ModuleSpec(1, "S", "single", SERVICE_TYPES),))


def annotate(tx_type: TxType, table: ModuleTable) -> int:
    """Return the prefix byte for a transaction type under ``table``."""
    if tx_type in table.mainchain_types:
        return MAINCHAIN_PREFIX
    owner = table.owner(tx_type)
    if owner is None:
        raise UnassignedType(f"{tx_type.value} is owned by no module")
    return owner.prefix


def classify_prefix(prefix: int, table: ModuleTable) -> ChainTarget:
    if prefix == MAINCHAIN_PREFIX:
        return ChainTarget.mainchain()
    if prefix & SIDECHAIN_MARK == SIDECHAIN_MARK:
        module_id = prefix & MODULE_MASK
        if any(module.module_id == module_id for module in table.modules):
            return ChainTarget.sidechain(module_id)
    raise UnknownPrefix(f"prefix 0x{prefix:02X} is not configured")


def classify(tx: Transaction, table: ModuleTable) -> ChainTarget:
    """Route a transaction by its prefix byte."""
    return classify_prefix(tx.prefix, table)
