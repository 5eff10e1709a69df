"""Data model, canonical encodings and module routing."""

from chainscale.core.codec import (
    decode_summary,
    decode_transaction,
    encode_summary,
    encode_transaction,
)
from chainscale.core.modules import (
    ChainTarget,
    ModuleSpec,
    ModuleTable,
    TargetKind,
    annotate,
    classify,
    default_module_table,
    single_module_table,
)
from chainscale.core.types import (
    Behavior,
    ChainId,
    Committee,
    CommitteeRole,
    MainBlock,
    MetaBlock,
    MinerRecord,
    SummaryBlock,
    SummaryEntry,
    SyncTransaction,
    Transaction,
    TxType,
)

__all__ = [
    "Behavior",
    "ChainId",
    "ChainTarget",
    "Committee",
    "CommitteeRole",
    "MainBlock",
    "MetaBlock",
    "MinerRecord",
    "ModuleSpec",
    "ModuleTable",
    "SummaryBlock",
    "SummaryEntry",
    "SyncTransaction",
    "TargetKind",
    "Transaction",
    "TxType",
    "annotate",
    "classify",
    "decode_summary",
    "decode_transaction",
    "default_module_table",
    "encode_summary",
    "encode_transaction",
    "single_module_table",
]
