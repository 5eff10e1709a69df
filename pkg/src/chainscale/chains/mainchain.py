"""Mainchain block production, sync application and rollback."""

from __future__ import annotations

from collections.abc import Callable, Iterable

from chainscale.chains.state import MainchainState, StateVars
from chainscale.config.logging import get_logger
from chainscale.core.types import MainBlock, SyncTransaction, Transaction, TxType
from chainscale.errors import InvariantViolation
from chainscale.market.traffic import GenesisAllocation

logger = get_logger(__name__)

SyncCheck = Callable[[SyncTransaction], bool]


def genesis_state(
    genesis: GenesisAllocation,
    modules: Iterable[int],
    *,
    capacity: int,
    header_bytes: int = 80,
) -> MainchainState:
    """Mainchain holding the genesis allocation and a header-only genesis block."""
    main = MainchainState(
        genesis_balances=dict(genesis.balances),
        genesis_escrows=dict(genesis.escrows),
        contracts=genesis.contracts,
        servers=dict(genesis.servers),
    )
    main.balances = dict(genesis.balances)
    main.escrow = dict(genesis.escrows)
    main.state_vars = StateVars(synced={module: set() for module in modules})
    main.blocks.append(MainBlock(-1, (), (), capacity, header_bytes))
    main.confirmed_blocks = 1
    return main


def _settle(main: MainchainState, contract_id: int, owed: int) -> int:
    available = main.escrow.get(contract_id, 0)
    paid = min(owed, available)
    if paid:
        main.escrow[contract_id] = available - paid
        server = main.servers.get(contract_id, 0)
        main.balances[server] = main.balances.get(server, 0) + paid
        sv = main.state_vars
        sv.dispensed[contract_id] = sv.dispensed.get(contract_id, 0) + paid
    return paid


def apply_transaction(main: MainchainState, tx: Transaction) -> bool:
    """Apply an ordinary mainchain transaction; False when it must be rejected."""
    if tx.tx_type is TxType.TRANSFER:
        if main.balances.get(tx.issuer, 0) < tx.amount:
            return False
        main.balances[tx.issuer] -= tx.amount
        main.balances[tx.counterparty] = main.balances.get(tx.counterparty, 0) + tx.amount
        return True

    if tx.tx_type is TxType.ESCROW_CREATE and tx.contract_id is not None:
        if main.balances.get(tx.issuer, 0) < tx.amount:
            return False
        cid = tx.contract_id
        main.balances[tx.issuer] -= tx.amount
        main.escrow[cid] = main.escrow.get(cid, 0) + tx.amount
        unpaid = main.state_vars.unpaid
        owed = unpaid.get(cid, 0)
        if owed:
            unpaid[cid] = owed - _settle(main, cid, owed)
        return True

    return False


def apply_sync(main: MainchainState, sync: SyncTransaction) -> MainchainState:
    """Fold a confirmed sync into the state variables.

    Epochs already synced for the module are skipped, so re-applying a sync
    is a no-op. Payments are dispensed from escrow; any shortfall is recorded
    as unpaid and settled by the contract's next escrow deposit.
    """
    sv = main.state_vars
    for summary in sync.summaries:
        module = summary.sidechain_id.module
        if main.is_synced(module, summary.epoch):
            continue
        for cid, entry in summary.entries:
            if entry.por_count:
                sv.por_counts[cid] = sv.por_counts.get(cid, 0) + entry.por_count
            if entry.payment_total:
                sv.payments[cid] = sv.payments.get(cid, 0) + entry.payment_total
                paid = _settle(main, cid, entry.payment_total)
                if paid < entry.payment_total:
                    sv.unpaid[cid] = sv.unpaid.get(cid, 0) + entry.payment_total - paid
            if entry.dispute_outcome is not None:
                sv.disputes[cid] = entry.dispute_outcome
                if entry.dispute_outcome[1]:
                    sv.sanctioned.add(cid)
            if entry.match_record is not None:
                sv.matches[cid] = entry.match_record
        sv.synced.setdefault(module, set()).add(summary.epoch)
    return main


def _confirm(main: MainchainState, depth: int) -> list[SyncTransaction]:
    confirmed: list[SyncTransaction] = []
    target = len(main.blocks) - depth + 1
    while main.confirmed_blocks < target:
        block = main.blocks[main.confirmed_blocks]
        for sync in block.syncs:
            apply_sync(main, sync)
            confirmed.append(sync)
        main.confirmed_blocks += 1
    return confirmed


def produce_main_block(
    main: MainchainState,
    round_index: int,
    *,
    capacity: int,
    header_bytes: int = 80,
    depth: int = 1,
    verify: SyncCheck | None = None,
) -> MainBlock:
    """Fill a block with pending syncs first, then ordinary transactions FIFO.

    Ordinary transactions are applied at inclusion; unaffordable ones are
    rejected and listed in ``main.last_rejected``. Syncs in blocks that
    reach ``depth`` confirmations are applied and listed in
    ``main.last_confirmed_syncs``.
    """
    main.last_rejected = []
    syncs: list[SyncTransaction] = []
    used = 0
    while main.pending_syncs:
        sync = main.pending_syncs[0]
        oversize_alone = not syncs and sync.size_bytes > capacity
        if used + sync.size_bytes > capacity and not oversize_alone:
            break
        main.pending_syncs.popleft()
        if verify is not None and not verify(sync):
            continue
        syncs.append(sync)
        used += sync.size_bytes
        if oversize_alone:
            break

    txs: list[Transaction] = []
    while main.pending and used <= capacity:
        tx = main.pending[0]
        if used + tx.size_bytes > capacity:
            break
        main.pending.popleft()
        if apply_transaction(main, tx):
            txs.append(tx)
            used += tx.size_bytes
        else:
            main.last_rejected.append(tx)

    block = MainBlock(round_index, tuple(txs), tuple(syncs), capacity, header_bytes)
    main.blocks.append(block)
    main.last_confirmed_syncs = _confirm(main, depth)
    logger.debug(
        "Main block",
        round=round_index,
        txs=len(txs),
        syncs=len(syncs),
        rejected=len(main.last_rejected),
    )
    return block


def _replay(main: MainchainState, depth: int) -> None:
    modules = list(main.state_vars.synced)
    main.balances = dict(main.genesis_balances)
    main.escrow = dict(main.genesis_escrows)
    main.state_vars = StateVars(synced={module: set() for module in modules})
    main.confirmed_blocks = 1
    for index in range(1, len(main.blocks)):
        for tx in main.blocks[index].txs:
            if not apply_transaction(main, tx):
                raise InvariantViolation(f"replayed tx {tx.id} no longer applies")
        target = index + 1 - depth + 1
        while main.confirmed_blocks < target:
            for sync in main.blocks[main.confirmed_blocks].syncs:
                apply_sync(main, sync)
            main.confirmed_blocks += 1


def rollback(main: MainchainState, depth_blocks: int, *, depth: int = 1) -> list[SyncTransaction]:
    """Replace the last ``depth_blocks`` blocks by a fork without their syncs.

    Ordinary transactions survive in the fork in their original order; the
    state is replayed from genesis. Returns the syncs the fork dropped.
    """
    keep = max(1, len(main.blocks) - depth_blocks)
    dropped_blocks = main.blocks[keep:]
    fork = [
        MainBlock(block.round, block.txs, (), block.capacity_bytes, block.header_bytes)
        for block in dropped_blocks
    ]
    main.blocks = main.blocks[:keep] + fork
    _replay(main, depth)
    dropped = [sync for block in dropped_blocks for sync in block.syncs]
    logger.warning(
        "Mainchain rollback",
        depth=len(dropped_blocks),
        dropped_syncs=[(s.sidechain_id.module, s.epochs) for s in dropped],
    )
    return dropped
