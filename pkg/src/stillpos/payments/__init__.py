# machine and engine are imported as submodules (stillpos.payments.machine,
# stillpos.payments.engine): they sit above the ledger in the import graph.
from stillpos.payments.model import (
    BlockMined,
    BroadcastResult,
    ChainEvent,
    ChainSource,
    Conflict,
    InvoiceState,
    LEGAL_TRANSITIONS,
    MatchPolicy,
    PAID_STATES,
    PaymentStatus,
    Reorg,
    Tick,
    TxSeen,
    UtxoRef,
    is_legal_transition,
)
from stillpos.payments.uri import build_payment_uri, format_btc_amount

__all__ = [
    "InvoiceState",
    "LEGAL_TRANSITIONS",
    "PAID_STATES",
    "is_legal_transition",
    "PaymentStatus",
    "MatchPolicy",
    "ChainEvent",
    "ChainSource",
    "TxSeen",
    "BlockMined",
    "Conflict",
    "Reorg",
    "Tick",
    "UtxoRef",
    "BroadcastResult",
    "build_payment_uri",
    "format_btc_amount",
]
