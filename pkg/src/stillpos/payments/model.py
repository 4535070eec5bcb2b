"""Invoice states, chain events, and the acceptance policy.

State names are wire-stable strings (they appear in the API and the
journal). OVERPAID is a flag variant: a sale that took more than asked
keeps PAID_0CONF/CONFIRMED as its primary state and carries excess_sats;
the variant exists for display and filtering.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Protocol, Union

from stillpos.errors import ValidationError
from stillpos.tx import Transaction


class InvoiceState(str, Enum):
    PENDING = "pending"
    PAID_0CONF = "paid_0conf"
    CONFIRMED = "confirmed"
    UNDERPAID = "underpaid"
    OVERPAID = "overpaid"  # flag variant of paid_0conf/confirmed
    EXPIRED = "expired"
    LATE_PAID = "late_paid"
    DOUBLE_SPENT = "double_spent"


# Reachable next-states. PENDING/UNDERPAID go straight to CONFIRMED when a
# sale is above the 0-conf cap: PAID_0CONF must be unreachable for those.
# CONFIRMED regresses only under an explicit reorg-regression policy.
LEGAL_TRANSITIONS: dict[InvoiceState, frozenset[InvoiceState]] = {
    InvoiceState.PENDING: frozenset(
        {
            InvoiceState.PAID_0CONF,
            InvoiceState.UNDERPAID,
            InvoiceState.EXPIRED,
            InvoiceState.CONFIRMED,
        }
    ),
    InvoiceState.UNDERPAID: frozenset(
        {InvoiceState.PAID_0CONF, InvoiceState.EXPIRED, InvoiceState.CONFIRMED}
    ),
    InvoiceState.PAID_0CONF: frozenset({InvoiceState.CONFIRMED, InvoiceState.DOUBLE_SPENT}),
    InvoiceState.CONFIRMED: frozenset({InvoiceState.PAID_0CONF}),
    InvoiceState.EXPIRED: frozenset({InvoiceState.LATE_PAID}),
    InvoiceState.LATE_PAID: frozenset(),
    InvoiceState.DOUBLE_SPENT: frozenset(),
    InvoiceState.OVERPAID: frozenset(),
}

PAID_STATES = frozenset(
    {InvoiceState.PAID_0CONF, InvoiceState.CONFIRMED, InvoiceState.LATE_PAID}
)


def is_legal_transition(current: InvoiceState, new: InvoiceState) -> bool:
    return new in LEGAL_TRANSITIONS[current]


class PaymentStatus(str, Enum):
    MEMPOOL = "mempool"
    CONFIRMED = "confirmed"
    CONFLICTED = "conflicted"


# --- chain events ---


@dataclass(frozen=True)
class TxSeen:
    """A transaction hit the mempool (or was first noticed).

    Carries (address, value) output summaries rather than a full
    transaction so that explorer-backed deployments can emit it from
    API responses; non-address outputs appear with address None.
    """

    txid: str
    outputs: tuple[tuple[str | None, int], ...]
    observed_at: int

    @classmethod
    def from_tx(cls, tx: Transaction, network, observed_at: int) -> "TxSeen":
        from stillpos.tx import address_for_script

        return cls(
            txid=tx.txid(),
            outputs=tuple(
                (address_for_script(out.script_pubkey, network), out.value_sats)
                for out in tx.outputs
            ),
            observed_at=observed_at,
        )

    def paid_to(self, address: str) -> int:
        return sum(value for addr, value in self.outputs if addr == address)


@dataclass(frozen=True)
class BlockMined:
    height: int
    tx_ids: tuple[str, ...]
    observed_at: int


@dataclass(frozen=True)
class Conflict:
    txid: str
    conflicting_txid: str
    observed_at: int


@dataclass(frozen=True)
class Reorg:
    new_height: int
    observed_at: int


@dataclass(frozen=True)
class Tick:
    """Clock advance; drives invoice expiry. Not a chain event proper."""

    observed_at: int


ChainEvent = Union[TxSeen, BlockMined, Conflict, Reorg, Tick]


@dataclass(frozen=True)
class UtxoRef:
    txid: str
    vout: int
    value_sats: int
    address: str

    @property
    def outpoint(self) -> tuple[str, int]:
        return (self.txid, self.vout)


@dataclass(frozen=True)
class BroadcastResult:
    accepted: bool
    txid: str
    reason: str | None = None


class ChainSource(Protocol):
    """What the payment engine and treasury need from a chain backend.

    The simulated node and the external explorer client both satisfy it.
    Event delivery is at-least-once; consumers must be idempotent.
    """

    def subscribe(self, callback) -> None: ...

    def confirmations(self, txid: str) -> int: ...

    def utxos(self, address: str) -> list[UtxoRef]: ...

    def tip_height(self) -> int: ...

    def broadcast(self, tx: Transaction) -> BroadcastResult: ...


# --- acceptance policy ---

DEFAULT_BANDS: tuple[tuple[int | None, int], ...] = ((5000, 0), (50000, 1), (None, 3))


@dataclass(frozen=True)
class MatchPolicy:
    underpay_tolerance_bp: int = 0
    zero_conf_max_fiat_cents: int = 5000
    # (fiat ceiling in cents or None for unbounded, required confirmations)
    confirmation_bands: tuple[tuple[int | None, int], ...] = DEFAULT_BANDS
    allow_confirmation_regression: bool = False

    def __post_init__(self):
        if self.underpay_tolerance_bp < 0:
            raise ValidationError("tolerance cannot be negative")
        if self.zero_conf_max_fiat_cents < 0:
            raise ValidationError("zero-conf cap cannot be negative")
        if not self.confirmation_bands or self.confirmation_bands[-1][0] is not None:
            raise ValidationError("confirmation bands must end with an unbounded band")
        last_ceiling = 0
        last_confs = -1
        for ceiling, confs in self.confirmation_bands:
            if confs < last_confs:
                raise ValidationError("required confirmations must not decrease with amount")
            last_confs = confs
            if ceiling is not None:
                if ceiling <= last_ceiling:
                    raise ValidationError("band ceilings must be increasing")
                last_ceiling = ceiling

    def required_confirmations(self, fiat_cents: int) -> int:
        for ceiling, confs in self.confirmation_bands:
            if ceiling is None or fiat_cents <= ceiling:
                return confs
        raise AssertionError("unreachable: final band is unbounded")

    def confirmations_to_confirm(self, fiat_cents: int) -> int:
        """Confirmations that flip a sale to CONFIRMED (at least one block)."""
        return max(1, self.required_confirmations(fiat_cents))

    def zero_conf_allowed(self, fiat_cents: int) -> bool:
        return fiat_cents <= self.zero_conf_max_fiat_cents

    def lower_bound_sats(self, required_sats: int) -> int:
        """Smallest paid total still treated as payment in full."""
        return required_sats - required_sats * self.underpay_tolerance_bp // 10_000
