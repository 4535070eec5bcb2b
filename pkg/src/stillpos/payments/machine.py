"""The invoice state machine.

Pure decision logic: given a sale snapshot, its known payments, one chain
event and the policy, produce the outcome (state change, payment upserts,
progress counters) or nothing. The engine owns applying outcomes to the
ledger; keeping the machine pure makes exhaustive and randomized property
tests cheap.

Acceptance rules:
  - a sale at or under the zero-conf cap flips to PAID_0CONF the moment a
    full payment is seen in the mempool;
  - above the cap it stays PENDING (with the evidence recorded) until the
    banded confirmation count is reached, then goes straight to CONFIRMED,
    so PAID_0CONF is unreachable for it;
  - underpayments park the sale as UNDERPAID awaiting top-up until expiry;
  - overpayment is accepted; the excess is recorded, never refunded
    automatically;
  - a conflict against the matched tx before confirmation means
    DOUBLE_SPENT; after confirmation it raises the reorg alert instead
    (regression is disabled unless the policy explicitly allows it).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal

from stillpos.errors import ValidationError
from stillpos.ledger.model import PaymentRecord, SaleRecord
from stillpos.payments.model import (
    BlockMined,
    ChainEvent,
    Conflict,
    InvoiceState,
    MatchPolicy,
    PaymentStatus,
    Reorg,
    Tick,
    TxSeen,
)
from stillpos.tx import Transaction, address_for_script

MatchKind = Literal["exact", "under", "over", "none"]


@dataclass(frozen=True)
class Match:
    kind: MatchKind
    paid_sats: int = 0
    excess_sats: int = 0


def classify_total(total_sats: int, required_sats: int, policy: MatchPolicy) -> MatchKind:
    if total_sats <= 0:
        return "none"
    if total_sats > required_sats:
        return "over"
    if total_sats >= policy.lower_bound_sats(required_sats):
        return "exact"
    return "under"


def match_payment(sale: SaleRecord, tx: Transaction, policy: MatchPolicy | None = None) -> Match:
    """Classify one transaction against a sale: outputs paying the sale
    address are aggregated."""
    policy = policy or MatchPolicy()
    if not isinstance(tx, Transaction):
        raise ValidationError("malformed transaction")
    network = _network_for_address(sale.address)
    total = 0
    for out in tx.outputs:
        if address_for_script(out.script_pubkey, network) == sale.address:
            total += out.value_sats
    kind = classify_total(total, sale.btc_sats, policy)
    if kind == "none":
        return Match("none")
    if kind == "over":
        return Match("over", paid_sats=total, excess_sats=total - sale.btc_sats)
    return Match(kind, paid_sats=total)


def _network_for_address(address: str):
    from stillpos.keystore.addresses import decode_address
    from stillpos.keystore.bip32 import MAINNET, TESTNET

    version, _ = decode_address(address)
    return MAINNET if version == MAINNET.p2pkh_version else TESTNET


@dataclass(frozen=True)
class Outcome:
    sale_id: str
    new_state: InvoiceState | None = None
    payments: tuple[PaymentRecord, ...] = field(default=())
    progress: dict = field(default_factory=dict)
    reason: str = ""

    @property
    def is_empty(self) -> bool:
        return self.new_state is None and not self.payments and not self.progress


ConfirmationsOf = Callable[[str], int | None]

_SETTLED = (InvoiceState.DOUBLE_SPENT, InvoiceState.LATE_PAID)
_AWAITING = (InvoiceState.PENDING, InvoiceState.UNDERPAID)


def on_event(
    sale: SaleRecord,
    payments: list[PaymentRecord],
    event: ChainEvent,
    policy: MatchPolicy,
    now: int,
    confirmations_of: ConfirmationsOf,
) -> Outcome | None:
    """Decide what one event does to one sale. None means no effect."""
    if isinstance(event, TxSeen):
        return _on_tx_seen(sale, payments, event, policy, now)
    if isinstance(event, (BlockMined, Reorg)):
        return _on_chain_moved(sale, payments, event, policy, confirmations_of)
    if isinstance(event, Conflict):
        return _on_conflict(sale, payments, event, policy)
    if isinstance(event, Tick):
        return _on_tick(sale, event, policy)
    return None


def _on_tx_seen(
    sale: SaleRecord,
    payments: list[PaymentRecord],
    event: TxSeen,
    policy: MatchPolicy,
    now: int,
) -> Outcome | None:
    paid_here = event.paid_to(sale.address)
    if paid_here <= 0:
        return None
    if any(p.txid == event.txid for p in payments):
        return None  # duplicate delivery
    payment = PaymentRecord(
        txid=event.txid, sale_id=sale.sale_id, paid_sats=paid_here, first_seen_at=now
    )

    if sale.state == InvoiceState.EXPIRED:
        return Outcome(
            sale_id=sale.sale_id,
            new_state=InvoiceState.LATE_PAID,
            payments=(payment,),
            progress={"paid_sats": sale.paid_sats + paid_here, "matched_txid": event.txid},
            reason="payment after expiry",
        )

    if sale.state in _SETTLED or sale.state in (
        InvoiceState.PAID_0CONF,
        InvoiceState.CONFIRMED,
        InvoiceState.OVERPAID,
    ):
        # extra money on a settled sale: bookkeeping only
        new_paid = sale.paid_sats + paid_here
        return Outcome(
            sale_id=sale.sale_id,
            payments=(payment,),
            progress={
                "paid_sats": new_paid,
                "excess_sats": max(0, new_paid - sale.btc_sats),
            },
            reason="payment on settled sale",
        )

    # PENDING or UNDERPAID
    new_paid = sale.paid_sats + paid_here
    kind = classify_total(new_paid, sale.btc_sats, policy)
    progress: dict = {"paid_sats": new_paid}
    if kind == "under":
        new_state = (
            InvoiceState.UNDERPAID if sale.state == InvoiceState.PENDING else None
        )
        return Outcome(
            sale_id=sale.sale_id,
            new_state=new_state,
            payments=(payment,),
            progress=progress,
            reason=f"underpaid: {new_paid}/{sale.btc_sats} sats",
        )
    # paid in full (possibly over)
    progress["matched_txid"] = event.txid
    if kind == "over":
        progress["excess_sats"] = new_paid - sale.btc_sats
    if policy.zero_conf_allowed(sale.fiat_cents):
        return Outcome(
            sale_id=sale.sale_id,
            new_state=InvoiceState.PAID_0CONF,
            payments=(payment,),
            progress=progress,
            reason="payment seen; within zero-conf cap",
        )
    return Outcome(
        sale_id=sale.sale_id,
        new_state=None,  # gate: must wait for confirmations
        payments=(payment,),
        progress=progress,
        reason=(
            f"payment seen; awaiting {policy.confirmations_to_confirm(sale.fiat_cents)}"
            " confirmations (above zero-conf cap)"
        ),
    )


def _on_chain_moved(
    sale: SaleRecord,
    payments: list[PaymentRecord],
    event: BlockMined | Reorg,
    policy: MatchPolicy,
    confirmations_of: ConfirmationsOf,
) -> Outcome | None:
    if not payments:
        return None
    updated: list[PaymentRecord] = []
    for payment in payments:
        if payment.status == PaymentStatus.CONFLICTED:
            continue
        confs = confirmations_of(payment.txid)
        if confs is None:
            continue  # conflicts arrive as their own events
        status = PaymentStatus.CONFIRMED if confs >= 1 else PaymentStatus.MEMPOOL
        if confs != payment.confirmations or status != payment.status:
            updated.append(
                PaymentRecord(
                    txid=payment.txid,
                    sale_id=payment.sale_id,
                    paid_sats=payment.paid_sats,
                    first_seen_at=payment.first_seen_at,
                    confirmations=confs,
                    status=status,
                )
            )

    # the sale settles on its slowest contributing payment: every
    # unconflicted payment must reach the banded confirmation count
    contributing = [
        confirmations_of(p.txid)
        for p in payments
        if p.status != PaymentStatus.CONFLICTED
    ]
    known = [c for c in contributing if c is not None]
    matched_confs = min(known) if known and sale.matched_txid is not None else None

    needed = policy.confirmations_to_confirm(sale.fiat_cents)
    fully_paid = classify_total(sale.paid_sats, sale.btc_sats, policy) in ("exact", "over")

    if (
        sale.state in (InvoiceState.PENDING, InvoiceState.UNDERPAID, InvoiceState.PAID_0CONF)
        and fully_paid
        and matched_confs is not None
        and matched_confs >= needed
    ):
        return Outcome(
            sale_id=sale.sale_id,
            new_state=InvoiceState.CONFIRMED,
            payments=tuple(updated),
            reason=f"{matched_confs} confirmations (needed {needed})",
        )

    if (
        isinstance(event, Reorg)
        and sale.state == InvoiceState.CONFIRMED
        and matched_confs is not None
        and matched_confs < needed
    ):
        if policy.allow_confirmation_regression:
            return Outcome(
                sale_id=sale.sale_id,
                new_state=InvoiceState.PAID_0CONF,
                payments=tuple(updated),
                reason=f"reorg: confirmations fell to {matched_confs}",
            )
        return Outcome(
            sale_id=sale.sale_id,
            payments=tuple(updated),
            progress={"reorg_alert": True},
            reason=f"reorg: confirmations fell to {matched_confs}; flagged for admin",
        )

    if updated:
        return Outcome(sale_id=sale.sale_id, payments=tuple(updated), reason="confirmations")
    return None


def _on_conflict(
    sale: SaleRecord,
    payments: list[PaymentRecord],
    event: Conflict,
    policy: MatchPolicy,
) -> Outcome | None:
    target = next((p for p in payments if p.txid == event.txid), None)
    if target is None or target.status == PaymentStatus.CONFLICTED:
        return None  # not ours, or duplicate delivery
    conflicted = PaymentRecord(
        txid=target.txid,
        sale_id=target.sale_id,
        paid_sats=target.paid_sats,
        first_seen_at=target.first_seen_at,
        confirmations=0,
        status=PaymentStatus.CONFLICTED,
    )
    new_paid = max(0, sale.paid_sats - target.paid_sats)
    progress: dict = {
        "paid_sats": new_paid,
        "excess_sats": max(0, new_paid - sale.btc_sats),
    }
    reason = f"tx {event.txid} double-spent by {event.conflicting_txid}"

    if sale.state == InvoiceState.PAID_0CONF and event.txid == sale.matched_txid:
        return Outcome(
            sale_id=sale.sale_id,
            new_state=InvoiceState.DOUBLE_SPENT,
            payments=(conflicted,),
            progress=progress,
            reason=reason,
        )
    if sale.state == InvoiceState.CONFIRMED and event.txid == sale.matched_txid:
        # conflicting spend of a confirmed payment implies a reorg;
        # humans resolve it via the report
        progress["reorg_alert"] = True
        return Outcome(
            sale_id=sale.sale_id, payments=(conflicted,), progress=progress, reason=reason
        )
    if event.txid == sale.matched_txid:
        progress["matched_txid"] = None
    return Outcome(
        sale_id=sale.sale_id, payments=(conflicted,), progress=progress, reason=reason
    )


def _on_tick(sale: SaleRecord, event: Tick, policy: MatchPolicy) -> Outcome | None:
    if sale.state not in _AWAITING:
        return None
    if event.observed_at <= sale.expires_at:
        return None
    if classify_total(sale.paid_sats, sale.btc_sats, policy) in ("exact", "over"):
        return None  # fully paid, waiting out confirmations: never expire
    return Outcome(
        sale_id=sale.sale_id,
        new_state=InvoiceState.EXPIRED,
        reason="expiry window passed without full payment",
    )
