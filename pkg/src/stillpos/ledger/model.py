"""Sale and payment records, branch configuration, report rows."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from stillpos.errors import ValidationError
from stillpos.payments.model import InvoiceState, PaymentStatus


@dataclass
class SaleRecord:
    sale_id: str
    branch_id: str
    fiat_cents: int  # locked at sale time, never changes
    fiat_currency: str
    locked_rate: int  # cents per BTC at sale time
    btc_sats: int
    address: str
    derivation_index: int
    note: str
    created_at: int
    expires_at: int
    state: InvoiceState = InvoiceState.PENDING
    paid_sats: int = 0  # cumulative unconflicted payments
    excess_sats: int = 0  # overpay flag variant
    matched_txid: str | None = None
    reorg_alert: bool = False
    swept_by: str | None = None
    updated_at: int = 0

    def __post_init__(self):
        if self.updated_at == 0:
            self.updated_at = self.created_at

    @property
    def overpaid(self) -> bool:
        return self.excess_sats > 0

    def to_json(self) -> dict:
        # hand-rolled: asdict() deep-copies and this runs once per journal write
        return {
            "sale_id": self.sale_id,
            "branch_id": self.branch_id,
            "fiat_cents": self.fiat_cents,
            "fiat_currency": self.fiat_currency,
            "locked_rate": self.locked_rate,
            "btc_sats": self.btc_sats,
            "address": self.address,
            "derivation_index": self.derivation_index,
            "note": self.note,
            "created_at": self.created_at,
            "expires_at": self.expires_at,
            "state": self.state.value,
            "paid_sats": self.paid_sats,
            "excess_sats": self.excess_sats,
            "matched_txid": self.matched_txid,
            "reorg_alert": self.reorg_alert,
            "swept_by": self.swept_by,
            "updated_at": self.updated_at,
        }

    @classmethod
    def from_json(cls, data: dict) -> "SaleRecord":
        data = dict(data)
        data["state"] = InvoiceState(data["state"])
        return cls(**data)

    def copy(self) -> "SaleRecord":
        return replace(self)


@dataclass
class PaymentRecord:
    txid: str
    sale_id: str
    paid_sats: int
    first_seen_at: int
    confirmations: int = 0
    status: PaymentStatus = PaymentStatus.MEMPOOL

    def __post_init__(self):
        if self.paid_sats <= 0:
            raise ValidationError("payment must carry positive value")

    def to_json(self) -> dict:
        return {
            "txid": self.txid,
            "sale_id": self.sale_id,
            "paid_sats": self.paid_sats,
            "first_seen_at": self.first_seen_at,
            "confirmations": self.confirmations,
            "status": self.status.value,
        }

    @classmethod
    def from_json(cls, data: dict) -> "PaymentRecord":
        data = dict(data)
        data["status"] = PaymentStatus(data["status"])
        return cls(**data)

    def copy(self) -> "PaymentRecord":
        return replace(self)


@dataclass(frozen=True)
class BranchConfig:
    branch_id: str = "main"
    display_name: str = "stillpos"
    default_currency: str = "CAD"
    zero_conf_max_fiat_cents: int = 5000
    cashout_threshold_cents: int = 10_000
    cashout_interval_days: int = 30

    def __post_init__(self):
        if self.cashout_threshold_cents <= 0 or self.cashout_interval_days <= 0:
            raise ValidationError("cash-out thresholds must be positive")
        if self.zero_conf_max_fiat_cents < 0:
            raise ValidationError("zero-conf cap cannot be negative")

    @classmethod
    def from_json(cls, data: dict) -> "BranchConfig":
        return cls(**data)


@dataclass(frozen=True)
class TransitionLogEntry:
    sale_id: str
    from_state: InvoiceState
    to_state: InvoiceState
    at: int
    reason: str
    txid: str | None = None

    def to_json(self) -> dict:
        return {
            "sale_id": self.sale_id,
            "from_state": self.from_state.value,
            "to_state": self.to_state.value,
            "at": self.at,
            "reason": self.reason,
            "txid": self.txid,
        }

    @classmethod
    def from_json(cls, data: dict) -> "TransitionLogEntry":
        return cls(
            sale_id=data["sale_id"],
            from_state=InvoiceState(data["from_state"]),
            to_state=InvoiceState(data["to_state"]),
            at=data["at"],
            reason=data["reason"],
            txid=data.get("txid"),
        )


@dataclass(frozen=True)
class ReportRow:
    sale_id: str
    created_at: int
    note: str
    fiat_cents: int
    fiat_currency: str
    btc_sats: int
    state: str
    overpaid: bool
    txid: str | None
    explorer_url: str | None
    address: str
    reorg_alert: bool


@dataclass(frozen=True)
class ReportResult:
    rows: tuple[ReportRow, ...]
    # Admin only; None for the employee view
    totals_by_currency: dict[str, int] | None = None
    address_balances: dict[str, int] | None = None
    cashout_due: bool | None = None
    cashout_reason: str | None = None
    alerts: tuple[str, ...] = field(default=())
