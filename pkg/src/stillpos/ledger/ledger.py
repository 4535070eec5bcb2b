"""The sales ledger: journaled sale/payment records with locked pricing.

All mutations are serialized through one writer lock and hit the journal
before the in-memory view; reads hand out copies. The locked price is
structural: fiat_cents and locked_rate are written once at creation and no
code path updates them.
"""

from __future__ import annotations

import csv
import io
import threading
from datetime import datetime, timezone

from stillpos.auth import Role
from stillpos.errors import (
    AuthError,
    IllegalTransition,
    UnknownSale,
    ValidationError,
)
from stillpos.ledger.journal import Journal
from stillpos.ledger.model import (
    BranchConfig,
    PaymentRecord,
    ReportResult,
    ReportRow,
    SaleRecord,
    TransitionLogEntry,
)
from stillpos.payments.model import InvoiceState, PAID_STATES, is_legal_transition
from stillpos.rates.model import convert

REC_LEDGER_CREATED = 0
REC_SALE_CREATED = 1
REC_SALE_UPDATED = 2
REC_SWEEP_MARKED = 3

EMPLOYEE_WINDOW_SECONDS = 24 * 3600
DEFAULT_EXPIRY_SECONDS = 15 * 60
DEFAULT_NOTE_LIMIT = 500

# report totals count exactly these states
TOTALED_STATES = frozenset({InvoiceState.PAID_0CONF, InvoiceState.CONFIRMED})


class Ledger:
    def __init__(
        self,
        directory: str,
        keystore,
        rates,
        clock,
        *,
        branch: BranchConfig | None = None,
        expiry_seconds: int = DEFAULT_EXPIRY_SECONDS,
        explorer_url_template: str | None = None,
        snapshot_every: int | None = 1000,
        fsync: bool = False,
    ):
        self.keystore = keystore
        self.rates = rates
        self.clock = clock
        self.branch = branch or BranchConfig()
        self.expiry_seconds = expiry_seconds
        self.explorer_url_template = explorer_url_template
        self.snapshot_every = snapshot_every

        self._lock = threading.RLock()
        self._journal = Journal(directory, fsync=fsync)
        self._sales: dict[str, SaleRecord] = {}
        self._sales_by_address: dict[str, str] = {}
        self._payments: dict[tuple[str, str], PaymentRecord] = {}
        self._transitions: list[TransitionLogEntry] = []
        self._sweeps: list[dict] = []
        self._next_sale_seq = 1
        self._genesis_at: int | None = None
        self._records_since_snapshot = 0
        self.recovered_with_truncation = False

        self._recover()
        if self._genesis_at is None:
            now = self.clock.now()
            self._append(REC_LEDGER_CREATED, {"at": now})
            self._genesis_at = now

    def close(self) -> None:
        self._journal.close()

    # --- recovery ---

    def _recover(self) -> None:
        snapshot = self._journal.load_snapshot()
        last_seq = 0
        if snapshot is not None:
            state, last_seq = snapshot
            self._load_state(state)
        records, truncated = self._journal.replay()
        self.recovered_with_truncation = truncated
        max_seq = last_seq
        for seq, record_type, payload in records:
            if seq <= last_seq:
                continue  # already folded into the snapshot
            self._apply_record(record_type, payload)
            max_seq = max(max_seq, seq)
        self._journal.next_seq = max_seq + 1

    def _load_state(self, state: dict) -> None:
        self._sales = {s["sale_id"]: SaleRecord.from_json(s) for s in state["sales"]}
        self._sales_by_address = {s.address: s.sale_id for s in self._sales.values()}
        self._payments = {
            (p["txid"], p["sale_id"]): PaymentRecord.from_json(p)
            for p in state["payments"]
        }
        self._transitions = [TransitionLogEntry.from_json(t) for t in state["transitions"]]
        self._sweeps = list(state["sweeps"])
        self._next_sale_seq = state["next_sale_seq"]
        self._genesis_at = state["genesis_at"]

    def _dump_state(self) -> dict:
        return {
            "sales": [s.to_json() for s in self._sales.values()],
            "payments": [p.to_json() for p in self._payments.values()],
            "transitions": [t.to_json() for t in self._transitions],
            "sweeps": self._sweeps,
            "next_sale_seq": self._next_sale_seq,
            "genesis_at": self._genesis_at,
        }

    def _apply_record(self, record_type: int, payload: dict) -> None:
        if record_type == REC_LEDGER_CREATED:
            if self._genesis_at is None:
                self._genesis_at = payload["at"]
        elif record_type == REC_SALE_CREATED:
            sale = SaleRecord.from_json(payload["sale"])
            self._sales[sale.sale_id] = sale
            self._sales_by_address[sale.address] = sale.sale_id
            self._next_sale_seq = max(self._next_sale_seq, payload["seq"] + 1)
        elif record_type == REC_SALE_UPDATED:
            self._apply_update(payload)
        elif record_type == REC_SWEEP_MARKED:
            for sale_id in payload["sale_ids"]:
                if sale_id in self._sales:
                    self._sales[sale_id].swept_by = payload["txid"]
                    self._sales[sale_id].updated_at = payload["at"]
            self._sweeps.append(payload)

    def _apply_update(self, payload: dict) -> None:
        sale = self._sales.get(payload["sale_id"])
        if sale is None:
            return
        at = payload["at"]
        for payment_json in payload.get("payments", []):
            record = PaymentRecord.from_json(payment_json)
            self._payments[(record.txid, record.sale_id)] = record
        progress = payload.get("progress", {})
        if "paid_sats" in progress:
            sale.paid_sats = progress["paid_sats"]
        if "excess_sats" in progress:
            sale.excess_sats = progress["excess_sats"]
        if "matched_txid" in progress:
            sale.matched_txid = progress["matched_txid"]
        if "reorg_alert" in progress:
            sale.reorg_alert = progress["reorg_alert"]
        if "state" in payload:
            new_state = InvoiceState(payload["state"])
            if new_state != sale.state:
                self._transitions.append(
                    TransitionLogEntry(
                        sale_id=sale.sale_id,
                        from_state=sale.state,
                        to_state=new_state,
                        at=at,
                        reason=payload.get("reason", ""),
                        txid=payload.get("evidence_txid"),
                    )
                )
                sale.state = new_state
        sale.updated_at = at

    # --- journaling ---

    def _append(self, record_type: int, payload: dict) -> None:
        self._journal.append(record_type, payload)
        self._records_since_snapshot += 1

    def _maybe_compact(self) -> None:
        # callers invoke this only after the in-memory view includes the
        # appended record, so the snapshot is never behind the journal reset;
        # the threshold scales with state size to keep compaction amortized O(1)
        if self.snapshot_every is None:
            return
        threshold = max(self.snapshot_every, len(self._sales))
        if self._records_since_snapshot >= threshold:
            self._journal.compact(self._dump_state(), self._journal.next_seq - 1)
            self._records_since_snapshot = 0

    def compact(self) -> None:
        with self._lock:
            self._journal.compact(self._dump_state(), self._journal.next_seq - 1)
            self._records_since_snapshot = 0

    def journal_bytes(self) -> int:
        return self._journal.byte_length()

    # --- sale creation ---

    def create_sale(
        self,
        fiat_cents: int,
        currency: str | None = None,
        note: str = "",
        branch_id: str | None = None,
    ) -> SaleRecord:
        if not isinstance(fiat_cents, int) or fiat_cents <= 0:
            raise ValidationError("amount must be a positive integer of cents")
        if len(note) > DEFAULT_NOTE_LIMIT:
            raise ValidationError(f"note longer than {DEFAULT_NOTE_LIMIT} characters")
        currency = currency or self.branch.default_currency
        snapshot = self.rates.current(currency)  # raises StaleRates
        sats = convert(fiat_cents, snapshot.aggregate_cents)  # raises SaleTooSmall
        with self._lock:
            address, index = self.keystore.next_address()
            if address in self._sales_by_address:
                raise ValidationError(f"address {address} already belongs to a sale")
            now = self.clock.now()
            seq = self._next_sale_seq
            sale = SaleRecord(
                sale_id=f"sale-{seq:06d}",
                branch_id=branch_id or self.branch.branch_id,
                fiat_cents=fiat_cents,
                fiat_currency=currency,
                locked_rate=snapshot.aggregate_cents,
                btc_sats=sats,
                address=address,
                derivation_index=index,
                note=note,
                created_at=now,
                expires_at=now + self.expiry_seconds,
            )
            self._append(REC_SALE_CREATED, {"sale": sale.to_json(), "seq": seq})
            self._next_sale_seq = seq + 1
            self._sales[sale.sale_id] = sale
            self._sales_by_address[address] = sale.sale_id
            self._maybe_compact()
            return sale.copy()

    # --- state transitions ---

    def apply_state(
        self,
        sale_id: str,
        new_state: InvoiceState,
        evidence: PaymentRecord | list[PaymentRecord] | None = None,
        *,
        reason: str = "",
        progress: dict | None = None,
    ) -> SaleRecord:
        with self._lock:
            sale = self._sales.get(sale_id)
            if sale is None:
                raise UnknownSale(sale_id)
            if new_state != sale.state and not is_legal_transition(sale.state, new_state):
                raise IllegalTransition(
                    f"{sale.state.value} -> {new_state.value} is not allowed",
                    from_state=sale.state.value,
                    to_state=new_state.value,
                )
            payments = (
                [evidence] if isinstance(evidence, PaymentRecord) else list(evidence or [])
            )
            payload: dict = {
                "sale_id": sale_id,
                "at": self.clock.now(),
                "reason": reason,
                "state": new_state.value,
            }
            if payments:
                payload["payments"] = [p.to_json() for p in payments]
                payload["evidence_txid"] = payments[0].txid
            if progress:
                payload["progress"] = progress
            self._append(REC_SALE_UPDATED, payload)
            self._apply_update(payload)
            self._maybe_compact()
            return sale.copy()

    def record_progress(
        self,
        sale_id: str,
        *,
        payments: list[PaymentRecord] | None = None,
        progress: dict | None = None,
        reason: str = "",
    ) -> SaleRecord:
        """Payment bookkeeping that does not change the invoice state."""
        with self._lock:
            sale = self._sales.get(sale_id)
            if sale is None:
                raise UnknownSale(sale_id)
            payload: dict = {"sale_id": sale_id, "at": self.clock.now(), "reason": reason}
            if payments:
                payload["payments"] = [p.to_json() for p in payments]
            if progress:
                payload["progress"] = progress
            self._append(REC_SALE_UPDATED, payload)
            self._apply_update(payload)
            self._maybe_compact()
            return sale.copy()

    # --- queries ---

    def sale(self, sale_id: str) -> SaleRecord:
        with self._lock:
            sale = self._sales.get(sale_id)
            if sale is None:
                raise UnknownSale(sale_id)
            return sale.copy()

    def sale_by_address(self, address: str) -> SaleRecord | None:
        with self._lock:
            sale_id = self._sales_by_address.get(address)
            return self._sales[sale_id].copy() if sale_id else None

    def sales(self) -> list[SaleRecord]:
        with self._lock:
            return [s.copy() for s in self._sales.values()]

    def payments_for(self, sale_id: str) -> list[PaymentRecord]:
        with self._lock:
            return [p.copy() for (_, sid), p in self._payments.items() if sid == sale_id]

    def payment(self, txid: str, sale_id: str) -> PaymentRecord | None:
        with self._lock:
            record = self._payments.get((txid, sale_id))
            return record.copy() if record else None

    def transitions(self, sale_id: str | None = None) -> list[TransitionLogEntry]:
        with self._lock:
            return [t for t in self._transitions if sale_id is None or t.sale_id == sale_id]

    def expiring_sales(self, now: int) -> list[SaleRecord]:
        """Sales the expiry sweep should look at."""
        with self._lock:
            return [
                s.copy()
                for s in self._sales.values()
                if s.state in (InvoiceState.PENDING, InvoiceState.UNDERPAID)
                and now > s.expires_at
            ]

    # --- sweeps ---

    def unswept_paid_sales(self) -> list[SaleRecord]:
        with self._lock:
            return [
                s.copy()
                for s in self._sales.values()
                if s.state in PAID_STATES and s.swept_by is None
            ]

    def mark_swept(self, sale_ids: list[str], txid: str, outpoints: list[list]) -> None:
        with self._lock:
            payload = {
                "sale_ids": sale_ids,
                "txid": txid,
                "outpoints": outpoints,
                "at": self.clock.now(),
            }
            self._append(REC_SWEEP_MARKED, payload)
            self._apply_record(REC_SWEEP_MARKED, payload)
            self._maybe_compact()

    def last_sweep_at(self) -> int | None:
        with self._lock:
            return max((s["at"] for s in self._sweeps), default=None)

    @property
    def genesis_at(self) -> int:
        assert self._genesis_at is not None
        return self._genesis_at

    # --- reporting ---

    def report(self, from_ts: int, to_ts: int, role: Role) -> ReportResult:
        if role == Role.PUBLIC:
            raise AuthError("reports need an employee or admin credential")
        now = self.clock.now()
        if role == Role.EMPLOYEE:
            # employees verify recent sales only; no running totals
            from_ts = max(from_ts, now - EMPLOYEE_WINDOW_SECONDS)
        with self._lock:
            selected = sorted(
                (
                    s
                    for s in self._sales.values()
                    if from_ts <= s.created_at <= to_ts
                ),
                key=lambda s: (s.created_at, s.sale_id),
            )
            rows = tuple(self._row_for(s) for s in selected)
            if role == Role.EMPLOYEE:
                return ReportResult(rows=rows)
            totals: dict[str, int] = {}
            balances: dict[str, int] = {}
            alerts: list[str] = []
            for sale in selected:
                if sale.state in TOTALED_STATES:
                    totals[sale.fiat_currency] = (
                        totals.get(sale.fiat_currency, 0) + sale.fiat_cents
                    )
                if sale.paid_sats > 0 and sale.swept_by is None:
                    balances[sale.address] = sale.paid_sats
                if sale.state == InvoiceState.DOUBLE_SPENT:
                    alerts.append(f"{sale.sale_id}: double spend detected")
                if sale.reorg_alert:
                    alerts.append(f"{sale.sale_id}: confirmations regressed (reorg)")
            return ReportResult(
                rows=rows,
                totals_by_currency=totals,
                address_balances=balances,
                alerts=tuple(alerts),
            )

    def _row_for(self, sale: SaleRecord) -> ReportRow:
        txid = sale.matched_txid
        explorer = None
        if txid and self.explorer_url_template:
            explorer = self.explorer_url_template.format(txid=txid)
        return ReportRow(
            sale_id=sale.sale_id,
            created_at=sale.created_at,
            note=sale.note,
            fiat_cents=sale.fiat_cents,
            fiat_currency=sale.fiat_currency,
            btc_sats=sale.btc_sats,
            state=sale.state.value,
            overpaid=sale.overpaid,
            txid=txid,
            explorer_url=explorer,
            address=sale.address,
            reorg_alert=sale.reorg_alert,
        )


CSV_COLUMNS = [
    "sale_id",
    "time_utc",
    "note",
    "amount_cents",
    "currency",
    "btc_sats",
    "state",
    "overpaid",
    "txid",
    "explorer_url",
    "address",
]


def report_csv(result: ReportResult) -> str:
    """Comma-separated report with a header row."""
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(CSV_COLUMNS)
    for row in result.rows:
        writer.writerow(
            [
                row.sale_id,
                datetime.fromtimestamp(row.created_at, tz=timezone.utc).isoformat(),
                row.note,
                row.fiat_cents,
                row.fiat_currency,
                row.btc_sats,
                row.state,
                "yes" if row.overpaid else "",
                row.txid or "",
                row.explorer_url or "",
                row.address,
            ]
        )
    return out.getvalue()
