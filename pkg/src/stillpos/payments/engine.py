"""Drives the ledger from chain events.

Events from the chain source land in one ordered queue and are consumed
serially; every outcome is applied to the ledger atomically, then waiters
(long-polling status requests) are woken. Processing is idempotent:
duplicate events produce no second transition.
"""

from __future__ import annotations

import logging
import threading
from collections import deque

from stillpos.payments import machine
from stillpos.payments.model import (
    BlockMined,
    ChainEvent,
    Conflict,
    MatchPolicy,
    Reorg,
    Tick,
    TxSeen,
)

log = logging.getLogger(__name__)


class PaymentEngine:
    def __init__(self, ledger, chain, policy: MatchPolicy, clock):
        self.ledger = ledger
        self.chain = chain
        self.policy = policy
        self.clock = clock
        self._queue: deque[ChainEvent] = deque()
        self._drain_lock = threading.Lock()
        self._changed = threading.Condition()
        self._versions: dict[str, int] = {}
        chain.subscribe(self.enqueue)

    # --- event intake ---

    def enqueue(self, event: ChainEvent) -> None:
        self._queue.append(event)
        self.drain()

    def drain(self) -> None:
        # one drainer at a time; others' events stay queued for it
        if not self._drain_lock.acquire(blocking=False):
            return
        try:
            while self._queue:
                event = self._queue.popleft()
                try:
                    self._process(event)
                except Exception:  # keep the queue alive; an event must not kill it
                    log.exception("event processing failed: %r", event)
        finally:
            self._drain_lock.release()

    def tick(self, now: int | None = None) -> None:
        """Expiry sweep; the server calls this on a timer, scenarios via TICK."""
        self.enqueue(Tick(now if now is not None else self.clock.now()))

    # --- processing ---

    def _confirmations_of(self, txid: str) -> int | None:
        try:
            return self.chain.confirmations(txid)
        except Exception:
            return None

    def _process(self, event: ChainEvent) -> None:
        for sale in self._sales_for(event):
            payments = self.ledger.payments_for(sale.sale_id)
            outcome = machine.on_event(
                sale, payments, event, self.policy, self.clock.now(), self._confirmations_of
            )
            if outcome is None or outcome.is_empty:
                continue
            if outcome.new_state is not None:
                self.ledger.apply_state(
                    outcome.sale_id,
                    outcome.new_state,
                    list(outcome.payments),
                    reason=outcome.reason,
                    progress=outcome.progress or None,
                )
            else:
                self.ledger.record_progress(
                    outcome.sale_id,
                    payments=list(outcome.payments),
                    progress=outcome.progress or None,
                    reason=outcome.reason,
                )
            self._bump(outcome.sale_id)

    def _sales_for(self, event: ChainEvent):
        if isinstance(event, TxSeen):
            sales = []
            for address, _value in event.outputs:
                if address is None:
                    continue
                sale = self.ledger.sale_by_address(address)
                if sale is not None:
                    sales.append(sale)
                else:
                    log.debug("tx %s pays unwatched address %s", event.txid, address)
            return sales
        if isinstance(event, Conflict):
            return [
                self.ledger.sale(payment.sale_id)
                for payment in self._payments_with_txid(event.txid)
            ]
        if isinstance(event, (BlockMined, Reorg)):
            return [s for s in self.ledger.sales() if s.paid_sats > 0 or s.matched_txid]
        if isinstance(event, Tick):
            return self.ledger.expiring_sales(event.observed_at)
        return []

    def _payments_with_txid(self, txid: str):
        found = []
        for sale in self.ledger.sales():
            for payment in self.ledger.payments_for(sale.sale_id):
                if payment.txid == txid:
                    found.append(payment)
        return found

    # --- change notification (long-poll support) ---

    def _bump(self, sale_id: str) -> None:
        with self._changed:
            self._versions[sale_id] = self._versions.get(sale_id, 0) + 1
            self._changed.notify_all()

    def version(self, sale_id: str) -> int:
        with self._changed:
            return self._versions.get(sale_id, 0)

    def wait_for_change(self, sale_id: str, known_version: int, timeout: float) -> int:
        """Block until the sale's version exceeds known_version, or timeout.
        Returns the current version either way."""
        with self._changed:
            self._changed.wait_for(
                lambda: self._versions.get(sale_id, 0) > known_version, timeout=timeout
            )
            return self._versions.get(sale_id, 0)
