"""Chain source backed by an external block-explorer HTTP API.

Polls a configurable endpoint set and converts responses into the same
events the simulated node emits. Expected JSON (documented contract for
whatever explorer or shim fronts the node):

    GET {address_txs}   .../address/{address}/txs ->
        [{"txid": str, "outputs": [{"address": str|null, "value_sats": int}],
          "block_height": int|null, "conflicting_txid": str|null}]
    GET {tx_status}     .../tx/{txid}/status ->
        {"block_height": int|null, "conflicting_txid": str|null}
    GET {tip_height}    .../blocks/tip/height -> {"height": int}
    GET {address_utxos} .../address/{address}/utxo ->
        [{"txid": str, "vout": int, "value_sats": int}]
    POST {broadcast}    .../tx  body: hex -> {"txid": str}

Polling backs off exponentially on errors (up to 60 s) and resets on the
first success; the default interval is 5 s so a mempool payment shows up
within one customer-page poll.
"""

from __future__ import annotations

import json
import logging
import threading
import urllib.error
import urllib.request

from stillpos.errors import ChainError, ConfigError
from stillpos.payments.model import (
    BlockMined,
    BroadcastResult,
    Conflict,
    Reorg,
    TxSeen,
    UtxoRef,
)
from stillpos.tx import Transaction

log = logging.getLogger(__name__)

DEFAULT_POLL_SECONDS = 5.0
_MAX_BACKOFF_SECONDS = 60.0

REQUIRED_ENDPOINTS = ("address_txs", "tx_status", "tip_height", "address_utxos", "broadcast")


class ExplorerSource:
    def __init__(
        self,
        endpoints: dict[str, str],
        clock,
        *,
        poll_seconds: float = DEFAULT_POLL_SECONDS,
        timeout: float = 10.0,
    ):
        missing = [name for name in REQUIRED_ENDPOINTS if name not in endpoints]
        if missing:
            raise ConfigError(f"explorer endpoints missing: {', '.join(missing)}")
        self.endpoints = endpoints
        self.clock = clock
        self.poll_seconds = poll_seconds
        self.timeout = timeout
        self._subscribers: list = []
        self._watched: set[str] = set()
        self._seen_txids: set[str] = set()
        self._conflicted: set[str] = set()
        self._last_tip: int | None = None
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    # --- ChainSource surface ---

    def subscribe(self, callback) -> None:
        self._subscribers.append(callback)

    def watch(self, address: str) -> None:
        with self._lock:
            self._watched.add(address)

    def confirmations(self, txid: str) -> int:
        status = self._get("tx_status", txid=txid)
        height = status.get("block_height")
        if height is None:
            if status.get("conflicting_txid"):
                raise ChainError(f"tx {txid} was double-spent")
            return 0
        return max(0, self.tip_height() - height + 1)

    def utxos(self, address: str) -> list[UtxoRef]:
        entries = self._get("address_utxos", address=address)
        return [
            UtxoRef(e["txid"], e["vout"], e["value_sats"], address) for e in entries
        ]

    def tip_height(self) -> int:
        data = self._get("tip_height")
        return data["height"] if isinstance(data, dict) else int(data)

    def broadcast(self, tx: Transaction) -> BroadcastResult:
        url = self.endpoints["broadcast"]
        request = urllib.request.Request(
            url, data=tx.serialize().hex().encode(), method="POST"
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as resp:
                body = json.loads(resp.read().decode())
            return BroadcastResult(accepted=True, txid=body["txid"])
        except urllib.error.HTTPError as exc:
            detail = exc.read().decode(errors="replace")[:200]
            return BroadcastResult(accepted=False, txid=tx.txid(), reason=detail)
        except (OSError, urllib.error.URLError) as exc:
            raise ChainError(f"broadcast failed: {exc}") from None

    # --- polling ---

    def start(self) -> None:
        if self._thread is not None:
            return
        self._stop.clear()
        self._thread = threading.Thread(target=self._loop, name="explorer-poll", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        if self._thread is None:
            return
        self._stop.set()
        self._thread.join(timeout=5)
        self._thread = None

    def _loop(self) -> None:
        backoff = self.poll_seconds
        while not self._stop.is_set():
            try:
                self.poll_once()
                backoff = self.poll_seconds
            except Exception as exc:
                log.warning("explorer poll failed: %s", exc)
                backoff = min(backoff * 2, _MAX_BACKOFF_SECONDS)
            self._stop.wait(backoff)

    def poll_once(self) -> None:
        """One polling pass: tip first, then per-address transactions."""
        now = self.clock.now()
        tip = self.tip_height()
        with self._lock:
            watched = list(self._watched)
        for address in watched:
            for entry in self._get("address_txs", address=address):
                txid = entry["txid"]
                conflicting = entry.get("conflicting_txid")
                if conflicting and txid not in self._conflicted:
                    self._conflicted.add(txid)
                    self._emit(Conflict(txid, conflicting, now))
                    continue
                if txid in self._seen_txids:
                    continue
                self._seen_txids.add(txid)
                outputs = tuple(
                    (out.get("address"), out["value_sats"]) for out in entry["outputs"]
                )
                self._emit(TxSeen(txid=txid, outputs=outputs, observed_at=now))
        if self._last_tip is None:
            self._last_tip = tip
        elif tip > self._last_tip:
            self._last_tip = tip
            self._emit(BlockMined(tip, (), now))
        elif tip < self._last_tip:
            self._last_tip = tip
            self._emit(Reorg(tip, now))

    # --- plumbing ---

    def _emit(self, event) -> None:
        for callback in self._subscribers:
            callback(event)

    def _get(self, endpoint: str, **params):
        url = self.endpoints[endpoint].format(**params)
        try:
            with urllib.request.urlopen(url, timeout=self.timeout) as resp:
                return json.loads(resp.read().decode())
        except (OSError, urllib.error.URLError) as exc:
            raise ChainError(f"explorer request failed: {exc}") from None
