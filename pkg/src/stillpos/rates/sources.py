"""Quote sources and the live rate board.

A source is a small config record pointing at a JSON document: an HTTPS
endpoint for production, or a local fixture file for tests and demos. All
configured sources are fetched concurrently with a per-source timeout;
unreachable ones are reported, not fatal — the median needs a quorum, not
unanimity.
"""

from __future__ import annotations

import json
import threading
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from decimal import Decimal, InvalidOperation, ROUND_HALF_UP

from stillpos.clock import SystemClock
from stillpos.errors import StaleRates, ValidationError
from stillpos.rates.model import (
    DEFAULT_QUORUM,
    DEFAULT_STALENESS_SECONDS,
    DEFAULT_TOLERANCE_BP,
    RateQuote,
    RateSnapshot,
    aggregate,
    verify_assertion,
)

DEFAULT_TIMEOUT_SECONDS = 5.0


@dataclass(frozen=True)
class SourceConfig:
    source_id: str
    kind: str  # "http" | "file"
    location: str  # URL template ({fiat} substituted) or fixture path
    field_path: str  # dotted path into the JSON body, e.g. "data.last"
    fiat: str

    @classmethod
    def from_json(cls, data: dict) -> "SourceConfig":
        try:
            return cls(
                source_id=data["source_id"],
                kind=data.get("kind", "http"),
                location=data["location"],
                field_path=data["field_path"],
                fiat=data["fiat"],
            )
        except KeyError as exc:
            raise ValidationError(f"rate source config missing {exc.args[0]!r}") from None


def price_to_cents(value) -> int:
    """Normalize a fetched price (number or decimal string) to fiat cents."""
    try:
        cents = (Decimal(str(value)) * 100).quantize(Decimal("1"), rounding=ROUND_HALF_UP)
    except InvalidOperation:
        raise ValidationError(f"unparseable price {value!r}") from None
    if cents <= 0:
        raise ValidationError(f"non-positive price {value!r}")
    return int(cents)


def _walk_path(document, path: str):
    node = document
    for part in path.split("."):
        if isinstance(node, list):
            node = node[int(part)]
        elif isinstance(node, dict):
            node = node[part]
        else:
            raise KeyError(part)
    return node


def _fetch_one(source: SourceConfig, fiat: str, timeout: float) -> str:
    if source.kind == "file":
        with open(source.location.format(fiat=fiat), "r", encoding="utf-8") as fh:
            return fh.read()
    if source.kind == "http":
        url = source.location.format(fiat=fiat)
        with urllib.request.urlopen(url, timeout=timeout) as resp:
            return resp.read().decode("utf-8")
    raise ValidationError(f"unknown source kind {source.kind!r}")


def fetch_quotes(
    sources: list[SourceConfig],
    fiat: str,
    *,
    now: int,
    timeout: float = DEFAULT_TIMEOUT_SECONDS,
) -> tuple[list[RateQuote], dict[str, str]]:
    """One quote per reachable source for the given fiat.

    Returns (quotes, errors-by-source). Raises only when no source is
    configured for the pair or every configured source failed.
    """
    relevant = [s for s in sources if s.fiat == fiat]
    if not relevant:
        raise ValidationError(f"no rate sources configured for {fiat}")

    quotes: list[RateQuote] = []
    errors: dict[str, str] = {}

    def pull(source: SourceConfig):
        try:
            body = _fetch_one(source, fiat, timeout)
            value = _walk_path(json.loads(body), source.field_path)
            return RateQuote(
                source_id=source.source_id,
                fiat=fiat,
                price_cents=price_to_cents(value),
                fetched_at=now,
            )
        except (OSError, urllib.error.URLError) as exc:
            errors[source.source_id] = f"unreachable: {getattr(exc, 'reason', exc)}"
        except (KeyError, IndexError, ValueError, ValidationError) as exc:
            errors[source.source_id] = f"bad response: {exc}"
        return None

    with ThreadPoolExecutor(max_workers=max(len(relevant), 1)) as pool:
        for quote in pool.map(pull, relevant):
            if quote is not None:
                quotes.append(quote)

    if not quotes:
        raise StaleRates("all rate sources unreachable", errors=errors)
    return quotes, errors


class RateBoard:
    """Holds the latest snapshot per fiat; safe for concurrent readers.

    refresh() is called by a background thread in the server and manually
    by tests; readers always get an immutable snapshot value.
    """

    def __init__(
        self,
        sources: list[SourceConfig],
        fiats: list[str],
        *,
        clock=None,
        staleness_seconds: int = DEFAULT_STALENESS_SECONDS,
        quorum: int = DEFAULT_QUORUM,
        tolerance_bp: int = DEFAULT_TOLERANCE_BP,
        timeout: float = DEFAULT_TIMEOUT_SECONDS,
    ):
        if not sources:
            raise ValidationError("at least one rate source must be configured")
        self.sources = sources
        self.fiats = fiats
        self.clock = clock or SystemClock()
        self.staleness_seconds = staleness_seconds
        self.quorum = quorum
        self.tolerance_bp = tolerance_bp
        self.timeout = timeout
        self._snapshots: dict[str, RateSnapshot] = {}
        self._errors: dict[str, dict[str, str]] = {}
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    def refresh(self, fiat: str) -> RateSnapshot:
        now = self.clock.now()
        quotes, errors = fetch_quotes(self.sources, fiat, now=now, timeout=self.timeout)
        snapshot = aggregate(
            quotes, now, staleness_bound=self.staleness_seconds, quorum=self.quorum
        )
        violations = []
        for quote in snapshot.contributing:
            violation = verify_assertion(quote, snapshot, self.tolerance_bp)
            if violation is not None:
                violations.append(violation.describe())
        snapshot = replace(snapshot, violations=tuple(violations))
        with self._lock:
            self._snapshots[fiat] = snapshot
            self._errors[fiat] = errors
        return snapshot

    def refresh_all(self) -> None:
        for fiat in self.fiats:
            try:
                self.refresh(fiat)
            except (StaleRates, ValidationError):
                pass  # keep serving the previous snapshot until it ages out

    def current(self, fiat: str) -> RateSnapshot:
        """Latest snapshot, provided it has not aged past the bound."""
        if fiat not in self.fiats:
            raise ValidationError(f"unsupported fiat {fiat!r}")
        with self._lock:
            snapshot = self._snapshots.get(fiat)
        if snapshot is None:
            raise StaleRates(f"no snapshot yet for {fiat}")
        if self.clock.now() - snapshot.computed_at > self.staleness_seconds:
            raise StaleRates(f"snapshot for {fiat} is stale")
        return snapshot

    def source_errors(self, fiat: str) -> dict[str, str]:
        with self._lock:
            return dict(self._errors.get(fiat, {}))

    # --- background refresher (server mode) ---

    def start(self, interval_seconds: float) -> None:
        if self._thread is not None:
            return
        self._stop.clear()

        def loop():
            while not self._stop.is_set():
                self.refresh_all()
                self._stop.wait(interval_seconds)

        self._thread = threading.Thread(target=loop, name="rate-refresher", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        if self._thread is None:
            return
        self._stop.set()
        self._thread.join(timeout=5)
        self._thread = None
