"""Exchange-rate aggregation and fiat→satoshi conversion.

Money is integer fiat-cents and integer satoshis throughout; no floats
touch an amount. The aggregate is the median of the contributing quotes
(lower middle for even counts): a single corrupted source cannot move it
beyond the spread of the honest ones, and the rule is auditable by hand.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from stillpos.errors import SaleTooSmall, StaleRates, ValidationError

SATS_PER_BTC = 100_000_000
DUST_LIMIT_SATS = 546

DEFAULT_STALENESS_SECONDS = 120
DEFAULT_QUORUM = 2
DEFAULT_TOLERANCE_BP = 100


@dataclass(frozen=True)
class RateQuote:
    source_id: str
    fiat: str  # ISO-4217, e.g. "CAD"
    price_cents: int  # fiat cents per BTC
    fetched_at: int

    def __post_init__(self):
        if self.price_cents <= 0:
            raise ValidationError("quote price must be positive")


@dataclass(frozen=True)
class RateSnapshot:
    fiat: str
    aggregate_cents: int
    method: str
    contributing: tuple[RateQuote, ...]
    computed_at: int
    violations: tuple[str, ...] = field(default=())

    @property
    def pair(self) -> str:
        return f"BTC-{self.fiat}"


def aggregate(
    quotes: list[RateQuote],
    now: int,
    *,
    staleness_bound: int = DEFAULT_STALENESS_SECONDS,
    quorum: int = DEFAULT_QUORUM,
) -> RateSnapshot:
    """Median of quotes fresher than the staleness bound.

    Raises StaleRates when fewer than ``quorum`` quotes survive the filter;
    sales must not proceed on a stale or thin rate.
    """
    fresh = [q for q in quotes if now - q.fetched_at <= staleness_bound]
    if len(fresh) < quorum:
        raise StaleRates(
            f"only {len(fresh)} fresh quotes, quorum is {quorum}",
            fresh=len(fresh),
            quorum=quorum,
        )
    fiats = {q.fiat for q in fresh}
    if len(fiats) != 1:
        raise ValidationError(f"quotes span multiple fiat currencies: {sorted(fiats)}")
    prices = sorted(q.price_cents for q in fresh)
    median = prices[(len(prices) - 1) // 2]  # lower middle for even counts
    return RateSnapshot(
        fiat=fresh[0].fiat,
        aggregate_cents=median,
        method="median",
        contributing=tuple(sorted(fresh, key=lambda q: q.source_id)),
        computed_at=now,
    )


@dataclass(frozen=True)
class AssertionViolation:
    source_id: str
    price_cents: int
    aggregate_cents: int
    deviation_bp: int  # rounded up, for display only

    def describe(self) -> str:
        return (
            f"{self.source_id}: {self.price_cents} deviates ~{self.deviation_bp}bp "
            f"from aggregate {self.aggregate_cents}"
        )


def verify_assertion(
    candidate: RateQuote,
    snapshot: RateSnapshot,
    tolerance_bp: int = DEFAULT_TOLERANCE_BP,
) -> AssertionViolation | None:
    """Check a single source's claim against the aggregate.

    A third-party rate is an assertion, not a fact: the quote passes iff
    |candidate − aggregate| ≤ tolerance_bp × aggregate / 10000 (inclusive,
    exact integer comparison). Returns None when it holds.
    """
    if candidate.fiat != snapshot.fiat:
        raise ValidationError(
            f"pair mismatch: quote is {candidate.fiat}, snapshot is {snapshot.fiat}"
        )
    deviation = abs(candidate.price_cents - snapshot.aggregate_cents)
    if deviation * 10_000 <= tolerance_bp * snapshot.aggregate_cents:
        return None
    # ceil division: only used in the human-readable report
    deviation_bp = -(-deviation * 10_000 // snapshot.aggregate_cents)
    return AssertionViolation(
        source_id=candidate.source_id,
        price_cents=candidate.price_cents,
        aggregate_cents=snapshot.aggregate_cents,
        deviation_bp=int(deviation_bp),
    )


def convert(fiat_cents: int, rate_cents_per_btc: int) -> int:
    """fiat cents → satoshis at the given rate, rounded half away from zero.

    Exact integer arithmetic: sats = round(fiat_cents * 1e8 / rate).
    Raises SaleTooSmall below the dust limit.
    """
    if fiat_cents <= 0:
        raise ValidationError("amount must be positive")
    if rate_cents_per_btc <= 0:
        raise ValidationError("rate must be positive")
    numerator = fiat_cents * SATS_PER_BTC
    sats = (2 * numerator + rate_cents_per_btc) // (2 * rate_cents_per_btc)
    if sats < DUST_LIMIT_SATS:
        raise SaleTooSmall(
            f"{fiat_cents} cents converts to {sats} sats, below dust ({DUST_LIMIT_SATS})",
            sats=int(sats),
        )
    return int(sats)
