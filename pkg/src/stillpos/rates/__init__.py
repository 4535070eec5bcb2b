from stillpos.rates.model import (
    DEFAULT_QUORUM,
    DEFAULT_STALENESS_SECONDS,
    DEFAULT_TOLERANCE_BP,
    DUST_LIMIT_SATS,
    SATS_PER_BTC,
    AssertionViolation,
    RateQuote,
    RateSnapshot,
    aggregate,
    convert,
    verify_assertion,
)
from stillpos.rates.sources import RateBoard, SourceConfig, fetch_quotes, price_to_cents

__all__ = [
    "RateQuote",
    "RateSnapshot",
    "AssertionViolation",
    "aggregate",
    "verify_assertion",
    "convert",
    "fetch_quotes",
    "price_to_cents",
    "RateBoard",
    "SourceConfig",
    "SATS_PER_BTC",
    "DUST_LIMIT_SATS",
    "DEFAULT_STALENESS_SECONDS",
    "DEFAULT_QUORUM",
    "DEFAULT_TOLERANCE_BP",
]
