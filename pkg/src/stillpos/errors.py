"""Exception hierarchy shared across the service.

Every error carries a stable machine-readable ``code`` so the API and CLI
can surface it without leaking internals.
"""


class StillPosError(Exception):
    """Base class; ``code`` is stable across releases."""

    code = "internal"

    def __init__(self, message: str = "", **details):
        super().__init__(message or self.__doc__ or self.code)
        self.details = details


class ValidationError(StillPosError):
    code = "validation"


class StaleRates(StillPosError):
    """No fresh exchange-rate snapshot; sales must not proceed."""

    code = "stale_rates"


class SaleTooSmall(StillPosError):
    """Converted amount is below the dust limit."""

    code = "sale_too_small"


class UnknownSale(StillPosError):
    code = "unknown_sale"


class IllegalTransition(StillPosError):
    code = "illegal_transition"


class StoreError(StillPosError):
    code = "store"


class StoreLocked(StoreError):
    code = "store_locked"


class WatchOnlyError(StillPosError):
    """Operation needs private key material but the store is watch-only."""

    code = "watch_only"


class BadPassphrase(StillPosError):
    code = "bad_passphrase"


class AuthError(StillPosError):
    code = "unauthorized"


class ForbiddenError(StillPosError):
    code = "forbidden"


class ChainError(StillPosError):
    code = "chain"


class TxRejected(ChainError):
    code = "tx_rejected"


class NothingToSweep(StillPosError):
    code = "nothing_to_sweep"


class ConfigError(StillPosError):
    code = "config"
