"""BIP21 payment URIs — the QR payload shown to the customer."""

from __future__ import annotations

from urllib.parse import quote

from stillpos.errors import ValidationError
from stillpos.keystore.addresses import decode_address
from stillpos.rates.model import DUST_LIMIT_SATS, SATS_PER_BTC


def format_btc_amount(sats: int) -> str:
    """Satoshis as a BTC decimal, at most 8 places, no trailing zeros.

    Integer arithmetic only; 1_500_000 -> "0.015", 100_000_000 -> "1".
    """
    if sats < 0:
        raise ValidationError("amount cannot be negative")
    whole, frac = divmod(sats, SATS_PER_BTC)
    if frac == 0:
        return str(whole)
    return f"{whole}.{frac:08d}".rstrip("0")


def build_payment_uri(address: str, btc_sats: int, label: str = "") -> str:
    decode_address(address)  # raises on anything malformed
    if btc_sats < DUST_LIMIT_SATS:
        raise ValidationError(f"amount below dust limit ({DUST_LIMIT_SATS} sats)")
    uri = f"bitcoin:{address}?amount={format_btc_amount(btc_sats)}"
    if label:
        uri += f"&label={quote(label, safe='')}"
    return uri
