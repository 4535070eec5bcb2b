"""Legacy P2PKH addresses and WIF private-key encoding."""

from __future__ import annotations

from stillpos.crypto import base58, hash160, secp256k1
from stillpos.errors import ValidationError
from stillpos.keystore.bip32 import Network

COMPRESSED_FLAG = b"\x01"


def encode_address(public_key: bytes, network: Network) -> str:
    """Base58Check(version | RIPEMD160(SHA256(pubkey)))."""
    try:
        secp256k1.decompress(public_key)
    except secp256k1.InvalidPoint as exc:
        raise ValidationError(f"invalid public key: {exc}") from None
    return base58.b58check_encode(bytes([network.p2pkh_version]) + hash160(public_key))


def address_for_hash(pubkey_hash: bytes, network: Network) -> str:
    if len(pubkey_hash) != 20:
        raise ValidationError("pubkey hash must be 20 bytes")
    return base58.b58check_encode(bytes([network.p2pkh_version]) + pubkey_hash)


def decode_address(address: str) -> tuple[int, bytes]:
    """Returns (version byte, 20-byte pubkey hash)."""
    try:
        payload = base58.b58check_decode(address)
    except base58.Base58Error as exc:
        raise ValidationError(f"bad address: {exc}") from None
    if len(payload) != 21:
        raise ValidationError("address payload must be 21 bytes")
    return payload[0], payload[1:]


def encode_wif(private_key: bytes, network: Network) -> str:
    if len(private_key) != 32:
        raise ValidationError("private key must be 32 bytes")
    return base58.b58check_encode(bytes([network.wif_version]) + private_key + COMPRESSED_FLAG)


def decode_wif(text: str) -> tuple[bytes, int, bool]:
    """Returns (32-byte key, version byte, compressed flag)."""
    try:
        payload = base58.b58check_decode(text)
    except base58.Base58Error as exc:
        raise ValidationError(f"bad WIF: {exc}") from None
    if len(payload) == 34 and payload[-1:] == COMPRESSED_FLAG:
        return payload[1:33], payload[0], True
    if len(payload) == 33:
        return payload[1:], payload[0], False
    raise ValidationError("WIF payload has unexpected length")
