from stillpos.keystore.addresses import (
    address_for_hash,
    decode_address,
    decode_wif,
    encode_address,
    encode_wif,
)
from stillpos.keystore.bip32 import (
    HARDENED,
    MAINNET,
    REGTEST,
    TESTNET,
    ExtendedKey,
    InvalidChildKey,
    Network,
    network_by_name,
)
from stillpos.keystore.store import HOT, WATCH_ONLY, KeyRecord, KeyStore
from stillpos.keystore.vault import EncryptedBlob, KdfParams, decrypt_secret, encrypt_secret

__all__ = [
    "ExtendedKey",
    "InvalidChildKey",
    "Network",
    "network_by_name",
    "MAINNET",
    "TESTNET",
    "REGTEST",
    "HARDENED",
    "KeyStore",
    "KeyRecord",
    "HOT",
    "WATCH_ONLY",
    "EncryptedBlob",
    "KdfParams",
    "encrypt_secret",
    "decrypt_secret",
    "encode_address",
    "decode_address",
    "address_for_hash",
    "encode_wif",
    "decode_wif",
]
