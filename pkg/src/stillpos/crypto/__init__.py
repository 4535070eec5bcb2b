from stillpos.crypto.hashes import hash160, ripemd160, sha256, sha256d
from stillpos.crypto.base58 import b58check_decode, b58check_encode

__all__ = [
    "sha256",
    "sha256d",
    "ripemd160",
    "hash160",
    "b58check_encode",
    "b58check_decode",
]
