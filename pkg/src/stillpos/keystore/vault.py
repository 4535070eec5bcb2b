"""Authenticated encryption for key material at rest.

scrypt (memory-hard, parameters stored next to the ciphertext) derives the
AES-256-GCM key from the passphrase. Wrong passphrases fail the GCM tag
check; garbage plaintext is never returned.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.scrypt import Scrypt

from stillpos.errors import BadPassphrase, ValidationError

# (n, r, p) — n is the CPU/memory cost; tests pass a lighter cost explicitly
DEFAULT_COST = (2**14, 8, 1)
_SALT_LEN = 16
_NONCE_LEN = 12
_TAG_LEN = 16


@dataclass(frozen=True)
class KdfParams:
    salt: bytes
    n: int
    r: int
    p: int

    def to_json(self) -> dict:
        return {"salt": self.salt.hex(), "n": self.n, "r": self.r, "p": self.p}

    @classmethod
    def from_json(cls, data: dict) -> "KdfParams":
        return cls(salt=bytes.fromhex(data["salt"]), n=data["n"], r=data["r"], p=data["p"])


@dataclass(frozen=True)
class EncryptedBlob:
    kdf_params: KdfParams
    nonce: bytes
    ciphertext: bytes
    auth_tag: bytes

    def to_json(self) -> dict:
        return {
            "kdf": self.kdf_params.to_json(),
            "nonce": self.nonce.hex(),
            "ciphertext": self.ciphertext.hex(),
            "auth_tag": self.auth_tag.hex(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "EncryptedBlob":
        return cls(
            kdf_params=KdfParams.from_json(data["kdf"]),
            nonce=bytes.fromhex(data["nonce"]),
            ciphertext=bytes.fromhex(data["ciphertext"]),
            auth_tag=bytes.fromhex(data["auth_tag"]),
        )


def _derive_key(passphrase: str, params: KdfParams) -> bytes:
    kdf = Scrypt(salt=params.salt, length=32, n=params.n, r=params.r, p=params.p)
    return kdf.derive(passphrase.encode("utf-8"))


def encrypt_secret(
    plaintext: bytes,
    passphrase: str,
    *,
    cost: tuple[int, int, int] = DEFAULT_COST,
) -> EncryptedBlob:
    if not passphrase:
        raise ValidationError("passphrase must not be empty")
    n, r, p = cost
    params = KdfParams(salt=os.urandom(_SALT_LEN), n=n, r=r, p=p)
    nonce = os.urandom(_NONCE_LEN)
    sealed = AESGCM(_derive_key(passphrase, params)).encrypt(nonce, plaintext, None)
    return EncryptedBlob(
        kdf_params=params,
        nonce=nonce,
        ciphertext=sealed[:-_TAG_LEN],
        auth_tag=sealed[-_TAG_LEN:],
    )


def decrypt_secret(blob: EncryptedBlob, passphrase: str) -> bytes:
    if not passphrase:
        raise ValidationError("passphrase must not be empty")
    key = _derive_key(passphrase, blob.kdf_params)
    try:
        return AESGCM(key).decrypt(blob.nonce, blob.ciphertext + blob.auth_tag, None)
    except InvalidTag:
        raise BadPassphrase("authentication failed") from None
