"""Hierarchical deterministic keys: master generation, child derivation,
extended-key serialization.

A fresh receiving address per sale is derived down a public chain, so the
server never needs key-decryption material at sale time. Hot stores derive
account 0 hardened (account/0/i for receiving); watch-only stores start
from an account-level public extended key and derive the same 0/i chain.
"""

from __future__ import annotations

import hmac
import hashlib
from dataclasses import dataclass
from functools import cached_property

from stillpos.crypto import base58, hash160, secp256k1
from stillpos.errors import ValidationError

HARDENED = 0x80000000


@dataclass(frozen=True)
class Network:
    name: str
    p2pkh_version: int
    wif_version: int
    xprv_version: bytes
    xpub_version: bytes


MAINNET = Network("mainnet", 0x00, 0x80, bytes.fromhex("0488ADE4"), bytes.fromhex("0488B21E"))
TESTNET = Network("testnet", 0x6F, 0xEF, bytes.fromhex("04358394"), bytes.fromhex("043587CF"))
# regtest shares testnet's encodings
REGTEST = Network("regtest", 0x6F, 0xEF, TESTNET.xprv_version, TESTNET.xpub_version)

NETWORKS = {n.name: n for n in (MAINNET, TESTNET, REGTEST)}


def network_by_name(name: str) -> Network:
    try:
        return NETWORKS[name]
    except KeyError:
        raise ValidationError(f"unknown network {name!r}") from None


class InvalidChildKey(Exception):
    """The HMAC output fell outside the group (probability ~2^-127).

    Callers skip to the next index, per convention.
    """


@dataclass(frozen=True)
class ExtendedKey:
    network: Network
    depth: int
    parent_fingerprint: bytes
    child_number: int
    chain_code: bytes
    key_material: bytes  # 32-byte private scalar or 33-byte compressed point
    is_private: bool

    def __post_init__(self):
        if not 0 <= self.depth <= 255:
            raise ValidationError("depth out of range")
        if len(self.parent_fingerprint) != 4 or len(self.chain_code) != 32:
            raise ValidationError("malformed extended key")
        if self.depth == 0 and (self.child_number != 0 or self.parent_fingerprint != b"\x00" * 4):
            raise ValidationError("a depth-0 key must have zero child number and fingerprint")
        if self.is_private:
            if len(self.key_material) != 32:
                raise ValidationError("private key material must be 32 bytes")
            scalar = int.from_bytes(self.key_material, "big")
            if not 1 <= scalar < secp256k1.N:
                raise ValidationError("private scalar out of group range")
        else:
            if len(self.key_material) != 33:
                raise ValidationError("public key material must be 33 bytes")
            secp256k1.decompress(self.key_material)  # raises on invalid point

    # --- construction ---

    @classmethod
    def from_seed(cls, entropy: bytes, network: Network) -> "ExtendedKey":
        """Master key from caller-supplied entropy (16-64 bytes)."""
        if not 16 <= len(entropy) <= 64:
            raise ValidationError("entropy must be 16-64 bytes")
        digest = hmac.new(b"Bitcoin seed", entropy, hashlib.sha512).digest()
        scalar = int.from_bytes(digest[:32], "big")
        if scalar == 0 or scalar >= secp256k1.N:
            raise ValidationError("entropy yields an invalid master key; use different entropy")
        return cls(
            network=network,
            depth=0,
            parent_fingerprint=b"\x00" * 4,
            child_number=0,
            chain_code=digest[32:],
            key_material=digest[:32],
            is_private=True,
        )

    # --- views ---

    @cached_property
    def public_key(self) -> bytes:
        if self.is_private:
            return secp256k1.pubkey_for(int.from_bytes(self.key_material, "big"))
        return self.key_material

    @cached_property
    def point(self) -> secp256k1.Point:
        return secp256k1.decompress(self.public_key)

    @property
    def private_scalar(self) -> int:
        if not self.is_private:
            raise ValidationError("no private material")
        return int.from_bytes(self.key_material, "big")

    @cached_property
    def fingerprint(self) -> bytes:
        return hash160(self.public_key)[:4]

    def neuter(self) -> "ExtendedKey":
        if not self.is_private:
            return self
        return ExtendedKey(
            network=self.network,
            depth=self.depth,
            parent_fingerprint=self.parent_fingerprint,
            child_number=self.child_number,
            chain_code=self.chain_code,
            key_material=self.public_key,
            is_private=False,
        )

    # --- derivation ---

    def derive_child(self, index: int, hardened: bool = False) -> "ExtendedKey":
        if not 0 <= index < HARDENED:
            raise ValidationError("child index must be below 2^31")
        if hardened and not self.is_private:
            raise ValidationError("hardened derivation needs the private key")
        full_index = index | HARDENED if hardened else index

        if hardened:
            data = b"\x00" + self.key_material + full_index.to_bytes(4, "big")
        else:
            data = self.public_key + full_index.to_bytes(4, "big")
        digest = hmac.new(self.chain_code, data, hashlib.sha512).digest()
        tweak = int.from_bytes(digest[:32], "big")
        if tweak >= secp256k1.N:
            raise InvalidChildKey(full_index)

        if self.is_private:
            child_scalar = (tweak + self.private_scalar) % secp256k1.N
            if child_scalar == 0:
                raise InvalidChildKey(full_index)
            key_material = child_scalar.to_bytes(32, "big")
            is_private = True
        else:
            child_point = secp256k1.point_add(secp256k1.mul_g(tweak), self.point)
            if child_point is None:
                raise InvalidChildKey(full_index)
            key_material = secp256k1.compress(child_point)
            is_private = False

        return ExtendedKey(
            network=self.network,
            depth=self.depth + 1,
            parent_fingerprint=self.fingerprint,
            child_number=full_index,
            chain_code=digest[32:],
            key_material=key_material,
            is_private=is_private,
        )

    def derive_path(self, *steps: tuple[int, bool]) -> "ExtendedKey":
        node = self
        for index, hardened in steps:
            node = node.derive_child(index, hardened)
        return node

    # --- serialization ---

    def serialize(self) -> str:
        version = self.network.xprv_version if self.is_private else self.network.xpub_version
        key_field = (b"\x00" + self.key_material) if self.is_private else self.key_material
        payload = (
            version
            + bytes([self.depth])
            + self.parent_fingerprint
            + self.child_number.to_bytes(4, "big")
            + self.chain_code
            + key_field
        )
        return base58.b58check_encode(payload)

    @classmethod
    def parse(cls, text: str, network: Network | None = None) -> "ExtendedKey":
        try:
            payload = base58.b58check_decode(text)
        except base58.Base58Error as exc:
            raise ValidationError(f"bad extended key: {exc}") from None
        if len(payload) != 78:
            raise ValidationError("extended key payload must be 78 bytes")
        version, rest = payload[:4], payload[4:]
        is_private = None
        matched = None
        candidates = [network] if network else [MAINNET, TESTNET]
        for net in candidates:
            if version == net.xprv_version:
                matched, is_private = net, True
            elif version == net.xpub_version:
                matched, is_private = net, False
        if matched is None:
            raise ValidationError("unknown extended-key version bytes")
        key_field = rest[41:74]
        if is_private:
            if key_field[0] != 0:
                raise ValidationError("private extended key must pad with 0x00")
            key_material = key_field[1:]
        else:
            key_material = key_field
        return cls(
            network=matched,
            depth=rest[0],
            parent_fingerprint=rest[1:5],
            child_number=int.from_bytes(rest[5:9], "big"),
            chain_code=rest[9:41],
            key_material=key_material,
            is_private=is_private,
        )
