"""On-disk key store: one fresh P2PKH address per sale.

File layout (line-oriented, utf-8):

    STILL1
    {"version": 1, "mode": "hot", "network": "regtest",
     "account_xpub": "...", "account_xprv_blob": {...} | null,
     "created_at": 1700000000}
    {"t": "key", "i": 0, "addr": "...", "pub": "<hex>"}
    {"t": "skip", "i": 17, "reason": "invalid_child"}
    ...

Records are append-only; a trailing partial line (crash mid-append) is
dropped on load, so an index is only considered spent once its record is
fully on disk — next_address persists before it returns.

Hot stores keep the account private extended key encrypted; addresses
derive from the cached account public key, so no passphrase is needed per
sale. Watch-only stores hold public material only and can never sign.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass

from stillpos.errors import StoreError, ValidationError, WatchOnlyError
from stillpos.keystore import vault
from stillpos.keystore.addresses import encode_address, encode_wif
from stillpos.keystore.bip32 import ExtendedKey, InvalidChildKey, Network, network_by_name

MAGIC = "STILL1"
HOT = "hot"
WATCH_ONLY = "watch_only"
_MAX_CHILD_RETRIES = 64


@dataclass(frozen=True)
class KeyRecord:
    derivation_index: int
    address: str
    public_key: bytes
    # hot stores encrypt the account key once instead of per-record copies
    encrypted_private_key: vault.EncryptedBlob | None = None


class KeyStore:
    """Single-writer address allocator over a BIP32 account chain."""

    def __init__(self, path: str, header: dict, records: dict[int, KeyRecord], skips: set[int]):
        self._path = path
        self._header = header
        self._records = records
        self._skips = skips
        self._lock = threading.Lock()
        self.network: Network = network_by_name(header["network"])
        self.mode: str = header["mode"]
        self._account_pub = ExtendedKey.parse(header["account_xpub"], self.network)
        # external receiving chain: account/0; cached so each sale is one CKD
        self._chain_node = self._account_pub.derive_child(0)
        self._fh = open(self._path, "a", encoding="utf-8")

    # --- creation / opening ---

    @classmethod
    def create_hot(
        cls,
        path: str,
        network: Network,
        entropy: bytes,
        passphrase: str,
        *,
        kdf_cost: tuple[int, int, int] = vault.DEFAULT_COST,
        created_at: int = 0,
    ) -> "KeyStore":
        if os.path.exists(path):
            raise StoreError(f"refusing to overwrite existing store at {path}")
        master = ExtendedKey.from_seed(entropy, network)
        account = master.derive_child(0, hardened=True)  # account 0
        blob = vault.encrypt_secret(account.serialize().encode(), passphrase, cost=kdf_cost)
        header = {
            "version": 1,
            "mode": HOT,
            "network": network.name,
            "account_xpub": account.neuter().serialize(),
            "account_xprv_blob": blob.to_json(),
            "created_at": created_at,
        }
        cls._write_new(path, header)
        return cls.open(path)

    @classmethod
    def create_watch_only(
        cls, path: str, network: Network, account_xpub: str, *, created_at: int = 0
    ) -> "KeyStore":
        if os.path.exists(path):
            raise StoreError(f"refusing to overwrite existing store at {path}")
        parsed = ExtendedKey.parse(account_xpub, network)
        if parsed.is_private:
            raise ValidationError("watch-only store takes a public extended key")
        header = {
            "version": 1,
            "mode": WATCH_ONLY,
            "network": network.name,
            "account_xpub": parsed.serialize(),
            "account_xprv_blob": None,
            "created_at": created_at,
        }
        cls._write_new(path, header)
        return cls.open(path)

    @staticmethod
    def _write_new(path: str, header: dict) -> None:
        tmp = path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(MAGIC + "\n")
            fh.write(json.dumps(header, separators=(",", ":")) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)

    @classmethod
    def open(cls, path: str) -> "KeyStore":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = fh.read()
        except OSError as exc:
            raise StoreError(f"cannot read key store: {exc.strerror}") from None
        lines = raw.split("\n")
        if not lines or lines[0] != MAGIC:
            raise StoreError("not a stillpos key store (bad magic)")
        if len(lines) < 2 or not lines[1]:
            raise StoreError("missing store header")
        try:
            header = json.loads(lines[1])
        except json.JSONDecodeError:
            raise StoreError("corrupt store header") from None
        if header.get("version") != 1:
            raise StoreError(f"unsupported store version {header.get('version')!r}")

        records: dict[int, KeyRecord] = {}
        skips: set[int] = set()
        # the final element is "" for a complete file; anything else is a
        # partial append from a crash and is dropped
        for line in lines[2:-1]:
            rec = json.loads(line)
            if rec["t"] == "key":
                records[rec["i"]] = KeyRecord(
                    derivation_index=rec["i"],
                    address=rec["addr"],
                    public_key=bytes.fromhex(rec["pub"]),
                )
            elif rec["t"] == "skip":
                skips.add(rec["i"])
        return cls(path, header, records, skips)

    # --- properties ---

    @property
    def account_xpub(self) -> str:
        return self._header["account_xpub"]

    @property
    def is_watch_only(self) -> bool:
        return self.mode == WATCH_ONLY

    def records(self) -> list[KeyRecord]:
        return [self._records[i] for i in sorted(self._records)]

    def record(self, index: int) -> KeyRecord:
        try:
            return self._records[index]
        except KeyError:
            raise StoreError(f"no key at index {index}") from None

    def record_for_address(self, address: str) -> KeyRecord | None:
        for rec in self._records.values():
            if rec.address == address:
                return rec
        return None

    # --- address allocation ---

    def next_address(self) -> tuple[str, int]:
        """Allocate the lowest never-used index on the receiving chain.

        The record hits disk before the address is returned, so a crash can
        burn an index but never hand the same one out twice.
        """
        with self._lock:
            index = self._next_free_index()
            for _ in range(_MAX_CHILD_RETRIES):
                try:
                    child = self._chain_node.derive_child(index)
                except InvalidChildKey:
                    self._append({"t": "skip", "i": index, "reason": "invalid_child"})
                    self._skips.add(index)
                    index += 1
                    continue
                address = encode_address(child.public_key, self.network)
                self._append(
                    {"t": "key", "i": index, "addr": address, "pub": child.public_key.hex()}
                )
                self._records[index] = KeyRecord(index, address, child.public_key)
                return address, index
            raise StoreError("derivation kept producing invalid children")

    def _next_free_index(self) -> int:
        used = self._records.keys() | self._skips
        return max(used) + 1 if used else 0

    def _append(self, record: dict) -> None:
        self._fh.write(json.dumps(record, separators=(",", ":")) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    # --- private material (hot mode only) ---

    def _account_private(self, passphrase: str) -> ExtendedKey:
        if self.is_watch_only:
            raise WatchOnlyError("no private material in a watch-only store")
        blob = vault.EncryptedBlob.from_json(self._header["account_xprv_blob"])
        serialized = vault.decrypt_secret(blob, passphrase).decode()
        return ExtendedKey.parse(serialized, self.network)

    def private_key(self, index: int, passphrase: str) -> int:
        """Private scalar for a previously allocated index."""
        return self.private_keys([index], passphrase)[index]

    def private_keys(self, indices: list[int], passphrase: str) -> dict[int, int]:
        """Scalars for many indices with a single passphrase unwrap."""
        for index in indices:
            self.record(index)  # raises if unknown
        chain = self._account_private(passphrase).derive_child(0)
        return {index: chain.derive_child(index).private_scalar for index in set(indices)}

    def export_wif(self, index: int, passphrase: str) -> str:
        scalar = self.private_key(index, passphrase)
        return encode_wif(scalar.to_bytes(32, "big"), self.network)

    def verify_passphrase(self, passphrase: str) -> None:
        """Raises BadPassphrase/WatchOnlyError without exposing material."""
        self._account_private(passphrase)
