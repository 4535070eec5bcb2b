"""Legacy bitcoin transaction codec: serialization, txids, P2PKH scripts,
and the sighash-ALL digest used for signing and verification.

Only what a P2PKH sweep needs — no segwit, no script interpreter.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from stillpos.crypto import hash160, sha256d
from stillpos.keystore.addresses import decode_address
from stillpos.keystore.bip32 import Network

SIGHASH_ALL = 0x01

_OP_DUP = 0x76
_OP_HASH160 = 0xA9
_OP_EQUALVERIFY = 0x88
_OP_CHECKSIG = 0xAC

COINBASE_TXID = "00" * 32
COINBASE_VOUT = 0xFFFFFFFF


class TxFormatError(ValueError):
    pass


def write_varint(n: int) -> bytes:
    if n < 0xFD:
        return bytes([n])
    if n <= 0xFFFF:
        return b"\xfd" + struct.pack("<H", n)
    if n <= 0xFFFFFFFF:
        return b"\xfe" + struct.pack("<I", n)
    return b"\xff" + struct.pack("<Q", n)


def read_varint(data: bytes, offset: int) -> tuple[int, int]:
    first = data[offset]
    if first < 0xFD:
        return first, offset + 1
    if first == 0xFD:
        return struct.unpack_from("<H", data, offset + 1)[0], offset + 3
    if first == 0xFE:
        return struct.unpack_from("<I", data, offset + 1)[0], offset + 5
    return struct.unpack_from("<Q", data, offset + 1)[0], offset + 9


@dataclass(frozen=True)
class TxIn:
    prev_txid: str  # display order (big-endian hex)
    vout: int
    script_sig: bytes = b""
    sequence: int = 0xFFFFFFFF

    @property
    def outpoint(self) -> tuple[str, int]:
        return (self.prev_txid, self.vout)

    @property
    def is_coinbase(self) -> bool:
        return self.prev_txid == COINBASE_TXID and self.vout == COINBASE_VOUT


@dataclass(frozen=True)
class TxOut:
    value_sats: int
    script_pubkey: bytes


@dataclass(frozen=True)
class Transaction:
    inputs: tuple[TxIn, ...]
    outputs: tuple[TxOut, ...]
    version: int = 1
    locktime: int = 0
    _txid: str = field(default="", compare=False, repr=False)

    def serialize(self) -> bytes:
        parts = [struct.pack("<i", self.version), write_varint(len(self.inputs))]
        for txin in self.inputs:
            parts.append(bytes.fromhex(txin.prev_txid)[::-1])
            parts.append(struct.pack("<I", txin.vout))
            parts.append(write_varint(len(txin.script_sig)))
            parts.append(txin.script_sig)
            parts.append(struct.pack("<I", txin.sequence))
        parts.append(write_varint(len(self.outputs)))
        for txout in self.outputs:
            parts.append(struct.pack("<q", txout.value_sats))
            parts.append(write_varint(len(txout.script_pubkey)))
            parts.append(txout.script_pubkey)
        parts.append(struct.pack("<I", self.locktime))
        return b"".join(parts)

    def txid(self) -> str:
        if self._txid:
            return self._txid
        computed = sha256d(self.serialize())[::-1].hex()
        object.__setattr__(self, "_txid", computed)
        return computed

    @property
    def is_coinbase(self) -> bool:
        return len(self.inputs) == 1 and self.inputs[0].is_coinbase

    def total_out(self) -> int:
        return sum(o.value_sats for o in self.outputs)

    def sighash_all(self, input_index: int, prev_script_pubkey: bytes) -> bytes:
        """Digest signed for input_index under SIGHASH_ALL.

        Legacy scheme: every other input's scriptSig is blanked and the
        spent output's scriptPubKey substituted into the signed copy.
        """
        if not 0 <= input_index < len(self.inputs):
            raise TxFormatError("input index out of range")
        substituted = Transaction(
            inputs=tuple(
                TxIn(
                    prev_txid=txin.prev_txid,
                    vout=txin.vout,
                    script_sig=prev_script_pubkey if i == input_index else b"",
                    sequence=txin.sequence,
                )
                for i, txin in enumerate(self.inputs)
            ),
            outputs=self.outputs,
            version=self.version,
            locktime=self.locktime,
        )
        return sha256d(substituted.serialize() + struct.pack("<I", SIGHASH_ALL))

    def with_script_sig(self, input_index: int, script_sig: bytes) -> "Transaction":
        return Transaction(
            inputs=tuple(
                TxIn(t.prev_txid, t.vout, script_sig, t.sequence) if i == input_index else t
                for i, t in enumerate(self.inputs)
            ),
            outputs=self.outputs,
            version=self.version,
            locktime=self.locktime,
        )

    @classmethod
    def parse(cls, data: bytes) -> "Transaction":
        try:
            tx, offset = cls._parse_at(data, 0)
        except (struct.error, IndexError):
            raise TxFormatError("truncated transaction") from None
        if offset != len(data):
            raise TxFormatError("trailing bytes after transaction")
        return tx

    @classmethod
    def _parse_at(cls, data: bytes, offset: int) -> tuple["Transaction", int]:
        version = struct.unpack_from("<i", data, offset)[0]
        offset += 4
        n_in, offset = read_varint(data, offset)
        inputs = []
        for _ in range(n_in):
            prev = data[offset : offset + 32][::-1].hex()
            offset += 32
            vout = struct.unpack_from("<I", data, offset)[0]
            offset += 4
            script_len, offset = read_varint(data, offset)
            script = data[offset : offset + script_len]
            if len(script) != script_len:
                raise TxFormatError("truncated scriptSig")
            offset += script_len
            sequence = struct.unpack_from("<I", data, offset)[0]
            offset += 4
            inputs.append(TxIn(prev, vout, script, sequence))
        n_out, offset = read_varint(data, offset)
        outputs = []
        for _ in range(n_out):
            value = struct.unpack_from("<q", data, offset)[0]
            offset += 8
            script_len, offset = read_varint(data, offset)
            script = data[offset : offset + script_len]
            if len(script) != script_len:
                raise TxFormatError("truncated scriptPubKey")
            offset += script_len
            outputs.append(TxOut(value, script))
        locktime = struct.unpack_from("<I", data, offset)[0]
        offset += 4
        return cls(tuple(inputs), tuple(outputs), version, locktime), offset


# --- P2PKH scripts ---


def p2pkh_script(pubkey_hash: bytes) -> bytes:
    if len(pubkey_hash) != 20:
        raise TxFormatError("pubkey hash must be 20 bytes")
    return bytes([_OP_DUP, _OP_HASH160, 20]) + pubkey_hash + bytes([_OP_EQUALVERIFY, _OP_CHECKSIG])


def parse_p2pkh(script: bytes) -> bytes | None:
    """The 20-byte pubkey hash if the script is canonical P2PKH, else None."""
    if (
        len(script) == 25
        and script[0] == _OP_DUP
        and script[1] == _OP_HASH160
        and script[2] == 20
        and script[23] == _OP_EQUALVERIFY
        and script[24] == _OP_CHECKSIG
    ):
        return script[3:23]
    return None


def script_for_address(address: str) -> bytes:
    _, pubkey_hash = decode_address(address)
    return p2pkh_script(pubkey_hash)


def address_for_script(script: bytes, network: Network) -> str | None:
    from stillpos.keystore.addresses import address_for_hash

    pubkey_hash = parse_p2pkh(script)
    if pubkey_hash is None:
        return None
    return address_for_hash(pubkey_hash, network)


def p2pkh_script_sig(signature_with_hashtype: bytes, pubkey: bytes) -> bytes:
    if not 1 <= len(signature_with_hashtype) <= 75 or len(pubkey) != 33:
        raise TxFormatError("unexpected signature or pubkey length")
    return (
        bytes([len(signature_with_hashtype)])
        + signature_with_hashtype
        + bytes([len(pubkey)])
        + pubkey
    )


def parse_p2pkh_script_sig(script: bytes) -> tuple[bytes, bytes] | None:
    """(signature incl. hashtype byte, compressed pubkey) or None."""
    if not script:
        return None
    sig_len = script[0]
    if len(script) < 1 + sig_len + 1:
        return None
    signature = script[1 : 1 + sig_len]
    pub_len = script[1 + sig_len]
    pubkey = script[2 + sig_len :]
    if len(pubkey) != pub_len or pub_len != 33:
        return None
    return signature, pubkey


def pubkey_matches_script(pubkey: bytes, script_pubkey: bytes) -> bool:
    pubkey_hash = parse_p2pkh(script_pubkey)
    return pubkey_hash is not None and hash160(pubkey) == pubkey_hash
