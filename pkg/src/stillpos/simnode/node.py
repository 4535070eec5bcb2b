"""Deterministic in-process bitcoin network: mempool, blocks, UTXO set,
conflicts and reorgs, with events pushed to subscribers.

No real clocks, no randomness: txids come from canonical serialization and
block hashes from the chain structure, so every scenario replays
bit-identically. Signature checking is full DER/low-S ECDSA over the
legacy sighash (verified through OpenSSL, a backend unrelated to the
signing code); a permissive mode skips it for flow tests where scenario
payers don't bother signing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import hashes as _c_hashes
from cryptography.hazmat.primitives.asymmetric import ec as _c_ec
from cryptography.hazmat.primitives.asymmetric.utils import Prehashed

from stillpos.crypto import secp256k1, sha256d
from stillpos.errors import ChainError
from stillpos.keystore.bip32 import REGTEST, Network
from stillpos.payments.model import (
    BlockMined,
    BroadcastResult,
    Conflict,
    Reorg,
    TxSeen,
    UtxoRef,
)
from stillpos.tx import (
    COINBASE_TXID,
    COINBASE_VOUT,
    SIGHASH_ALL,
    Transaction,
    TxIn,
    TxOut,
    address_for_script,
    parse_p2pkh_script_sig,
    pubkey_matches_script,
    script_for_address,
)

Outpoint = tuple[str, int]


@dataclass(frozen=True)
class UtxoEntry:
    value_sats: int
    script_pubkey: bytes


@dataclass
class Block:
    height: int
    parent_hash: str
    block_hash: str
    txs: tuple[Transaction, ...]
    fees: int
    minted: int
    # entries this block consumed, for detaching on reorg
    undo: list[tuple[Outpoint, UtxoEntry]] = field(default_factory=list)


class SimNode:
    """Single-threaded simulated chain implementing ChainSource."""

    def __init__(self, network: Network = REGTEST, *, verify_signatures: bool = False):
        self.network = network
        self.verify_signatures = verify_signatures
        self.blocks: list[Block] = []
        self.mempool: dict[str, Transaction] = {}
        self.utxo_set: dict[Outpoint, UtxoEntry] = {}
        self._spent_by_mempool: dict[Outpoint, str] = {}
        self._inclusion: dict[str, int] = {}
        self._known_conflicts: dict[str, Transaction] = {}
        self._subscribers: list = []
        self._coinbase_counter = 0
        self._clock_now = 0

    # --- event plumbing ---

    def subscribe(self, callback) -> None:
        self._subscribers.append(callback)

    def watch(self, address: str) -> None:
        """No-op: the simulated node delivers every event to every
        subscriber; consumers filter by address."""

    def set_time(self, now: int) -> None:
        """Logical timestamp stamped onto emitted events."""
        self._clock_now = now

    def _emit(self, event) -> None:
        for callback in self._subscribers:
            callback(event)

    # --- funding ---

    def faucet(self, address: str, value_sats: int) -> str:
        """Mint value to an address in a fresh block (fixed test subsidy)."""
        if value_sats <= 0:
            raise ChainError("faucet value must be positive")
        self._coinbase_counter += 1
        coinbase = Transaction(
            inputs=(
                TxIn(
                    prev_txid=COINBASE_TXID,
                    vout=COINBASE_VOUT,
                    script_sig=self._coinbase_counter.to_bytes(8, "little"),
                ),
            ),
            outputs=(TxOut(value_sats, script_for_address(address)),),
        )
        self._apply_block([coinbase])
        return coinbase.txid()

    # --- mempool ---

    def broadcast(self, tx: Transaction) -> BroadcastResult:
        txid = tx.txid()
        if txid in self.mempool or txid in self._inclusion:
            # at-least-once delivery tolerates duplicates; nothing to redo
            return BroadcastResult(accepted=True, txid=txid, reason="duplicate")
        reason = self._validate(tx, self._mempool_output_entries())
        if reason is not None:
            if reason.startswith("conflict:"):
                conflicting_with = reason.split(":", 1)[1]
                self._known_conflicts[txid] = tx
                self._emit(Conflict(conflicting_with, txid, self._clock_now))
                return BroadcastResult(accepted=False, txid=txid, reason="conflict")
            return BroadcastResult(accepted=False, txid=txid, reason=reason)
        self.mempool[txid] = tx
        for txin in tx.inputs:
            self._spent_by_mempool[txin.outpoint] = txid
        self._emit(TxSeen.from_tx(tx, self.network, self._clock_now))
        return BroadcastResult(accepted=True, txid=txid)

    def broadcast_hex(self, tx_hex: str) -> BroadcastResult:
        return self.broadcast(Transaction.parse(bytes.fromhex(tx_hex)))

    def _mempool_output_entries(self) -> dict[Outpoint, UtxoEntry]:
        entries: dict[Outpoint, UtxoEntry] = {}
        for txid, tx in self.mempool.items():
            for vout, txout in enumerate(tx.outputs):
                entries[(txid, vout)] = UtxoEntry(txout.value_sats, txout.script_pubkey)
        return entries

    def _validate(
        self, tx: Transaction, extra_entries: dict[Outpoint, UtxoEntry]
    ) -> str | None:
        """None when valid, else a rejection reason."""
        if tx.is_coinbase:
            return "coinbase_not_broadcastable"
        if not tx.inputs or not tx.outputs:
            return "empty_tx"
        if any(out.value_sats <= 0 for out in tx.outputs):
            return "nonpositive_output"
        outpoints = [txin.outpoint for txin in tx.inputs]
        if len(set(outpoints)) != len(outpoints):
            return "duplicate_input"
        total_in = 0
        resolved: list[UtxoEntry] = []
        for outpoint in outpoints:
            entry = self.utxo_set.get(outpoint) or extra_entries.get(outpoint)
            if entry is None:
                return "missing_input"
            spender = self._spent_by_mempool.get(outpoint)
            if spender is not None:
                return f"conflict:{spender}"
            resolved.append(entry)
            total_in += entry.value_sats
        if tx.total_out() > total_in:
            return "outputs_exceed_inputs"
        if self.verify_signatures:
            for index, entry in enumerate(resolved):
                if not self._signature_valid(tx, index, entry.script_pubkey):
                    return "bad_signature"
        return None

    def _signature_valid(self, tx: Transaction, index: int, script_pubkey: bytes) -> bool:
        parsed = parse_p2pkh_script_sig(tx.inputs[index].script_sig)
        if parsed is None:
            return False
        signature, pubkey = parsed
        if len(signature) < 2 or signature[-1] != SIGHASH_ALL:
            return False
        der = signature[:-1]
        if not secp256k1.is_low_s(der):
            return False
        if not pubkey_matches_script(pubkey, script_pubkey):
            return False
        digest = tx.sighash_all(index, script_pubkey)
        try:
            point = secp256k1.decompress(pubkey)
            numbers = _c_ec.EllipticCurvePublicNumbers(
                int(point[0]), int(point[1]), _c_ec.SECP256K1()
            )
            numbers.public_key().verify(
                der, digest, _c_ec.ECDSA(Prehashed(_c_hashes.SHA256()))
            )
            return True
        except (InvalidSignature, ValueError, secp256k1.InvalidPoint):
            return False

    # --- blocks ---

    def tip_height(self) -> int:
        return len(self.blocks)

    def tip_hash(self) -> str:
        return self.blocks[-1].block_hash if self.blocks else "genesis"

    def mine_block(self, include: list[str] | None = None) -> int:
        """Mine selected txids (default: the whole mempool) into one block.

        The selection may name a known conflicting tx — someone else's
        miner may well include the double-spend — in which case the losing
        mempool tx is evicted with a Conflict event.
        """
        if include is None:
            selection = list(self.mempool.values())
        else:
            selection = []
            for txid in include:
                tx = self.mempool.get(txid) or self._known_conflicts.get(txid)
                if tx is None:
                    raise ChainError(f"cannot mine unknown tx {txid}")
                selection.append(tx)
        self._apply_block(selection)
        return self.tip_height()

    def _apply_block(self, txs: list[Transaction]) -> None:
        # selection must be internally consistent before anything mutates
        seen_outpoints: set[Outpoint] = set()
        for tx in txs:
            if tx.is_coinbase:
                continue
            for txin in tx.inputs:
                if txin.outpoint in seen_outpoints:
                    raise ChainError("selection includes conflicting txs")
                seen_outpoints.add(txin.outpoint)

        height = self.tip_height() + 1
        block_entries: dict[Outpoint, UtxoEntry] = {}  # created and still unspent in-block
        undo: list[tuple[Outpoint, UtxoEntry]] = []
        spent_from_set: set[Outpoint] = set()
        fees = 0
        minted = 0
        for tx in txs:
            if tx.is_coinbase:
                minted += tx.total_out()
            else:
                total_in = 0
                for txin in tx.inputs:
                    outpoint = txin.outpoint
                    if outpoint in block_entries:
                        entry = block_entries.pop(outpoint)
                    elif outpoint in self.utxo_set and outpoint not in spent_from_set:
                        entry = self.utxo_set[outpoint]
                        undo.append((outpoint, entry))
                        spent_from_set.add(outpoint)
                    else:
                        raise ChainError(f"tx {tx.txid()} spends a missing output")
                    total_in += entry.value_sats
                if tx.total_out() > total_in:
                    raise ChainError(f"tx {tx.txid()} creates value")
                fees += total_in - tx.total_out()
            for vout, txout in enumerate(tx.outputs):
                block_entries[(tx.txid(), vout)] = UtxoEntry(
                    txout.value_sats, txout.script_pubkey
                )

        # nothing above mutated the chain; commit now
        for outpoint in spent_from_set:
            del self.utxo_set[outpoint]
        self.utxo_set.update(block_entries)
        block_hash = sha256d(
            (self.tip_hash() + ":" + ",".join(t.txid() for t in txs)).encode()
        ).hex()
        block = Block(
            height=height,
            parent_hash=self.tip_hash(),
            block_hash=block_hash,
            txs=tuple(txs),
            fees=fees,
            minted=minted,
            undo=undo,
        )
        self.blocks.append(block)
        mined_spends: dict[Outpoint, str] = {}
        for tx in txs:
            txid = tx.txid()
            self._inclusion[txid] = height
            self.mempool.pop(txid, None)
            self._known_conflicts.pop(txid, None)
            for txin in tx.inputs:
                self._spent_by_mempool.pop(txin.outpoint, None)
                if not tx.is_coinbase:
                    mined_spends[txin.outpoint] = txid
        self._evict_conflicted_mempool(mined_spends)
        self._emit(BlockMined(height, tuple(t.txid() for t in txs), self._clock_now))

    def _evict_conflicted_mempool(self, mined_spends: dict[Outpoint, str]) -> None:
        """Drop mempool txs whose inputs were consumed by a just-mined tx."""
        for txid, tx in list(self.mempool.items()):
            for txin in tx.inputs:
                winner = mined_spends.get(txin.outpoint)
                if winner is not None and winner != txid:
                    self._drop_from_mempool(txid)
                    self._emit(Conflict(txid, winner, self._clock_now))
                    break

    def _drop_from_mempool(self, txid: str) -> None:
        tx = self.mempool.pop(txid, None)
        if tx is None:
            return
        for txin in tx.inputs:
            if self._spent_by_mempool.get(txin.outpoint) == txid:
                del self._spent_by_mempool[txin.outpoint]

    # --- reorgs ---

    def reorg(
        self, depth: int, replacement_blocks: list[list[Transaction]] | None = None
    ) -> int:
        """Detach ``depth`` blocks, optionally mine replacements, emit Reorg.

        Detached transactions go back to the mempool unless a replacement
        (or surviving mempool tx) conflicts with them.
        """
        if depth < 0 or depth > self.tip_height():
            raise ChainError("reorg depth exceeds chain height")
        if depth == 0:
            return self.tip_height()

        detached_txs: list[Transaction] = []
        for _ in range(depth):
            block = self.blocks.pop()
            for tx in reversed(block.txs):
                txid = tx.txid()
                del self._inclusion[txid]
                for vout in range(len(tx.outputs)):
                    self.utxo_set.pop((txid, vout), None)
                if not tx.is_coinbase:
                    detached_txs.append(tx)
            for outpoint, entry in reversed(block.undo):
                self.utxo_set[outpoint] = entry

        for txs in replacement_blocks or []:
            self._apply_block(txs)

        # surviving mempool entries may now spend vanished outputs
        for txid, tx in list(self.mempool.items()):
            if any(
                txin.outpoint not in self.utxo_set
                and txin.outpoint not in self._mempool_output_entries()
                for txin in tx.inputs
            ):
                self._drop_from_mempool(txid)

        for tx in reversed(detached_txs):  # original order
            txid = tx.txid()
            reason = self._validate(tx, self._mempool_output_entries())
            if reason is None:
                self.mempool[txid] = tx
                for txin in tx.inputs:
                    self._spent_by_mempool[txin.outpoint] = txid
            elif reason.startswith("conflict:"):
                self._emit(Conflict(txid, reason.split(":", 1)[1], self._clock_now))
            elif reason == "missing_input":
                winner = self._mined_spender_of_inputs(tx)
                if winner is not None:
                    self._emit(Conflict(txid, winner, self._clock_now))

        self._emit(Reorg(self.tip_height(), self._clock_now))
        return self.tip_height()

    def _mined_spender_of_inputs(self, tx: Transaction) -> str | None:
        wanted = {txin.outpoint for txin in tx.inputs}
        for block in self.blocks:
            for mined in block.txs:
                if mined.txid() == tx.txid():
                    continue
                for txin in mined.inputs:
                    if txin.outpoint in wanted:
                        return mined.txid()
        return None

    # --- queries ---

    def confirmations(self, txid: str) -> int:
        if txid in self.mempool:
            return 0
        height = self._inclusion.get(txid)
        if height is None:
            raise ChainError(f"unknown txid {txid}")
        return self.tip_height() - height + 1

    def knows(self, txid: str) -> bool:
        return txid in self.mempool or txid in self._inclusion

    def utxos(self, address: str) -> list[UtxoRef]:
        """Confirmed, mempool-unspent outputs paying the address."""
        script = script_for_address(address)
        found = []
        for (txid, vout), entry in self.utxo_set.items():
            if entry.script_pubkey == script and (txid, vout) not in self._spent_by_mempool:
                found.append(UtxoRef(txid, vout, entry.value_sats, address))
        found.sort(key=lambda u: (u.txid, u.vout))
        return found

    def mempool_utxos(self, address: str) -> list[UtxoRef]:
        """Unconfirmed unspent outputs paying the address (change spending)."""
        script = script_for_address(address)
        found = []
        for txid, tx in self.mempool.items():
            for vout, txout in enumerate(tx.outputs):
                if (
                    txout.script_pubkey == script
                    and (txid, vout) not in self._spent_by_mempool
                ):
                    found.append(UtxoRef(txid, vout, txout.value_sats, address))
        found.sort(key=lambda u: (u.txid, u.vout))
        return found

    def address_of_output(self, txout) -> str | None:
        return address_for_script(txout.script_pubkey, self.network)

    # --- accounting (for invariants and tests) ---

    def total_minted(self) -> int:
        return sum(b.minted for b in self.blocks)

    def total_fees(self) -> int:
        return sum(b.fees for b in self.blocks)

    def total_unspent(self) -> int:
        return sum(e.value_sats for e in self.utxo_set.values())
