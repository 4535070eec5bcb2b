"""Cash-out: threshold/interval policy and sweep transactions.

A sweep spends every collected UTXO to one destination. It is always
admin-initiated; cashout_due only raises the flag on the report. Sizing
uses legacy P2PKH estimates (148 bytes per input, 34 per output, 10
overhead) with a 1000-sat fee floor, and conservation is exact:
total_in = total_out + fee.
"""

from __future__ import annotations

from dataclasses import dataclass

from stillpos.crypto import hash160, secp256k1
from stillpos.errors import NothingToSweep, ValidationError
from stillpos.keystore.addresses import decode_address
from stillpos.payments.model import UtxoRef
from stillpos.rates.model import DUST_LIMIT_SATS
from stillpos.tx import (
    SIGHASH_ALL,
    Transaction,
    TxIn,
    TxOut,
    p2pkh_script,
    p2pkh_script_sig,
    script_for_address,
)

INPUT_VBYTES = 148
OUTPUT_VBYTES = 34
TX_OVERHEAD_VBYTES = 10
FEE_FLOOR_SATS = 1000

SECONDS_PER_DAY = 86_400


@dataclass(frozen=True)
class CashOutPolicy:
    threshold_cents: int = 10_000  # $100
    interval_days: int = 30
    destination_address: str | None = None

    def __post_init__(self):
        if self.threshold_cents <= 0 or self.interval_days <= 0:
            raise ValidationError("cash-out thresholds must be positive")


@dataclass(frozen=True)
class SweepInput:
    utxo: UtxoRef
    derivation_index: int


@dataclass(frozen=True)
class SweepPlan:
    inputs: tuple[SweepInput, ...]
    destination: str
    fee_sats: int
    total_in: int
    total_out: int

    def outpoints(self) -> list[list]:
        return [[i.utxo.txid, i.utxo.vout] for i in self.inputs]


def cashout_due(ledger, policy: CashOutPolicy, now: int) -> tuple[bool, str]:
    """(due?, reason). Due when un-swept locked-fiat value reaches the
    threshold, or the interval has passed since the last sweep."""
    unswept = ledger.unswept_paid_sales()
    total_cents = sum(sale.fiat_cents for sale in unswept)
    if total_cents >= policy.threshold_cents:
        return True, (
            f"un-swept paid total {total_cents} cents reached threshold "
            f"{policy.threshold_cents}"
        )
    since = ledger.last_sweep_at()
    if since is None:
        since = ledger.genesis_at
    if total_cents > 0 and now - since >= policy.interval_days * SECONDS_PER_DAY:
        return True, f"{policy.interval_days}-day interval elapsed since last sweep"
    return False, "below threshold and within interval"


def estimate_vbytes(n_inputs: int, n_outputs: int) -> int:
    return TX_OVERHEAD_VBYTES + INPUT_VBYTES * n_inputs + OUTPUT_VBYTES * n_outputs


def build_sweep(
    inputs: list[SweepInput], destination: str, feerate_sat_per_vb: int
) -> SweepPlan:
    if not inputs:
        raise NothingToSweep("no spendable outputs")
    if feerate_sat_per_vb <= 0:
        raise ValidationError("feerate must be positive")
    decode_address(destination)  # raises on malformed destination
    outpoints = [i.utxo.outpoint for i in inputs]
    if len(set(outpoints)) != len(outpoints):
        raise ValidationError("duplicate outpoint in sweep inputs")
    total_in = sum(i.utxo.value_sats for i in inputs)
    fee = max(feerate_sat_per_vb * estimate_vbytes(len(inputs), 1), FEE_FLOOR_SATS)
    total_out = total_in - fee
    if total_out <= DUST_LIMIT_SATS:
        raise ValidationError(
            f"sweep output {total_out} sats would be dust after fee {fee}",
        )
    ordered = tuple(sorted(inputs, key=lambda i: (i.utxo.txid, i.utxo.vout)))
    return SweepPlan(
        inputs=ordered,
        destination=destination,
        fee_sats=fee,
        total_in=total_in,
        total_out=total_out,
    )


def unsigned_sweep_tx(plan: SweepPlan) -> Transaction:
    return Transaction(
        inputs=tuple(TxIn(i.utxo.txid, i.utxo.vout) for i in plan.inputs),
        outputs=(TxOut(plan.total_out, script_for_address(plan.destination)),),
    )


def sign_sweep(plan: SweepPlan, keystore, passphrase: str) -> Transaction:
    """Per-input ECDSA over the legacy sighash-ALL digest.

    Raises BadPassphrase/WatchOnlyError before any signature is produced;
    the caller broadcasts the result and only then marks sales swept.
    """
    keys = keystore.private_keys([i.derivation_index for i in plan.inputs], passphrase)
    tx = unsigned_sweep_tx(plan)
    for index, sweep_input in enumerate(plan.inputs):
        priv = keys[sweep_input.derivation_index]
        pubkey = secp256k1.pubkey_for(priv)
        _, addr_hash = decode_address(sweep_input.utxo.address)
        if hash160(pubkey) != addr_hash:
            raise ValidationError(
                f"key at index {sweep_input.derivation_index} does not match "
                f"address {sweep_input.utxo.address}"
            )
        prev_script = p2pkh_script(addr_hash)
        digest = tx.sighash_all(index, prev_script)
        r, s = secp256k1.sign_digest(priv, digest)
        signature = secp256k1.der_encode(r, s) + bytes([SIGHASH_ALL])
        tx = tx.with_script_sig(index, p2pkh_script_sig(signature, pubkey))
    return tx


def spendable_inputs(ledger, chain, keystore) -> tuple[list[SweepInput], list[str]]:
    """Confirmed-and-unswept outputs across paid sales, with the sale ids
    they settle. Sales already marked swept never contribute again."""
    inputs: list[SweepInput] = []
    sale_ids: list[str] = []
    for sale in ledger.unswept_paid_sales():
        utxos = chain.utxos(sale.address)
        if not utxos:
            continue
        record = keystore.record(sale.derivation_index)
        if record.address != sale.address:
            raise ValidationError(
                f"keystore index {sale.derivation_index} does not match sale address"
            )
        sale_ids.append(sale.sale_id)
        for utxo in utxos:
            inputs.append(SweepInput(utxo=utxo, derivation_index=sale.derivation_index))
    return inputs, sale_ids
