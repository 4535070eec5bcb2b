"""Line-oriented scenario scripts for driving the simulated chain.

Grammar (one command per line; ``#`` starts a comment):

    FUND <wallet> <sats>              mint coins to a named payer wallet
    SALE <name> <cents> [currency] [note ...]
    PAY <sale> exact|<sats> [AS <tx>] pay a sale from the payer wallets
    CONFLICT <tx> [AS <tx2>]          broadcast a double-spend of <tx>'s inputs
    MINE <n> [WITH <tx>]              mine n blocks; WITH puts the named
                                      (possibly conflicting) tx in the first
    REORG <depth>                     detach <depth> blocks, no replacement
    TICK <seconds>                    advance the logical clock
    EXPECT <sale> <state>             assert the sale's current state

Wallet keys are derived from the wallet name, so scripts replay
bit-identically: same file, same timeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from stillpos.crypto import hash160, secp256k1, sha256
from stillpos.errors import StillPosError, ValidationError
from stillpos.keystore.addresses import encode_address
from stillpos.payments.model import InvoiceState
from stillpos.tx import (
    SIGHASH_ALL,
    Transaction,
    TxIn,
    TxOut,
    p2pkh_script,
    p2pkh_script_sig,
    script_for_address,
)

SCENARIO_PAY_FEE_SATS = 200


class ScenarioError(StillPosError):
    code = "scenario"


@dataclass
class ScenarioWallet:
    name: str
    priv: int
    address: str


@dataclass
class ScenarioRun:
    timeline: list[str] = field(default_factory=list)
    sales: dict[str, str] = field(default_factory=dict)  # name -> sale_id
    txs: dict[str, Transaction] = field(default_factory=dict)  # name -> tx

    def final_state(self, ledger, sale_name: str) -> InvoiceState:
        return ledger.sale(self.sales[sale_name]).state


def _wallet_for(name: str, network) -> ScenarioWallet:
    priv = int.from_bytes(sha256(b"stillpos-scenario:" + name.encode()), "big")
    priv = priv % (secp256k1.N - 1) + 1
    pubkey = secp256k1.pubkey_for(priv)
    return ScenarioWallet(name=name, priv=priv, address=encode_address(pubkey, network))


def _sign_all_inputs(tx: Transaction, wallet: ScenarioWallet) -> Transaction:
    """Scenario payers own every input they spend, so one key signs all."""
    pubkey = secp256k1.pubkey_for(wallet.priv)
    prev_script = p2pkh_script(hash160(pubkey))
    for index in range(len(tx.inputs)):
        digest = tx.sighash_all(index, prev_script)
        r, s = secp256k1.sign_digest(wallet.priv, digest)
        signature = secp256k1.der_encode(r, s) + bytes([SIGHASH_ALL])
        tx = tx.with_script_sig(index, p2pkh_script_sig(signature, pubkey))
    return tx


def parse_script(text: str) -> list[tuple[int, list[str]]]:
    commands = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        commands.append((line_no, line.split()))
    return commands


class ScenarioRunner:
    """Executes a script against a PosStack built on the simulated node."""

    def __init__(self, stack):
        self.stack = stack
        self.node = stack.chain
        self.ledger = stack.ledger
        self.clock = stack.clock
        self.wallets: dict[str, ScenarioWallet] = {}
        self.run = ScenarioRun()
        self._auto_tx_counter = 0

    def execute(self, text: str) -> ScenarioRun:
        for line_no, words in parse_script(text):
            before = len(self.ledger.transitions())
            try:
                self._dispatch(words)
            except Exception as exc:
                raise ScenarioError(f"line {line_no}: {exc}") from exc
            self.run.timeline.append("> " + " ".join(words))
            for entry in self.ledger.transitions()[before:]:
                self.run.timeline.append(
                    f"  {self._sale_name(entry.sale_id)}: "
                    f"{entry.from_state.value} -> {entry.to_state.value} ({entry.reason})"
                )
        return self.run

    def _sale_name(self, sale_id: str) -> str:
        for name, sid in self.run.sales.items():
            if sid == sale_id:
                return name
        return sale_id

    def _dispatch(self, words: list[str]) -> None:
        op = words[0].upper()
        if op == "FUND":
            self._fund(words[1], int(words[2]))
        elif op == "SALE":
            self._sale(words[1], int(words[2]), words[3] if len(words) > 3 else None,
                       " ".join(words[4:]))
        elif op == "PAY":
            self._pay(words)
        elif op == "CONFLICT":
            self._conflict(words)
        elif op == "MINE":
            self._mine(words)
        elif op == "REORG":
            self.node.reorg(int(words[1]))
        elif op == "TICK":
            self.clock.tick(int(words[1]))
            self.node.set_time(self.clock.now())
            self.stack.engine.tick(self.clock.now())
        elif op == "EXPECT":
            self._expect(words[1], words[2])
        else:
            raise ScenarioError(f"unknown command {op}")

    def _wallet(self, name: str) -> ScenarioWallet:
        if name not in self.wallets:
            self.wallets[name] = _wallet_for(name, self.node.network)
        return self.wallets[name]

    def _fund(self, wallet_name: str, sats: int) -> None:
        wallet = self._wallet(wallet_name)
        self.node.faucet(wallet.address, sats)

    def _sale(self, name: str, cents: int, currency: str | None, note: str) -> None:
        if name in self.run.sales:
            raise ScenarioError(f"sale {name} already defined")
        view = self.stack.create_sale(cents, currency, note or name)
        self.run.sales[name] = view["sale_id"]

    def _next_tx_name(self) -> str:
        self._auto_tx_counter += 1
        return f"tx{self._auto_tx_counter}"

    def _pay(self, words: list[str]) -> None:
        sale_name = words[1]
        sale = self.ledger.sale(self.run.sales[sale_name])
        amount = sale.btc_sats if words[2].lower() == "exact" else int(words[2])
        name = words[words.index("AS") + 1] if "AS" in words else self._next_tx_name()

        wallet, utxos = self._pick_funds(amount + SCENARIO_PAY_FEE_SATS)
        total_in = sum(u.value_sats for u in utxos)
        outputs = [TxOut(amount, script_for_address(sale.address))]
        change = total_in - amount - SCENARIO_PAY_FEE_SATS
        if change > 0:
            outputs.append(TxOut(change, script_for_address(wallet.address)))
        tx = Transaction(
            inputs=tuple(TxIn(u.txid, u.vout) for u in utxos),
            outputs=tuple(outputs),
        )
        tx = _sign_all_inputs(tx, wallet)
        result = self.node.broadcast(tx)
        if not result.accepted:
            raise ScenarioError(f"payment rejected: {result.reason}")
        self.run.txs[name] = tx

    def _pick_funds(self, needed: int):
        for wallet in self.wallets.values():
            # confirmed first, then unconfirmed change
            utxos = self.node.utxos(wallet.address) + self.node.mempool_utxos(wallet.address)
            chosen = []
            total = 0
            for utxo in utxos:
                chosen.append(utxo)
                total += utxo.value_sats
                if total >= needed:
                    return wallet, chosen
        raise ScenarioError(f"no wallet holds {needed} sats; FUND one first")

    def _conflict(self, words: list[str]) -> None:
        target = self.run.txs.get(words[1])
        if target is None:
            raise ScenarioError(f"unknown tx {words[1]}")
        name = words[words.index("AS") + 1] if "AS" in words else self._next_tx_name()
        # spend the same inputs back to the payer: a classic double-spend
        wallet = next(iter(self.wallets.values()), None) or self._wallet("payer")
        total_in = self._value_of_inputs(target)
        rogue = Transaction(
            inputs=tuple(TxIn(t.prev_txid, t.vout) for t in target.inputs),
            outputs=(
                TxOut(total_in - SCENARIO_PAY_FEE_SATS, script_for_address(wallet.address)),
            ),
        )
        rogue = _sign_all_inputs(rogue, wallet)
        self.node.broadcast(rogue)  # rejected from our mempool; Conflict emitted
        self.run.txs[name] = rogue

    def _value_of_inputs(self, tx: Transaction) -> int:
        total = 0
        for txin in tx.inputs:
            entry = self.node.utxo_set.get(txin.outpoint)
            if entry is None:
                for mem_tx in self.node.mempool.values():
                    if mem_tx.txid() == txin.prev_txid:
                        entry = mem_tx.outputs[txin.vout]
                        break
            if entry is None:
                raise ScenarioError(f"cannot price input {txin.outpoint}")
            total += entry.value_sats
        return total

    def _mine(self, words: list[str]) -> None:
        count = int(words[1])
        include = None
        if "WITH" in words:
            tx = self.run.txs.get(words[words.index("WITH") + 1])
            if tx is None:
                raise ScenarioError(f"unknown tx {words[words.index('WITH') + 1]}")
            include = [tx.txid()]
        for i in range(count):
            self.node.mine_block(include if i == 0 else None)

    def _expect(self, sale_name: str, state_name: str) -> None:
        try:
            expected = InvoiceState(state_name)
        except ValueError:
            raise ValidationError(f"unknown state {state_name!r}") from None
        actual = self.ledger.sale(self.run.sales[sale_name]).state
        if actual != expected:
            raise ScenarioError(
                f"sale {sale_name} is {actual.value}, expected {expected.value}"
            )
