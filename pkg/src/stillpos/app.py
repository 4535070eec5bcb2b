"""Assembles the service: keystore + rates + chain + ledger + engine.

One stack object serves the HTTP layer, the CLI, and the scenario runner,
so every entry point exercises the same wiring.
"""

from __future__ import annotations

import threading

from stillpos.clock import ManualClock, SystemClock
from stillpos.errors import ChainError, ConfigError, NothingToSweep
from stillpos.keystore import KeyStore, network_by_name
from stillpos.ledger import BranchConfig, Ledger
from stillpos.payments.engine import PaymentEngine
from stillpos.payments.explorer import ExplorerSource
from stillpos.payments.model import MatchPolicy
from stillpos.payments.uri import build_payment_uri
from stillpos.rates import RateBoard, SourceConfig
from stillpos.simnode.node import SimNode
from stillpos.treasury import (
    CashOutPolicy,
    build_sweep,
    cashout_due,
    sign_sweep,
    spendable_inputs,
)

DEFAULT_EXPLORER_TEMPLATES = {
    "mainnet": "https://blockstream.info/tx/{txid}",
    "testnet": "https://blockstream.info/testnet/tx/{txid}",
    "regtest": "http://localhost:3002/tx/{txid}",
}


class PosStack:
    def __init__(
        self,
        *,
        keystore: KeyStore,
        rates: RateBoard,
        chain,
        ledger: Ledger,
        engine: PaymentEngine,
        policy: MatchPolicy,
        cashout_policy: CashOutPolicy,
        clock,
        sales_access: str = "public",
        tick_seconds: float = 5.0,
    ):
        self.keystore = keystore
        self.rates = rates
        self.chain = chain
        self.ledger = ledger
        self.engine = engine
        self.policy = policy
        self.cashout_policy = cashout_policy
        self.clock = clock
        self.sales_access = sales_access
        self.tick_seconds = tick_seconds
        self._sweep_lock = threading.Lock()
        self._tick_stop = threading.Event()
        self._tick_thread: threading.Thread | None = None

    # --- lifecycle ---

    def start(self, *, rate_refresh_seconds: float = 30.0) -> None:
        self.rates.refresh_all()
        self.rates.start(rate_refresh_seconds)
        if isinstance(self.chain, ExplorerSource):
            self.chain.start()

        def tick_loop():
            while not self._tick_stop.is_set():
                self.engine.tick()
                self._tick_stop.wait(self.tick_seconds)

        self._tick_thread = threading.Thread(target=tick_loop, name="expiry-tick", daemon=True)
        self._tick_stop.clear()
        self._tick_thread.start()

    def stop(self) -> None:
        self.rates.stop()
        if isinstance(self.chain, ExplorerSource):
            self.chain.stop()
        if self._tick_thread is not None:
            self._tick_stop.set()
            self._tick_thread.join(timeout=5)
            self._tick_thread = None
        self.ledger.close()
        self.keystore.close()

    # --- operations shared by API and CLI ---

    def create_sale(self, fiat_cents: int, currency: str | None, note: str) -> dict:
        sale = self.ledger.create_sale(fiat_cents, currency, note)
        if hasattr(self.chain, "watch"):
            self.chain.watch(sale.address)
        uri = build_payment_uri(sale.address, sale.btc_sats, self.ledger.branch.display_name)
        return {
            "sale_id": sale.sale_id,
            "address": sale.address,
            "fiat_cents": sale.fiat_cents,
            "currency": sale.fiat_currency,
            "rate_cents": sale.locked_rate,
            "btc_sats": sale.btc_sats,
            "uri": uri,
            "qr_payload": uri,
            "state": sale.state.value,
            "created_at": sale.created_at,
            "expires_at": sale.expires_at,
        }

    def sale_status(self, sale_id: str) -> dict:
        sale = self.ledger.sale(sale_id)
        confirmations = 0
        if sale.matched_txid is not None:
            try:
                confirmations = self.chain.confirmations(sale.matched_txid)
            except ChainError:
                confirmations = 0
        return {
            "sale_id": sale.sale_id,
            "state": sale.state.value,
            "overpaid": sale.overpaid,
            "paid_sats": sale.paid_sats,
            "excess_sats": sale.excess_sats,
            "btc_sats": sale.btc_sats,
            "confirmations": confirmations,
            "txid": sale.matched_txid,
            "expires_at": sale.expires_at,
            "updated_at": sale.updated_at,
            "version": self.engine.version(sale_id),
        }

    def rates_view(self, fiat: str) -> dict:
        snapshot = self.rates.current(fiat)  # raises StaleRates when unavailable
        return {
            "pair": snapshot.pair,
            "aggregate_cents": snapshot.aggregate_cents,
            "method": snapshot.method,
            "computed_at": snapshot.computed_at,
            "age_seconds": max(0, self.clock.now() - snapshot.computed_at),
            "sources": [
                {
                    "source_id": q.source_id,
                    "price_cents": q.price_cents,
                    "fetched_at": q.fetched_at,
                }
                for q in snapshot.contributing
            ],
            "violations": list(snapshot.violations),
            "source_errors": self.rates.source_errors(fiat),
        }

    def cashout(self, destination: str | None, feerate: int, passphrase: str) -> dict:
        """Build, sign, broadcast, then mark swept — atomically or not at all."""
        destination = destination or self.cashout_policy.destination_address
        if not destination:
            raise ConfigError("no cash-out destination configured or supplied")
        with self._sweep_lock:
            inputs, sale_ids = spendable_inputs(self.ledger, self.chain, self.keystore)
            if not inputs:
                raise NothingToSweep("no confirmed unswept funds")
            plan = build_sweep(inputs, destination, feerate)
            signed = sign_sweep(plan, self.keystore, passphrase)
            result = self.chain.broadcast(signed)
            if not result.accepted:
                raise ChainError(f"sweep rejected: {result.reason}")
            self.ledger.mark_swept(sale_ids, result.txid, plan.outpoints())
            return {
                "txid": result.txid,
                "destination": destination,
                "total_in": plan.total_in,
                "fee_sats": plan.fee_sats,
                "total_out": plan.total_out,
                "inputs": len(plan.inputs),
                "sales_swept": sale_ids,
            }

    def cashout_flag(self) -> tuple[bool, str]:
        return cashout_due(self.ledger, self.cashout_policy, self.clock.now())


def build_stack_from_config(cfg, *, clock=None) -> PosStack:
    """Stack for `serve`: opens the keystore and ledger named in config."""
    from stillpos.api.config import AppConfig  # noqa: F401 (type documented here)

    clock = clock or SystemClock()
    keystore = KeyStore.open(cfg.keystore_path)
    if keystore.network.name != cfg.network:
        raise ConfigError(
            f"config says network {cfg.network} but the key store is "
            f"{keystore.network.name}"
        )
    rates = RateBoard(
        cfg.rates.sources,
        cfg.rates.fiats,
        clock=clock,
        staleness_seconds=cfg.rates.staleness_seconds,
        quorum=cfg.rates.quorum,
        tolerance_bp=cfg.rates.tolerance_bp,
    )
    if cfg.chain.kind == "simnode":
        chain = SimNode(keystore.network, verify_signatures=cfg.chain.verify_signatures)
        chain.set_time(clock.now())
    else:
        chain = ExplorerSource(cfg.chain.endpoints, clock, poll_seconds=cfg.chain.poll_seconds)
    ledger = Ledger(
        cfg.ledger_dir,
        keystore,
        rates,
        clock,
        branch=cfg.branch,
        expiry_seconds=cfg.invoice_expiry_seconds,
        explorer_url_template=cfg.explorer_url_template
        or DEFAULT_EXPLORER_TEMPLATES[cfg.network],
    )
    engine = PaymentEngine(ledger, chain, cfg.policy, clock)
    for sale in ledger.sales():
        if sale.swept_by is None and hasattr(chain, "watch"):
            chain.watch(sale.address)
    return PosStack(
        keystore=keystore,
        rates=rates,
        chain=chain,
        ledger=ledger,
        engine=engine,
        policy=cfg.policy,
        cashout_policy=cfg.cashout_policy,
        clock=clock,
        sales_access=cfg.sales_access,
    )


def build_sim_stack(
    base_dir: str,
    *,
    entropy: bytes = b"\x42" * 32,
    passphrase: str = "demo-passphrase",
    rate_cents: int = 30_000,
    network_name: str = "regtest",
    policy: MatchPolicy | None = None,
    branch: BranchConfig | None = None,
    cashout_policy: CashOutPolicy | None = None,
    expiry_seconds: int = 900,
    clock: ManualClock | None = None,
    verify_signatures: bool = False,
    kdf_cost: tuple[int, int, int] = (2**10, 8, 1),
) -> PosStack:
    """Self-contained stack over the simulated chain, for demos and tests.

    Rates come from two generated fixture files (median = rate_cents), so
    the quorum of 2 is met without any network access.
    """
    import json
    import os

    clock = clock or ManualClock()
    network = network_by_name(network_name)
    os.makedirs(base_dir, exist_ok=True)

    store_path = os.path.join(base_dir, "store.keys")
    if os.path.exists(store_path):
        keystore = KeyStore.open(store_path)
    else:
        keystore = KeyStore.create_hot(
            store_path,
            network,
            entropy,
            passphrase,
            kdf_cost=kdf_cost,
            created_at=clock.now(),
        )

    fixtures = []
    for name in ("alpha", "beta"):
        path = os.path.join(base_dir, f"rate_{name}.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"price": f"{rate_cents // 100}.{rate_cents % 100:02d}"}, fh)
        fixtures.append(
            SourceConfig(
                source_id=name, kind="file", location=path, field_path="price", fiat="CAD"
            )
        )
    rates = RateBoard(fixtures, ["CAD"], clock=clock)
    rates.refresh_all()

    chain = SimNode(network, verify_signatures=verify_signatures)
    chain.set_time(clock.now())

    policy = policy or MatchPolicy()
    branch = branch or BranchConfig()
    ledger = Ledger(
        os.path.join(base_dir, "ledger"),
        keystore,
        rates,
        clock,
        branch=branch,
        expiry_seconds=expiry_seconds,
        explorer_url_template=DEFAULT_EXPLORER_TEMPLATES[network_name],
    )
    engine = PaymentEngine(ledger, chain, policy, clock)
    cashout = cashout_policy or CashOutPolicy(
        threshold_cents=branch.cashout_threshold_cents,
        interval_days=branch.cashout_interval_days,
    )
    return PosStack(
        keystore=keystore,
        rates=rates,
        chain=chain,
        ledger=ledger,
        engine=engine,
        policy=policy,
        cashout_policy=cashout,
        clock=clock,
    )
