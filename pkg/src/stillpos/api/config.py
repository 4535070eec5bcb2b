"""Declarative service configuration.

One JSON file wires everything: bind address, tokens, branch, rate
sources, chain backend, keystore, policy. Environment overrides:
STILLPOS_CONFIG (path) and STILLPOS_BIND (host:port).

Example:

    {
      "bind": "127.0.0.1:8740",
      "network": "regtest",
      "keystore": {"path": "run/store.keys"},
      "ledger_dir": "run/ledger",
      "tokens": {"employee": "emp-token", "admin": "adm-token"},
      "sales_access": "public",
      "branch": {"branch_id": "main", "display_name": "Cafe",
                 "default_currency": "CAD",
                 "zero_conf_max_fiat_cents": 5000,
                 "cashout_threshold_cents": 10000,
                 "cashout_interval_days": 30},
      "rates": {"fiats": ["CAD", "USD"], "staleness_seconds": 120,
                "quorum": 2, "tolerance_bp": 100, "refresh_seconds": 30,
                "sources": [{"source_id": "a", "kind": "http",
                             "location": "https://x/v1/{fiat}",
                             "field_path": "last", "fiat": "CAD"}]},
      "chain": {"kind": "simnode"},
      "policy": {"underpay_tolerance_bp": 0,
                 "zero_conf_max_fiat_cents": 5000,
                 "confirmation_bands": [[5000, 0], [50000, 1], [null, 3]],
                 "allow_confirmation_regression": false},
      "invoice_expiry_seconds": 900,
      "explorer_url_template": "https://blockstream.info/tx/{txid}",
      "treasury": {"destination": null, "feerate_sat_per_vb": 10}
    }
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from stillpos.errors import ConfigError
from stillpos.ledger.model import BranchConfig
from stillpos.payments.model import MatchPolicy
from stillpos.rates.sources import SourceConfig
from stillpos.treasury import CashOutPolicy

ENV_CONFIG = "STILLPOS_CONFIG"
ENV_BIND = "STILLPOS_BIND"


@dataclass
class RatesConfig:
    fiats: list[str] = field(default_factory=lambda: ["CAD", "USD"])
    staleness_seconds: int = 120
    quorum: int = 2
    tolerance_bp: int = 100
    refresh_seconds: float = 30.0
    sources: list[SourceConfig] = field(default_factory=list)


@dataclass
class ChainConfig:
    kind: str = "simnode"  # "simnode" | "explorer"
    endpoints: dict[str, str] = field(default_factory=dict)
    poll_seconds: float = 5.0
    verify_signatures: bool = False


@dataclass
class AppConfig:
    bind_host: str = "127.0.0.1"
    bind_port: int = 8740
    network: str = "regtest"
    keystore_path: str = "store.keys"
    ledger_dir: str = "ledger"
    employee_token: str = ""
    admin_token: str = ""
    sales_access: str = "public"  # "public" | "employee"
    branch: BranchConfig = field(default_factory=BranchConfig)
    rates: RatesConfig = field(default_factory=RatesConfig)
    chain: ChainConfig = field(default_factory=ChainConfig)
    policy: MatchPolicy = field(default_factory=MatchPolicy)
    invoice_expiry_seconds: int = 900
    explorer_url_template: str | None = None
    ui_dir: str | None = None
    cashout_destination: str | None = None
    cashout_feerate: int = 10

    @property
    def cashout_policy(self) -> CashOutPolicy:
        return CashOutPolicy(
            threshold_cents=self.branch.cashout_threshold_cents,
            interval_days=self.branch.cashout_interval_days,
            destination_address=self.cashout_destination,
        )


def _bind_parts(bind: str) -> tuple[str, int]:
    host, _, port = bind.rpartition(":")
    if not host or not port.isdigit():
        raise ConfigError(f"bind must look like host:port, got {bind!r}")
    return host, int(port)


def load_config(path: str) -> AppConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}"
        ) from None
    return parse_config(data, base_dir=os.path.dirname(os.path.abspath(path)))


def parse_config(data: dict, *, base_dir: str = ".") -> AppConfig:
    def resolve(relpath: str) -> str:
        return relpath if os.path.isabs(relpath) else os.path.join(base_dir, relpath)

    cfg = AppConfig()
    try:
        bind = os.environ.get(ENV_BIND) or data.get("bind", "127.0.0.1:8740")
        cfg.bind_host, cfg.bind_port = _bind_parts(bind)
        cfg.network = data.get("network", "regtest")
        if cfg.network not in ("mainnet", "testnet", "regtest"):
            raise ConfigError(f"unknown network {cfg.network!r}")
        keystore = data.get("keystore", {})
        cfg.keystore_path = resolve(keystore.get("path", "store.keys"))
        cfg.ledger_dir = resolve(data.get("ledger_dir", "ledger"))
        tokens = data.get("tokens", {})
        cfg.employee_token = tokens.get("employee", "")
        cfg.admin_token = tokens.get("admin", "")
        cfg.sales_access = data.get("sales_access", "public")
        if cfg.sales_access not in ("public", "employee"):
            raise ConfigError(f"sales_access must be public or employee")
        if "branch" in data:
            cfg.branch = BranchConfig.from_json(data["branch"])

        rates = data.get("rates", {})
        cfg.rates = RatesConfig(
            fiats=rates.get("fiats", ["CAD", "USD"]),
            staleness_seconds=rates.get("staleness_seconds", 120),
            quorum=rates.get("quorum", 2),
            tolerance_bp=rates.get("tolerance_bp", 100),
            refresh_seconds=rates.get("refresh_seconds", 30.0),
            sources=[SourceConfig.from_json(s) for s in rates.get("sources", [])],
        )
        # file-based fixtures resolve relative to the config file
        cfg.rates.sources = [
            SourceConfig(
                source_id=s.source_id,
                kind=s.kind,
                location=resolve(s.location) if s.kind == "file" else s.location,
                field_path=s.field_path,
                fiat=s.fiat,
            )
            for s in cfg.rates.sources
        ]

        chain = data.get("chain", {})
        cfg.chain = ChainConfig(
            kind=chain.get("kind", "simnode"),
            endpoints=chain.get("endpoints", {}),
            poll_seconds=chain.get("poll_seconds", 5.0),
            verify_signatures=chain.get("verify_signatures", False),
        )
        if cfg.chain.kind not in ("simnode", "explorer"):
            raise ConfigError(f"chain.kind must be simnode or explorer")

        if "policy" in data:
            p = data["policy"]
            bands = p.get("confirmation_bands")
            cfg.policy = MatchPolicy(
                underpay_tolerance_bp=p.get("underpay_tolerance_bp", 0),
                zero_conf_max_fiat_cents=p.get(
                    "zero_conf_max_fiat_cents", cfg.branch.zero_conf_max_fiat_cents
                ),
                confirmation_bands=(
                    tuple((c, n) for c, n in bands) if bands else MatchPolicy().confirmation_bands
                ),
                allow_confirmation_regression=p.get("allow_confirmation_regression", False),
            )
        else:
            cfg.policy = MatchPolicy(
                zero_conf_max_fiat_cents=cfg.branch.zero_conf_max_fiat_cents
            )

        cfg.invoice_expiry_seconds = data.get("invoice_expiry_seconds", 900)
        cfg.explorer_url_template = data.get("explorer_url_template")
        if data.get("ui_dir"):
            cfg.ui_dir = resolve(data["ui_dir"])
        treasury = data.get("treasury", {})
        cfg.cashout_destination = treasury.get("destination")
        cfg.cashout_feerate = treasury.get("feerate_sat_per_vb", 10)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from None
    return cfg
