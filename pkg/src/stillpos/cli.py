"""Operator command line.

    stillpos init --network regtest --mode hot --out run/store.keys
    stillpos serve --config pos.json
    stillpos demo --scenario scripts/cafe.txt
    stillpos keys export --store run/store.keys --index 0
    stillpos report dump --url http://127.0.0.1:8740 --token T --from ... --to ...
    stillpos cashout --url http://127.0.0.1:8740 --token T --dest ADDR --feerate 10

Exit codes: 0 ok, 2 usage, 3 config/environment, 4 auth, 5 state.
Passphrases are read interactively or from --passphrase-fd — never argv.
"""

from __future__ import annotations

import argparse
import getpass
import json
import os
import signal
import sys
import tempfile
import urllib.error
import urllib.request

from stillpos.errors import (
    AuthError,
    BadPassphrase,
    ConfigError,
    StillPosError,
    StoreError,
    ValidationError,
    WatchOnlyError,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_AUTH = 4
EXIT_STATE = 5

_AUTH_CODES = {"unauthorized", "bad_passphrase", "forbidden", "watch_only"}


def _fail(code: str, message: str, exit_code: int) -> int:
    print(json.dumps({"code": code, "message": message}), file=sys.stderr)
    return exit_code


def _exit_for(exc: StillPosError) -> int:
    if isinstance(exc, (AuthError, BadPassphrase, WatchOnlyError)):
        return EXIT_AUTH
    if isinstance(exc, (ConfigError, ValidationError, StoreError)):
        return EXIT_CONFIG
    return EXIT_STATE


def read_passphrase(args, prompt: str = "passphrase: ", *, confirm: bool = False) -> str:
    if args.passphrase_fd is not None:
        with os.fdopen(os.dup(args.passphrase_fd), "r") as fh:
            return fh.readline().rstrip("\n")
    phrase = getpass.getpass(prompt)
    if confirm:
        again = getpass.getpass("repeat " + prompt)
        if phrase != again:
            raise ValidationError("passphrases do not match")
    return phrase


# --- subcommands ---


def cmd_init(args) -> int:
    from stillpos.keystore import KeyStore, network_by_name

    network = network_by_name(args.network)
    if os.path.exists(args.out):
        return _fail("store", f"{args.out} already exists", EXIT_CONFIG)
    if args.mode == "watch-only":
        if not args.xpub:
            return _fail("validation", "watch-only mode needs --xpub", EXIT_USAGE)
        store = KeyStore.create_watch_only(args.out, network, args.xpub)
    else:
        entropy = bytes.fromhex(args.entropy_hex) if args.entropy_hex else os.urandom(32)
        passphrase = read_passphrase(args, confirm=args.passphrase_fd is None)
        if not passphrase:
            return _fail("validation", "empty passphrase", EXIT_USAGE)
        store = KeyStore.create_hot(args.out, network, entropy, passphrase)
    print(f"created {args.mode} store at {args.out}")
    print(f"account public key (back this up): {store.account_xpub}")
    return EXIT_OK


def cmd_serve(args) -> int:
    from stillpos.api.config import load_config
    from stillpos.api.http import ApiServer, PosApi
    from stillpos.app import build_stack_from_config

    cfg = load_config(args.config)
    try:
        stack = build_stack_from_config(cfg)
    except FileNotFoundError as exc:
        return _fail("config", f"missing file: {exc.filename}", EXIT_CONFIG)
    stack.start(rate_refresh_seconds=cfg.rates.refresh_seconds)
    api = PosApi(
        stack,
        employee_token=cfg.employee_token,
        admin_token=cfg.admin_token,
        sales_access=cfg.sales_access,
        default_feerate=cfg.cashout_feerate,
        ui_dir=cfg.ui_dir,
    )
    try:
        server = ApiServer(api, cfg.bind_host, cfg.bind_port)
    except OSError as exc:
        return _fail("bind", f"cannot bind {cfg.bind_host}:{cfg.bind_port}: {exc.strerror}",
                     EXIT_CONFIG)
    stop = {"done": False}

    def _sigterm(_sig, _frame):
        stop["done"] = True
        server.shutdown()

    signal.signal(signal.SIGINT, _sigterm)
    signal.signal(signal.SIGTERM, _sigterm)
    print(f"stillpos serving on http://{cfg.bind_host}:{cfg.bind_port}")
    server.serve_forever()
    stack.stop()
    return EXIT_OK


def cmd_demo(args) -> int:
    from stillpos.app import build_sim_stack
    from stillpos.simnode.scenario import ScenarioRunner

    try:
        with open(args.scenario, "r", encoding="utf-8") as fh:
            script = fh.read()
    except OSError as exc:
        return _fail("config", f"cannot read scenario: {exc.strerror}", EXIT_CONFIG)
    with tempfile.TemporaryDirectory(prefix="stillpos-demo-") as tmp:
        stack = build_sim_stack(tmp)
        runner = ScenarioRunner(stack)
        run = runner.execute(script)
        for line in run.timeline:
            print(line)
        for name, sale_id in run.sales.items():
            sale = stack.ledger.sale(sale_id)
            print(f"final {name}: {sale.state.value} (paid {sale.paid_sats}/{sale.btc_sats} sats)")
    return EXIT_OK


def cmd_keys_export(args) -> int:
    from stillpos.keystore import KeyStore

    store = KeyStore.open(args.store)
    passphrase = read_passphrase(args)
    wif = store.export_wif(args.index, passphrase)
    record = store.record(args.index)
    print(f"index {args.index} address {record.address}")
    print(wif)
    return EXIT_OK


def _authorized_get(url: str, token: str, accept: str) -> bytes:
    request = urllib.request.Request(url, headers={
        "Authorization": f"Bearer {token}",
        "Accept": accept,
    })
    with urllib.request.urlopen(request, timeout=30) as resp:
        return resp.read()


def cmd_report_dump(args) -> int:
    url = f"{args.url}/v1/report?from={args.from_ts}&to={args.to_ts}"
    try:
        body = _authorized_get(url, args.token, "text/csv")
    except urllib.error.HTTPError as exc:
        payload = _decode_api_error(exc)
        return _fail(payload["code"], payload["message"],
                     EXIT_AUTH if payload["code"] in _AUTH_CODES else EXIT_STATE)
    except urllib.error.URLError as exc:
        return _fail("unreachable", f"cannot reach {args.url}: {exc.reason}", EXIT_CONFIG)
    sys.stdout.write(body.decode())
    return EXIT_OK


def _decode_api_error(exc: urllib.error.HTTPError) -> dict:
    try:
        payload = json.loads(exc.read().decode())
        return {"code": payload.get("code", "http"), "message": payload.get("message", "")}
    except Exception:
        return {"code": "http", "message": f"HTTP {exc.code}"}


def cmd_cashout(args) -> int:
    probe = json.loads(_authorized_get(f"{args.url}/v1/report?from=0&to=99999999999",
                                       args.token, "application/json"))
    if not probe.get("cashout_due", False) and not args.force:
        return _fail(
            "not_due",
            f"cash-out not due ({probe.get('cashout_reason', 'unknown')}); use --force",
            EXIT_STATE,
        )
    passphrase = read_passphrase(args)
    body = json.dumps({
        "destination": args.dest,
        "feerate_sat_per_vb": args.feerate,
        "passphrase": passphrase,
    }).encode()
    request = urllib.request.Request(
        f"{args.url}/v1/admin/cashout",
        data=body,
        method="POST",
        headers={"Authorization": f"Bearer {args.token}",
                 "Content-Type": "application/json"},
    )
    try:
        with urllib.request.urlopen(request, timeout=60) as resp:
            summary = json.loads(resp.read().decode())
    except urllib.error.HTTPError as exc:
        payload = _decode_api_error(exc)
        return _fail(payload["code"], payload["message"],
                     EXIT_AUTH if payload["code"] in _AUTH_CODES else EXIT_STATE)
    print(json.dumps(summary, indent=2))
    return EXIT_OK


# --- argument parsing ---


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stillpos", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_init = sub.add_parser("init", help="create a new key store and ledger")
    p_init.add_argument("--network", choices=["mainnet", "testnet", "regtest"],
                        required=True)
    p_init.add_argument("--mode", choices=["hot", "watch-only"], default="hot")
    p_init.add_argument("--xpub", help="account public key for watch-only mode")
    p_init.add_argument("--out", required=True, help="store file to create")
    p_init.add_argument("--entropy-hex", help="hex seed entropy (testing only)")
    p_init.add_argument("--passphrase-fd", type=int)
    p_init.set_defaults(func=cmd_init)

    p_serve = sub.add_parser("serve", help="run the payment service")
    p_serve.add_argument("--config", default=os.environ.get("STILLPOS_CONFIG", "pos.json"))
    p_serve.set_defaults(func=cmd_serve)

    p_demo = sub.add_parser("demo", help="run a scripted scenario on the simulated chain")
    p_demo.add_argument("--scenario", required=True)
    p_demo.set_defaults(func=cmd_demo)

    p_keys = sub.add_parser("keys", help="key operations")
    keys_sub = p_keys.add_subparsers(dest="keys_command", required=True)
    p_export = keys_sub.add_parser("export", help="export one private key as WIF")
    p_export.add_argument("--store", required=True)
    p_export.add_argument("--index", type=int, required=True)
    p_export.add_argument("--passphrase-fd", type=int)
    p_export.set_defaults(func=cmd_keys_export)

    p_report = sub.add_parser("report", help="reporting")
    report_sub = p_report.add_subparsers(dest="report_command", required=True)
    p_dump = report_sub.add_parser("dump", help="download the report as CSV")
    p_dump.add_argument("--url", default="http://127.0.0.1:8740")
    p_dump.add_argument("--token", required=True)
    p_dump.add_argument("--from", dest="from_ts", type=int, default=0)
    p_dump.add_argument("--to", dest="to_ts", type=int, default=2**53)
    p_dump.set_defaults(func=cmd_report_dump)

    p_cash = sub.add_parser("cashout", help="sweep collected funds")
    p_cash.add_argument("--url", default="http://127.0.0.1:8740")
    p_cash.add_argument("--token", required=True, help="admin token")
    p_cash.add_argument("--dest", help="destination address (default from config)")
    p_cash.add_argument("--feerate", type=int, default=10)
    p_cash.add_argument("--force", action="store_true",
                        help="sweep even when the policy says not due")
    p_cash.add_argument("--passphrase-fd", type=int)
    p_cash.set_defaults(func=cmd_cashout)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except StillPosError as exc:
        return _fail(exc.code, str(exc), _exit_for(exc))
    except KeyboardInterrupt:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
