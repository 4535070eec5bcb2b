import json
import os
import signal
import socket
import subprocess
import sys
import time
import urllib.request

import pytest

CLI = [sys.executable, "-m", "stillpos.cli"]


def run_cli(args, passphrase=None, cwd=None):
    """Run the CLI, optionally feeding a passphrase over an inherited fd."""
    pass_fds = ()
    full_args = list(args)
    if passphrase is not None:
        read_fd, write_fd = os.pipe()
        os.set_inheritable(read_fd, True)
        os.write(write_fd, (passphrase + "\n").encode())
        os.close(write_fd)
        pass_fds = (read_fd,)
        full_args += ["--passphrase-fd", str(read_fd)]
    proc = subprocess.run(
        CLI + full_args,
        capture_output=True,
        text=True,
        close_fds=True,
        pass_fds=pass_fds,
        cwd=cwd,
        timeout=120,
    )
    if passphrase is not None:
        os.close(read_fd)
    return proc


class TestInit:
    def test_hot_init(self, tmp_path):
        out = str(tmp_path / "store.keys")
        proc = run_cli(["init", "--network", "regtest", "--out", out], passphrase="pw")
        assert proc.returncode == 0, proc.stderr
        assert "account public key" in proc.stdout
        assert os.path.exists(out)

    def test_existing_path_fails(self, tmp_path):
        out = str(tmp_path / "store.keys")
        run_cli(["init", "--network", "regtest", "--out", out], passphrase="pw")
        proc = run_cli(["init", "--network", "regtest", "--out", out], passphrase="pw")
        assert proc.returncode == 3
        assert json.loads(proc.stderr)["code"] == "store"

    def test_watch_only_requires_valid_xpub(self, tmp_path):
        proc = run_cli(
            [
                "init", "--network", "regtest", "--mode", "watch-only",
                "--xpub", "tpubBadChecksum111", "--out", str(tmp_path / "w.keys"),
            ]
        )
        assert proc.returncode == 3
        assert json.loads(proc.stderr)["code"] == "validation"

    def test_watch_only_from_hot_xpub(self, tmp_path):
        hot = str(tmp_path / "hot.keys")
        proc = run_cli(["init", "--network", "regtest", "--out", hot], passphrase="pw")
        xpub = proc.stdout.strip().splitlines()[-1].split(": ")[1]
        proc = run_cli(
            [
                "init", "--network", "regtest", "--mode", "watch-only",
                "--xpub", xpub, "--out", str(tmp_path / "w.keys"),
            ]
        )
        assert proc.returncode == 0, proc.stderr


class TestKeysExport:
    def test_export_after_address_allocation(self, tmp_path):
        from stillpos.keystore import KeyStore, REGTEST, decode_wif

        store_path = str(tmp_path / "s.keys")
        store = KeyStore.create_hot(
            store_path, REGTEST, bytes(range(32)), "pw", kdf_cost=(2**10, 8, 1)
        )
        store.next_address()
        proc = run_cli(["keys", "export", "--store", store_path, "--index", "0"],
                       passphrase="pw")
        assert proc.returncode == 0, proc.stderr
        wif = proc.stdout.strip().splitlines()[-1]
        key, _, compressed = decode_wif(wif)
        assert compressed
        assert int.from_bytes(key, "big") == store.private_key(0, "pw")

    def test_watch_only_export_fails(self, tmp_path):
        from stillpos.keystore import KeyStore, REGTEST

        hot = KeyStore.create_hot(
            str(tmp_path / "h.keys"), REGTEST, bytes(range(32)), "pw",
            kdf_cost=(2**10, 8, 1),
        )
        watch_path = str(tmp_path / "w.keys")
        watch = KeyStore.create_watch_only(watch_path, REGTEST, hot.account_xpub)
        watch.next_address()
        proc = run_cli(["keys", "export", "--store", watch_path, "--index", "0"],
                       passphrase="pw")
        assert proc.returncode == 4
        assert json.loads(proc.stderr)["code"] == "watch_only"


class TestDemo:
    def test_happy_path_scenario(self, tmp_path):
        script = tmp_path / "cafe.txt"
        script.write_text(
            "FUND payer 100000000\n"
            "SALE latte 450 CAD morning latte\n"
            "PAY latte exact\n"
            "MINE 1\n"
            "EXPECT latte confirmed\n"
        )
        proc = run_cli(["demo", "--scenario", str(script)])
        assert proc.returncode == 0, proc.stderr
        assert "pending -> paid_0conf" in proc.stdout
        assert "paid_0conf -> confirmed" in proc.stdout

    def test_deterministic_timeline(self, tmp_path):
        script = tmp_path / "s.txt"
        script.write_text(
            "FUND payer 100000000\nSALE a 450 CAD\nPAY a exact AS t1\n"
            "CONFLICT t1\nMINE 1\n"
        )
        first = run_cli(["demo", "--scenario", str(script)])
        second = run_cli(["demo", "--scenario", str(script)])
        assert first.stdout == second.stdout
        assert first.returncode == second.returncode == 0

    def test_double_spend_scenario(self, tmp_path):
        script = tmp_path / "ds.txt"
        script.write_text(
            "FUND payer 100000000\nSALE a 450 CAD\nPAY a exact AS t1\n"
            "CONFLICT t1 AS c1\nMINE 1 WITH c1\nEXPECT a double_spent\n"
        )
        proc = run_cli(["demo", "--scenario", str(script)])
        assert proc.returncode == 0, proc.stderr
        assert "double_spent" in proc.stdout

    def test_empty_script_is_noop(self, tmp_path):
        script = tmp_path / "empty.txt"
        script.write_text("# nothing happens\n\n")
        proc = run_cli(["demo", "--scenario", str(script)])
        assert proc.returncode == 0
        assert proc.stdout == ""

    def test_parse_error_reports_line(self, tmp_path):
        script = tmp_path / "bad.txt"
        script.write_text("FUND payer 100\nWIBBLE 3\n")
        proc = run_cli(["demo", "--scenario", str(script)])
        assert proc.returncode == 5
        assert "line 2" in json.loads(proc.stderr)["message"]

    def test_missing_scenario_file(self):
        proc = run_cli(["demo", "--scenario", "/nonexistent/path.txt"])
        assert proc.returncode == 3


class TestUsage:
    def test_no_command(self):
        proc = subprocess.run(CLI, capture_output=True, text=True)
        assert proc.returncode == 2

    def test_unknown_command(self):
        proc = subprocess.run(CLI + ["frobnicate"], capture_output=True, text=True)
        assert proc.returncode == 2


@pytest.fixture
def server_env(tmp_path):
    """init a store, write a config, start `serve`, yield base URL."""
    from stillpos.keystore import KeyStore, REGTEST

    store_path = str(tmp_path / "store.keys")
    KeyStore.create_hot(store_path, REGTEST, bytes(range(32)), "pw",
                        kdf_cost=(2**10, 8, 1))
    for name in ("a", "b"):
        (tmp_path / f"rate_{name}.json").write_text(json.dumps({"last": "300.00"}))
    with socket.socket() as probe:
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]
    config = {
        "bind": f"127.0.0.1:{port}",
        "network": "regtest",
        "keystore": {"path": "store.keys"},
        "ledger_dir": "ledger",
        "tokens": {"employee": "emp", "admin": "adm"},
        "rates": {
            "fiats": ["CAD"],
            "sources": [
                {"source_id": name, "kind": "file", "location": f"rate_{name}.json",
                 "field_path": "last", "fiat": "CAD"}
                for name in ("a", "b")
            ],
        },
        "chain": {"kind": "simnode"},
    }
    config_path = tmp_path / "pos.json"
    config_path.write_text(json.dumps(config))
    proc = subprocess.Popen(
        CLI + ["serve", "--config", str(config_path)],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True, cwd=str(tmp_path),
    )
    base = f"http://127.0.0.1:{port}"
    for _ in range(100):
        try:
            urllib.request.urlopen(base + "/v1/healthz", timeout=1)
            break
        except OSError:
            if proc.poll() is not None:
                raise AssertionError(f"serve died: {proc.stderr.read()}")
            time.sleep(0.1)
    else:
        proc.kill()
        raise AssertionError("server never came up")
    yield base, proc
    proc.send_signal(signal.SIGTERM)
    try:
        proc.wait(timeout=10)
    except subprocess.TimeoutExpired:
        proc.kill()


class TestServe:
    def test_health_and_sale_roundtrip(self, server_env):
        base, _ = server_env
        with urllib.request.urlopen(base + "/v1/healthz", timeout=5) as resp:
            assert json.loads(resp.read())["ok"] is True
        request = urllib.request.Request(
            base + "/v1/sales",
            data=json.dumps({"fiat_cents": 450, "currency": "CAD"}).encode(),
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        with urllib.request.urlopen(request, timeout=5) as resp:
            body = json.loads(resp.read())
        assert body["btc_sats"] == 1_500_000

    def test_report_dump_csv(self, server_env):
        base, _ = server_env
        proc = run_cli(["report", "dump", "--url", base, "--token", "adm"])
        assert proc.returncode == 0, proc.stderr
        assert proc.stdout.startswith("sale_id,time_utc")

    def test_report_dump_needs_valid_token(self, server_env):
        base, _ = server_env
        proc = run_cli(["report", "dump", "--url", base, "--token", "nope"])
        assert proc.returncode == 4

    def test_cashout_refused_when_not_due(self, server_env):
        base, _ = server_env
        proc = run_cli(
            ["cashout", "--url", base, "--token", "adm",
             "--dest", "mfWxJ45yp2SFn7UciZyNpvDKrzbhyfKrY8"],
            passphrase="pw",
        )
        assert proc.returncode == 5
        assert json.loads(proc.stderr)["code"] == "not_due"

    def test_missing_keystore_startup_error(self, tmp_path):
        config = {
            "bind": "127.0.0.1:0",
            "network": "regtest",
            "keystore": {"path": "missing.keys"},
            "rates": {"fiats": ["CAD"], "sources": [
                {"source_id": "a", "kind": "file", "location": "nope.json",
                 "field_path": "x", "fiat": "CAD"}]},
        }
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(config))
        proc = run_cli(["serve", "--config", str(path)])
        assert proc.returncode == 3

    def test_config_json_error_is_line_precise(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{\n  "bind": "x",,\n}')
        proc = run_cli(["serve", "--config", str(path)])
        assert proc.returncode == 3
        assert ":2:" in json.loads(proc.stderr)["message"]

    def test_port_busy_distinct_error(self, server_env, tmp_path):
        base, _ = server_env
        port = base.rsplit(":", 1)[1]
        from stillpos.keystore import KeyStore, REGTEST

        KeyStore.create_hot(str(tmp_path / "s2.keys"), REGTEST, bytes(range(32)),
                            "pw", kdf_cost=(2**10, 8, 1))
        (tmp_path / "r.json").write_text(json.dumps({"last": "300.00"}))
        config = {
            "bind": f"127.0.0.1:{port}",
            "network": "regtest",
            "keystore": {"path": "s2.keys"},
            "ledger_dir": "ledger2",
            "rates": {"fiats": ["CAD"], "quorum": 1, "sources": [
                {"source_id": "a", "kind": "file", "location": "r.json",
                 "field_path": "last", "fiat": "CAD"}]},
        }
        config_path = tmp_path / "pos2.json"
        config_path.write_text(json.dumps(config))
        proc = run_cli(["serve", "--config", str(config_path)], cwd=str(tmp_path))
        assert proc.returncode == 3
        assert json.loads(proc.stderr)["code"] == "bind"
