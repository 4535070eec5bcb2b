import json
import os
import threading

import pytest

from stillpos.auth import Role
from stillpos.clock import ManualClock
from stillpos.errors import (
    AuthError,
    IllegalTransition,
    StaleRates,
    UnknownSale,
    ValidationError,
)
from stillpos.keystore import KeyStore, REGTEST
from stillpos.ledger import Ledger, report_csv
from stillpos.ledger.journal import Journal, MAGIC
from stillpos.ledger.model import PaymentRecord
from stillpos.payments.model import InvoiceState
from stillpos.rates import RateBoard, SourceConfig

NOW = 1_700_000_000
LIGHT_KDF = (2**10, 8, 1)


def make_rates(tmp_path, clock, price="300.00"):
    sources = []
    for name in ("a", "b"):
        path = tmp_path / f"rate_{name}.json"
        path.write_text(json.dumps({"last": price}))
        sources.append(
            SourceConfig(source_id=name, kind="file", location=str(path),
                         field_path="last", fiat="CAD")
        )
    board = RateBoard(sources, ["CAD"], clock=clock)
    board.refresh_all()
    return board


@pytest.fixture
def clock():
    return ManualClock(NOW)


@pytest.fixture
def keystore(tmp_path):
    return KeyStore.create_hot(
        str(tmp_path / "store.keys"), REGTEST, bytes(range(32)), "pw", kdf_cost=LIGHT_KDF
    )


@pytest.fixture
def ledger(tmp_path, keystore, clock):
    rates = make_rates(tmp_path, clock)
    led = Ledger(str(tmp_path / "ledger"), keystore, rates, clock, snapshot_every=None)
    yield led
    led.close()


class TestCreateSale:
    def test_composition(self, ledger):
        sale = ledger.create_sale(450, "CAD", "latte")
        assert sale.btc_sats == 1_500_000
        assert sale.locked_rate == 30_000
        assert sale.state == InvoiceState.PENDING
        assert sale.expires_at == NOW + 900
        assert sale.address.startswith(("m", "n"))

    def test_zero_amount_rejected(self, ledger):
        with pytest.raises(ValidationError):
            ledger.create_sale(0, "CAD", "")

    def test_requires_fresh_rates(self, tmp_path, keystore, clock):
        rates = make_rates(tmp_path, clock)
        led = Ledger(str(tmp_path / "l2"), keystore, rates, clock)
        clock.tick(500)  # snapshot ages out
        with pytest.raises(StaleRates):
            led.create_sale(450, "CAD", "")
        led.close()

    def test_concurrent_sales_distinct(self, ledger):
        results = []
        errors = []

        def worker():
            try:
                results.append(ledger.create_sale(450, "CAD", ""))
            except Exception as exc:  # pragma: no cover
                errors.append(exc)

        threads = [threading.Thread(target=worker) for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert not errors
        assert len({s.sale_id for s in results}) == 8
        assert len({s.address for s in results}) == 8

    def test_unknown_currency(self, ledger):
        with pytest.raises(ValidationError):
            ledger.create_sale(450, "EUR", "")


class TestTransitions:
    def test_happy_transition_with_evidence(self, ledger):
        sale = ledger.create_sale(450, "CAD", "")
        evidence = PaymentRecord("t1", sale.sale_id, 1_500_000, NOW)
        ledger.apply_state(sale.sale_id, InvoiceState.PAID_0CONF, evidence,
                           reason="seen", progress={"paid_sats": 1_500_000,
                                                    "matched_txid": "t1"})
        stored = ledger.sale(sale.sale_id)
        assert stored.state == InvoiceState.PAID_0CONF
        assert stored.paid_sats == 1_500_000
        assert ledger.payment("t1", sale.sale_id) is not None
        log = ledger.transitions(sale.sale_id)
        assert len(log) == 1
        assert (log[0].from_state, log[0].to_state) == (
            InvoiceState.PENDING, InvoiceState.PAID_0CONF
        )

    def test_illegal_transition_rejected(self, ledger):
        sale = ledger.create_sale(450, "CAD", "")
        ledger.apply_state(sale.sale_id, InvoiceState.EXPIRED)
        with pytest.raises(IllegalTransition):
            ledger.apply_state(sale.sale_id, InvoiceState.PAID_0CONF)

    def test_unknown_sale(self, ledger):
        with pytest.raises(UnknownSale):
            ledger.apply_state("sale-999999", InvoiceState.EXPIRED)

    def test_locked_price_survives_rate_changes(self, tmp_path, keystore, clock):
        rates = make_rates(tmp_path, clock)
        led = Ledger(str(tmp_path / "l3"), keystore, rates, clock, snapshot_every=None)
        sale = led.create_sale(450, "CAD", "")
        before = (sale.fiat_cents, sale.locked_rate, sale.btc_sats)
        # rate moves +50%
        for name in ("a", "b"):
            (tmp_path / f"rate_{name}.json").write_text(json.dumps({"last": "450.00"}))
        rates.refresh_all()
        led.apply_state(sale.sale_id, InvoiceState.EXPIRED)
        stored = led.sale(sale.sale_id)
        assert (stored.fiat_cents, stored.locked_rate, stored.btc_sats) == before
        led.close()


class TestReport:
    def _paid_sale(self, ledger, cents, note=""):
        sale = ledger.create_sale(cents, "CAD", note)
        ledger.apply_state(
            sale.sale_id, InvoiceState.PAID_0CONF,
            PaymentRecord(f"t-{sale.sale_id}", sale.sale_id, sale.btc_sats, NOW),
            progress={"paid_sats": sale.btc_sats, "matched_txid": f"t-{sale.sale_id}"},
        )
        return sale

    def test_admin_totals(self, ledger):
        self._paid_sale(ledger, 450)
        self._paid_sale(ledger, 500)
        ledger.create_sale(999, "CAD", "unpaid, not totaled")
        result = ledger.report(0, NOW + 1000, Role.ADMIN)
        assert result.totals_by_currency == {"CAD": 950}
        assert len(result.rows) == 3

    def test_accounting_identity(self, ledger):
        # totals = sum of locked fiat over exactly {paid_0conf, confirmed}
        paid = self._paid_sale(ledger, 450)
        confirmed = self._paid_sale(ledger, 500)
        ledger.apply_state(confirmed.sale_id, InvoiceState.CONFIRMED)
        expired = ledger.create_sale(100, "CAD", "")
        ledger.apply_state(expired.sale_id, InvoiceState.EXPIRED)
        late = ledger.create_sale(200, "CAD", "")
        ledger.apply_state(late.sale_id, InvoiceState.EXPIRED)
        ledger.apply_state(late.sale_id, InvoiceState.LATE_PAID)
        result = ledger.report(0, NOW + 1000, Role.ADMIN)
        expected = sum(
            s.fiat_cents
            for s in ledger.sales()
            if s.state in (InvoiceState.PAID_0CONF, InvoiceState.CONFIRMED)
        )
        assert result.totals_by_currency == {"CAD": expected} == {"CAD": 950}

    def test_employee_no_totals_and_24h_window(self, tmp_path, keystore, clock):
        rates = make_rates(tmp_path, clock)
        led = Ledger(str(tmp_path / "l4"), keystore, rates, clock, snapshot_every=None)
        old_sale = led.create_sale(100, "CAD", "old")
        clock.tick(3 * 86_400)
        rates.refresh_all()
        recent = led.create_sale(200, "CAD", "recent")
        result = led.report(0, clock.now(), Role.EMPLOYEE)
        assert result.totals_by_currency is None
        assert [r.sale_id for r in result.rows] == [recent.sale_id]
        admin = led.report(0, clock.now(), Role.ADMIN)
        assert {r.sale_id for r in admin.rows} == {old_sale.sale_id, recent.sale_id}
        led.close()

    def test_public_role_rejected(self, ledger):
        with pytest.raises(AuthError):
            ledger.report(0, NOW, Role.PUBLIC)

    def test_empty_range(self, ledger):
        self._paid_sale(ledger, 450)
        result = ledger.report(0, 10, Role.ADMIN)
        assert result.rows == ()
        assert result.totals_by_currency == {}

    def test_csv_has_header_and_rows(self, ledger):
        self._paid_sale(ledger, 450, note="latte, large")
        text = report_csv(ledger.report(0, NOW + 10, Role.ADMIN))
        lines = text.strip().splitlines()
        assert lines[0].startswith("sale_id,time_utc,note,amount_cents")
        assert len(lines) == 2
        assert '"latte, large"' in lines[1]

    def test_csv_empty_is_header_only(self, ledger):
        text = report_csv(ledger.report(0, 10, Role.ADMIN))
        assert len(text.strip().splitlines()) == 1

    def test_double_spend_flagged(self, ledger):
        sale = self._paid_sale(ledger, 450)
        ledger.apply_state(sale.sale_id, InvoiceState.DOUBLE_SPENT,
                           progress={"paid_sats": 0})
        result = ledger.report(0, NOW + 10, Role.ADMIN)
        assert any("double spend" in alert for alert in result.alerts)


class TestRecovery:
    def test_write_kill_recover(self, tmp_path, keystore, clock):
        rates = make_rates(tmp_path, clock)
        led = Ledger(str(tmp_path / "l5"), keystore, rates, clock, snapshot_every=None)
        ids = [led.create_sale(100 + i, "CAD", f"sale {i}").sale_id for i in range(20)]
        led.close()  # simulates process death (no special shutdown logic)
        recovered = Ledger(str(tmp_path / "l5"), keystore, rates, clock)
        assert [s.sale_id for s in sorted(recovered.sales(), key=lambda s: s.sale_id)] == ids
        assert not recovered.recovered_with_truncation
        recovered.close()

    def test_truncated_journal_recovers_prefix(self, tmp_path, keystore, clock):
        rates = make_rates(tmp_path, clock)
        path = str(tmp_path / "l6")
        led = Ledger(path, keystore, rates, clock, snapshot_every=None)
        for i in range(5):
            led.create_sale(100 + i, "CAD", "")
        led.close()
        journal_file = os.path.join(path, "journal.log")
        size = os.path.getsize(journal_file)
        with open(journal_file, "r+b") as fh:
            fh.truncate(size - 7)  # mid-record
        recovered = Ledger(path, keystore, rates, clock)
        assert len(recovered.sales()) == 4
        assert recovered.recovered_with_truncation
        recovered.close()

    def test_recovery_idempotent(self, tmp_path, keystore, clock):
        rates = make_rates(tmp_path, clock)
        path = str(tmp_path / "l7")
        led = Ledger(path, keystore, rates, clock, snapshot_every=None)
        sale = led.create_sale(450, "CAD", "x")
        led.apply_state(sale.sale_id, InvoiceState.EXPIRED)
        led.close()
        first = Ledger(path, keystore, rates, clock)
        state_one = [s.to_json() for s in first.sales()]
        first.close()
        second = Ledger(path, keystore, rates, clock)
        state_two = [s.to_json() for s in second.sales()]
        second.close()
        assert state_one == state_two

    def test_snapshot_compaction_preserves_state(self, tmp_path, keystore, clock):
        rates = make_rates(tmp_path, clock)
        path = str(tmp_path / "l8")
        led = Ledger(path, keystore, rates, clock, snapshot_every=None)
        for i in range(10):
            led.create_sale(100 + i, "CAD", "")
        led.compact()
        post_compact = led.create_sale(999, "CAD", "after snapshot")
        led.close()
        recovered = Ledger(path, keystore, rates, clock)
        assert len(recovered.sales()) == 11
        assert recovered.sale(post_compact.sale_id).fiat_cents == 999
        recovered.close()

    def test_auto_snapshot_every_n_records(self, tmp_path, keystore, clock):
        rates = make_rates(tmp_path, clock)
        path = str(tmp_path / "l9")
        led = Ledger(path, keystore, rates, clock, snapshot_every=5)
        for i in range(12):
            led.create_sale(100 + i, "CAD", "")
        led.close()
        assert os.path.exists(os.path.join(path, "snapshot.json"))
        recovered = Ledger(path, keystore, rates, clock)
        assert len(recovered.sales()) == 12
        recovered.close()


class TestJournalFraming:
    def test_magic_written(self, tmp_path):
        journal = Journal(str(tmp_path / "j1"))
        with open(os.path.join(str(tmp_path / "j1"), "journal.log"), "rb") as fh:
            assert fh.read(8) == MAGIC
        journal.close()

    def test_replay_same_bytes_same_records(self, tmp_path):
        journal = Journal(str(tmp_path / "j2"))
        for i in range(5):
            journal.append(1, {"n": i})
        records_a, _ = journal.replay()
        records_b, _ = journal.replay()
        assert records_a == records_b
        journal.close()

    def test_corrupt_crc_stops_replay(self, tmp_path):
        directory = str(tmp_path / "j3")
        journal = Journal(directory)
        journal.append(1, {"n": 0})
        journal.append(1, {"n": 1})
        journal.close()
        path = os.path.join(directory, "journal.log")
        with open(path, "r+b") as fh:
            fh.seek(-1, os.SEEK_END)
            last = fh.read(1)
            fh.seek(-1, os.SEEK_END)
            fh.write(bytes([last[0] ^ 0xFF]))
        journal = Journal(directory)
        records, truncated = journal.replay()
        assert [p for _, _, p in records] == [{"n": 0}]
        assert truncated
        journal.close()
