import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { renderReport, ReportController, type ReportElements } from "../src/report.js";
import type { ReportView } from "../src/types.js";

const ROW = {
  sale_id: "sale-000001",
  created_at: 1_700_000_000,
  note: "latte",
  fiat_cents: 450,
  fiat_currency: "CAD",
  btc_sats: 1_500_000,
  state: "confirmed",
  overpaid: false,
  txid: "ab".repeat(32),
  explorer_url: `https://explorer.example/tx/${"ab".repeat(32)}`,
  address: "mkAaf7EiyFYbyk3rZoANfDkvZVPUF3uLfW",
  reorg_alert: false,
};

function buildElements(): ReportElements {
  document.body.innerHTML = `
    <div id="login">
      <input id="token" type="password">
      <div id="error" hidden></div>
      <button id="enter"></button>
    </div>
    <div id="report" hidden>
      <div id="cashout" hidden></div>
      <div id="alerts"></div>
      <table><tbody id="rows"></tbody></table>
      <div id="totals" hidden></div>
    </div>
  `;
  return {
    tokenInput: document.getElementById("token") as HTMLInputElement,
    loginButton: document.getElementById("enter") as HTMLButtonElement,
    loginBox: document.getElementById("login")!,
    reportBox: document.getElementById("report")!,
    tableBody: document.getElementById("rows")!,
    totalsRow: document.getElementById("totals")!,
    cashoutBanner: document.getElementById("cashout")!,
    alertsBox: document.getElementById("alerts")!,
    errorBox: document.getElementById("error")!,
  };
}

describe("renderReport", () => {
  let el: ReportElements;

  beforeEach(() => {
    el = buildElements();
  });

  it("admin payload shows totals and the cashout banner", () => {
    const view: ReportView = {
      rows: [ROW],
      totals_by_currency: { CAD: 950 },
      address_balances: {},
      alerts: ["sale-000002: double spend detected"],
      cashout_due: true,
      cashout_reason: "un-swept paid total 10050 cents reached threshold 10000",
    };
    renderReport(view, el, document);
    expect(el.totalsRow.hidden).toBe(false);
    expect(el.totalsRow.textContent).toContain("$9.50 CAD");
    expect(el.cashoutBanner.hidden).toBe(false);
    expect(el.cashoutBanner.textContent).toContain("Cash-out due");
    expect(el.alertsBox.textContent).toContain("double spend");
  });

  it("employee payload renders rows but no totals", () => {
    renderReport({ rows: [ROW] }, el, document);
    expect(el.tableBody.children.length).toBe(1);
    expect(el.totalsRow.hidden).toBe(true);
    expect(el.totalsRow.textContent).toBe("");
    expect(el.cashoutBanner.hidden).toBe(true);
  });

  it("txid cell links to the configured explorer", () => {
    renderReport({ rows: [ROW] }, el, document);
    const link = el.tableBody.querySelector("a")!;
    expect(link.getAttribute("href")).toBe(ROW.explorer_url);
  });

  it("locked fiat renders as the Sale Dollar Amount column", () => {
    renderReport({ rows: [ROW] }, el, document);
    const cells = el.tableBody.querySelectorAll("td");
    expect(cells[2].textContent).toBe("$4.50 CAD");
    expect(cells[3].textContent).toBe("0.015 BTC");
  });
});

describe("ReportController", () => {
  it("sends the token as a header, never in the URL", async () => {
    const el = buildElements();
    const fetchSpy = vi.fn(async (url: RequestInfo | URL, init?: RequestInit) => {
      const headers = (init?.headers ?? {}) as Record<string, string>;
      expect(String(url)).not.toContain("secret-token");
      expect(headers["Authorization"]).toBe("Bearer secret-token");
      return new Response(JSON.stringify({ rows: [] }), {
        status: 200,
        headers: { "Content-Type": "application/json" },
      });
    });
    const controller = new ReportController(
      new ApiClient("", null, fetchSpy as unknown as typeof fetch),
      el,
      document,
    );
    el.tokenInput.value = "secret-token";
    const view = await controller.login();
    expect(view).not.toBeNull();
    expect(fetchSpy).toHaveBeenCalled();
    expect(el.reportBox.hidden).toBe(false);
    expect(el.tokenInput.value).toBe(""); // cleared after use
  });

  it("bad token shows an error and stays on the login box", async () => {
    const el = buildElements();
    const fetchSpy = vi.fn(async () =>
      new Response(JSON.stringify({ code: "unauthorized", message: "invalid token" }), {
        status: 401,
        headers: { "Content-Type": "application/json" },
      }),
    );
    const controller = new ReportController(
      new ApiClient("", null, fetchSpy as unknown as typeof fetch),
      el,
      document,
    );
    el.tokenInput.value = "wrong";
    const view = await controller.login();
    expect(view).toBeNull();
    expect(el.errorBox.hidden).toBe(false);
    expect(el.loginBox.hidden).toBe(false);
  });
});
