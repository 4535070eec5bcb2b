import { ApiClient, ApiError } from "./api.js";
import { formatCents, formatSats } from "./money.js";
import type { ReportView } from "./types.js";

export interface ReportElements {
  tokenInput: HTMLInputElement;
  loginButton: HTMLButtonElement;
  loginBox: HTMLElement;
  reportBox: HTMLElement;
  tableBody: HTMLElement;
  totalsRow: HTMLElement;
  cashoutBanner: HTMLElement;
  alertsBox: HTMLElement;
  errorBox: HTMLElement;
}

export function renderReport(view: ReportView, el: ReportElements, doc: Document): void {
  el.tableBody.replaceChildren();
  for (const row of view.rows) {
    const tr = doc.createElement("tr");
    const cells = [
      new Date(row.created_at * 1000).toISOString().replace("T", " ").slice(0, 16),
      row.note,
      formatCents(row.fiat_cents, row.fiat_currency), // Sale Dollar Amount, locked
      formatSats(row.btc_sats),
      row.overpaid ? `${row.state} (overpaid)` : row.state,
    ];
    for (const text of cells) {
      const td = doc.createElement("td");
      td.textContent = text;
      tr.appendChild(td);
    }
    const txCell = doc.createElement("td");
    if (row.txid && row.explorer_url) {
      const link = doc.createElement("a");
      link.href = row.explorer_url;
      link.textContent = `${row.txid.slice(0, 12)}…`;
      link.target = "_blank";
      link.rel = "noopener";
      txCell.appendChild(link);
    } else {
      txCell.textContent = row.txid ? row.txid.slice(0, 12) + "…" : "—";
    }
    tr.appendChild(txCell);
    el.tableBody.appendChild(tr);
  }

  // the API omits totals for employee tokens; render only what arrived
  if (view.totals_by_currency !== undefined) {
    const parts = Object.entries(view.totals_by_currency).map(
      ([currency, cents]) => formatCents(cents, currency),
    );
    el.totalsRow.textContent = parts.length
      ? `Total (paid sales): ${parts.join(" + ")}`
      : "Total (paid sales): $0.00";
    el.totalsRow.hidden = false;
  } else {
    el.totalsRow.textContent = "";
    el.totalsRow.hidden = true;
  }

  if (view.cashout_due) {
    el.cashoutBanner.textContent =
      `Cash-out due: ${view.cashout_reason ?? "threshold reached"}`;
    el.cashoutBanner.hidden = false;
  } else {
    el.cashoutBanner.hidden = true;
  }

  const alerts = view.alerts ?? [];
  el.alertsBox.replaceChildren();
  for (const alert of alerts) {
    const div = doc.createElement("div");
    div.textContent = `⚠ ${alert}`;
    el.alertsBox.appendChild(div);
  }
}

export class ReportController {
  client: ApiClient | null = null;

  constructor(
    private api: ApiClient,
    private el: ReportElements,
    private doc: Document,
    private rangeDays = 30,
    private now: () => number = () => Math.floor(Date.now() / 1000),
  ) {
    el.loginButton.addEventListener("click", (event) => {
      event.preventDefault();
      void this.login();
    });
  }

  /** The token stays in memory; it is sent as a header and never becomes
   *  part of any URL or storage. */
  async login(): Promise<ReportView | null> {
    const token = this.el.tokenInput.value.trim();
    if (!token) {
      this.showError("Enter your access token.");
      return null;
    }
    const client = this.api.withToken(token);
    try {
      const to = this.now();
      const view = await client.report(to - this.rangeDays * 86_400, to);
      this.client = client;
      this.el.tokenInput.value = "";
      this.el.loginBox.hidden = true;
      this.el.reportBox.hidden = false;
      this.el.errorBox.hidden = true;
      renderReport(view, this.el, this.doc);
      return view;
    } catch (error) {
      this.showError(
        error instanceof ApiError && error.status === 401
          ? "That token was not accepted."
          : "Could not load the report.",
      );
      return null;
    }
  }

  showError(message: string): void {
    this.el.errorBox.textContent = message;
    this.el.errorBox.hidden = false;
  }
}
