import { ApiClient } from "./api.js";
import { formatCents, formatCountdown, formatRate, formatSats } from "./money.js";
import { StatusPoller } from "./poller.js";
import type { SaleView, StatusView } from "./types.js";

export interface CustomerElements {
  amountDisplay: HTMLElement;
  fiatDisplay: HTMLElement;
  rateDisplay: HTMLElement;
  addressDisplay: HTMLElement;
  countdownDisplay: HTMLElement;
  stateScreen: HTMLElement; // full-screen overlay for terminal outcomes
  paidDetail: HTMLElement;
}

const SALE_STORE_PREFIX = "stillpos.sale.";

export function stashSale(storage: Storage, sale: SaleView): void {
  storage.setItem(SALE_STORE_PREFIX + sale.sale_id, JSON.stringify(sale));
}

export function loadSale(storage: Storage, saleId: string): SaleView | null {
  const raw = storage.getItem(SALE_STORE_PREFIX + saleId);
  return raw ? (JSON.parse(raw) as SaleView) : null;
}

export type ScreenKind = "waiting" | "success" | "expired" | "underpaid" | "failed";

/** What the customer screen should show for a given status. Success is a
 *  state change from the server — never inferred from elapsed time. */
export function screenFor(status: StatusView): ScreenKind {
  switch (status.state) {
    case "paid_0conf":
    case "confirmed":
    case "late_paid":
      return "success";
    case "expired":
      return "expired";
    case "underpaid":
      return "underpaid";
    case "double_spent":
      return "failed";
    default:
      return "waiting";
  }
}

export class CustomerController {
  poller: StatusPoller;
  lastScreen: ScreenKind = "waiting";
  private countdownTimer: unknown = null;

  constructor(
    api: ApiClient,
    private sale: SaleView,
    private el: CustomerElements,
    pollIntervalMs = 2000,
    private now: () => number = () => Math.floor(Date.now() / 1000),
  ) {
    this.el.amountDisplay.textContent = formatSats(sale.btc_sats);
    this.el.fiatDisplay.textContent = formatCents(sale.fiat_cents, sale.currency);
    this.el.rateDisplay.textContent = formatRate(sale.rate_cents, sale.currency);
    this.el.addressDisplay.textContent = sale.address;
    this.poller = new StatusPoller(
      (version) =>
        version >= 0
          ? api.status(sale.sale_id, { wait: 20, version })
          : api.status(sale.sale_id),
      (status) => this.apply(status),
      { intervalMs: pollIntervalMs },
    );
  }

  start(): void {
    this.renderCountdown();
    this.countdownTimer = setInterval(() => this.renderCountdown(), 1000);
    this.poller.start();
  }

  stop(): void {
    this.poller.stop();
    if (this.countdownTimer !== null) {
      clearInterval(this.countdownTimer as number);
    }
  }

  renderCountdown(): void {
    const left = this.sale.expires_at - this.now();
    this.el.countdownDisplay.textContent = formatCountdown(left);
  }

  apply(status: StatusView): void {
    const screen = screenFor(status);
    this.lastScreen = screen;
    switch (screen) {
      case "success": {
        const confirmed = status.state !== "paid_0conf";
        this.el.stateScreen.className = "screen success";
        this.el.stateScreen.textContent = confirmed ? "Payment confirmed" : "Paid ✓";
        this.el.paidDetail.textContent = status.overpaid
          ? `received ${formatSats(status.paid_sats)} (overpaid)`
          : `received ${formatSats(status.paid_sats)}`;
        break;
      }
      case "expired":
        this.el.stateScreen.className = "screen expired";
        this.el.stateScreen.textContent = "Invoice expired";
        break;
      case "underpaid":
        this.el.stateScreen.className = "screen underpaid";
        this.el.stateScreen.textContent = "Partial payment received";
        this.el.paidDetail.textContent =
          `paid ${formatSats(status.paid_sats)} of ${formatSats(status.btc_sats)}`;
        break;
      case "failed":
        this.el.stateScreen.className = "screen failed";
        this.el.stateScreen.textContent = "Payment cancelled (double spend)";
        break;
      default:
        this.el.stateScreen.className = "screen waiting";
        this.el.stateScreen.textContent = "Waiting for payment…";
    }
  }
}
