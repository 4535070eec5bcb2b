import { ApiClient, ApiError } from "./api.js";
import { estimateSats } from "./estimate.js";
import { formatCents, formatRate, formatSats, parseDollarsToCents } from "./money.js";
import type { RatesView, SaleView } from "./types.js";

export interface CashierElements {
  amountInput: HTMLInputElement;
  noteInput: HTMLInputElement;
  rateDisplay: HTMLElement;
  estimateDisplay: HTMLElement;
  alertBox: HTMLElement;
  payButton: HTMLButtonElement;
  helpPanel?: HTMLElement;
}

export interface CashierOptions {
  currencies?: string[];
  onSaleCreated: (sale: SaleView) => void;
  rateRefreshMs?: number;
}

/** Cashier screen: price in, note, live rate + BTC estimate, one Pay
 *  button. Invalid input never leaves the page — the request only fires
 *  once the amount parses. */
export class CashierController {
  currencyIndex = 0;
  rates: RatesView | null = null;
  rateStale = true;
  private currencies: string[];
  private timer: unknown = null;

  constructor(
    private api: ApiClient,
    private el: CashierElements,
    private options: CashierOptions,
  ) {
    this.currencies = options.currencies ?? ["CAD", "USD"];
    el.amountInput.addEventListener("input", () => this.refreshEstimate());
    el.rateDisplay.addEventListener("click", () => void this.toggleCurrency());
    el.payButton.addEventListener("click", (event) => {
      event.preventDefault();
      void this.submit();
    });
  }

  get currency(): string {
    return this.currencies[this.currencyIndex];
  }

  async start(): Promise<void> {
    await this.refreshRates();
    const interval = this.options.rateRefreshMs ?? 15_000;
    this.timer = setInterval(() => void this.refreshRates(), interval);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer as number);
    }
  }

  /** Clicking the price cycles the displayed currency; it never touches
   *  a sale that already exists. */
  async toggleCurrency(): Promise<void> {
    this.currencyIndex = (this.currencyIndex + 1) % this.currencies.length;
    await this.refreshRates();
  }

  async refreshRates(): Promise<void> {
    try {
      this.rates = await this.api.rates(this.currency);
      this.rateStale = false;
      this.el.rateDisplay.textContent = formatRate(
        this.rates.aggregate_cents,
        this.currency,
      );
      this.clearAlert();
    } catch (error) {
      this.rateStale = true;
      this.el.rateDisplay.textContent = "rate unavailable";
      this.showAlert(
        error instanceof ApiError && error.code === "stale_rates"
          ? "Exchange rate is stale — sales are paused until it refreshes."
          : "Cannot reach the rate service.",
      );
    }
    this.refreshEstimate();
  }

  refreshEstimate(): void {
    const cents = parseDollarsToCents(this.el.amountInput.value);
    if (cents === null || this.rates === null || this.rateStale) {
      this.el.estimateDisplay.textContent = "—";
      return;
    }
    const sats = estimateSats(cents, this.rates.aggregate_cents);
    this.el.estimateDisplay.textContent =
      sats === null ? "—" : `≈ ${formatSats(sats)}`;
  }

  /** Returns the created sale, or null when validation blocked the call. */
  async submit(): Promise<SaleView | null> {
    const cents = parseDollarsToCents(this.el.amountInput.value);
    if (cents === null) {
      this.showAlert("Enter the price in dollars, like 4.50.");
      return null;
    }
    if (this.rateStale) {
      this.showAlert("Exchange rate is stale — sales are paused.");
      return null;
    }
    this.el.payButton.disabled = true;
    try {
      const sale = await this.api.createSale(
        cents,
        this.currency,
        this.el.noteInput.value.trim(),
      );
      this.clearAlert();
      this.options.onSaleCreated(sale);
      return sale;
    } catch (error) {
      this.showAlert(
        error instanceof ApiError
          ? `Sale refused: ${error.message}`
          : "Network problem — try again.",
      );
      return null;
    } finally {
      this.el.payButton.disabled = false;
    }
  }

  showAlert(message: string): void {
    this.el.alertBox.textContent = message;
    this.el.alertBox.hidden = false;
  }

  clearAlert(): void {
    this.el.alertBox.textContent = "";
    this.el.alertBox.hidden = true;
  }

  displayAmount(cents: number): string {
    return formatCents(cents, this.currency);
  }
}
