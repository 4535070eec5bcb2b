// Formatting and input parsing. String manipulation only: cents and sats
// stay integers end to end, and nothing here converts between currencies.

export function formatCents(cents: number, currency: string): string {
  const sign = cents < 0 ? "-" : "";
  const abs = Math.abs(cents);
  const whole = Math.floor(abs / 100);
  const frac = String(abs % 100).padStart(2, "0");
  return `${sign}$${whole}.${frac} ${currency}`;
}

export function formatSats(sats: number): string {
  const whole = Math.floor(sats / 100_000_000);
  const frac = String(sats % 100_000_000).padStart(8, "0").replace(/0+$/, "");
  return frac ? `${whole}.${frac} BTC` : `${whole} BTC`;
}

export function formatRate(rateCents: number, currency: string): string {
  return `${formatCents(rateCents, currency)} / BTC`;
}

const AMOUNT_PATTERN = /^\s*(\d{1,7})(?:[.,](\d{1,2}))?\s*$/;

/** Cashier price input -> integer cents, or null when it isn't a price.
 *  "4.50" -> 450, "4" -> 400, "4,5" -> 450, "abc"/".5"/"-1"/"4.555" -> null. */
export function parseDollarsToCents(text: string): number | null {
  const match = AMOUNT_PATTERN.exec(text);
  if (match === null) {
    return null;
  }
  const whole = parseInt(match[1], 10);
  const fracText = (match[2] ?? "").padEnd(2, "0");
  const cents = whole * 100 + (fracText ? parseInt(fracText, 10) : 0);
  return cents > 0 ? cents : null;
}

export function formatCountdown(secondsLeft: number): string {
  if (secondsLeft <= 0) {
    return "0:00";
  }
  const minutes = Math.floor(secondsLeft / 60);
  const seconds = String(secondsLeft % 60).padStart(2, "0");
  return `${minutes}:${seconds}`;
}
