// Pre-sale BTC estimate for the cashier screen.
//
// Once a sale exists, every displayed BTC amount comes from the API
// verbatim. Before it exists there is nothing to fetch, so the live
// estimate mirrors the server's conversion (integer, round half away
// from zero) purely for display. It is labeled an estimate; the binding
// number is the one the API returns at sale creation.

export function estimateSats(fiatCents: number, rateCents: number): number | null {
  if (!Number.isInteger(fiatCents) || !Number.isInteger(rateCents)) {
    return null;
  }
  if (fiatCents <= 0 || rateCents <= 0) {
    return null;
  }
  const numerator = BigInt(fiatCents) * 100_000_000n * 2n + BigInt(rateCents);
  return Number(numerator / (2n * BigInt(rateCents)));
}
