import { describe, expect, it } from "vitest";

import { loadSale, screenFor, stashSale } from "../src/customer.js";
import type { SaleView, StatusView } from "../src/types.js";

function status(state: string, overrides: Partial<StatusView> = {}): StatusView {
  return {
    sale_id: "sale-000001",
    state,
    overpaid: false,
    paid_sats: 0,
    excess_sats: 0,
    btc_sats: 1_500_000,
    confirmations: 0,
    txid: null,
    expires_at: 1_700_000_900,
    updated_at: 1_700_000_000,
    version: 1,
    ...overrides,
  };
}

describe("screenFor", () => {
  it("success is driven by the paid states only", () => {
    expect(screenFor(status("paid_0conf"))).toBe("success");
    expect(screenFor(status("confirmed"))).toBe("success");
    expect(screenFor(status("late_paid"))).toBe("success");
  });

  it("never infers success from anything else", () => {
    expect(screenFor(status("pending"))).toBe("waiting");
    expect(screenFor(status("underpaid"))).toBe("underpaid");
    expect(screenFor(status("expired"))).toBe("expired");
    expect(screenFor(status("double_spent"))).toBe("failed");
  });
});

describe("sale hand-off between cashier and customer pages", () => {
  it("round-trips through sessionStorage", () => {
    const sale: SaleView = {
      sale_id: "sale-000042",
      address: "mkAaf7EiyFYbyk3rZoANfDkvZVPUF3uLfW",
      fiat_cents: 450,
      currency: "CAD",
      rate_cents: 30_000,
      btc_sats: 1_500_000,
      uri: "bitcoin:mkAaf7EiyFYbyk3rZoANfDkvZVPUF3uLfW?amount=0.015",
      qr_payload: "bitcoin:mkAaf7EiyFYbyk3rZoANfDkvZVPUF3uLfW?amount=0.015",
      state: "pending",
      created_at: 1_700_000_000,
      expires_at: 1_700_000_900,
    };
    stashSale(window.sessionStorage, sale);
    expect(loadSale(window.sessionStorage, "sale-000042")).toEqual(sale);
    expect(loadSale(window.sessionStorage, "sale-000099")).toBeNull();
  });
});
