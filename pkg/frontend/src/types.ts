// JSON contracts of the payment API. Amounts are integer cents/satoshis;
// the UI renders them and never does money arithmetic beyond formatting.

export interface SaleView {
  sale_id: string;
  address: string;
  fiat_cents: number;
  currency: string;
  rate_cents: number;
  btc_sats: number;
  uri: string;
  qr_payload: string;
  state: string;
  created_at: number;
  expires_at: number;
}

export interface StatusView {
  sale_id: string;
  state: string;
  overpaid: boolean;
  paid_sats: number;
  excess_sats: number;
  btc_sats: number;
  confirmations: number;
  txid: string | null;
  expires_at: number;
  updated_at: number;
  version: number;
}

export interface RateSourceView {
  source_id: string;
  price_cents: number;
  fetched_at: number;
}

export interface RatesView {
  pair: string;
  aggregate_cents: number;
  method: string;
  computed_at: number;
  age_seconds: number;
  sources: RateSourceView[];
  violations: string[];
  source_errors: Record<string, string>;
}

export interface ReportRowView {
  sale_id: string;
  created_at: number;
  note: string;
  fiat_cents: number;
  fiat_currency: string;
  btc_sats: number;
  state: string;
  overpaid: boolean;
  txid: string | null;
  explorer_url: string | null;
  address: string;
  reorg_alert: boolean;
}

export interface ReportView {
  rows: ReportRowView[];
  // present only for admin tokens
  totals_by_currency?: Record<string, number>;
  address_balances?: Record<string, number>;
  alerts?: string[];
  cashout_due?: boolean;
  cashout_reason?: string;
}

export interface ApiErrorBody {
  code: string;
  message: string;
}
