import type {
  ApiErrorBody,
  RatesView,
  ReportView,
  SaleView,
  StatusView,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = typeof fetch;

/** Thin typed client. Credentials travel in the Authorization header
 *  only — never in a URL. */
export class ApiClient {
  constructor(
    private base: string = "",
    private token: string | null = null,
    private fetchImpl: FetchLike = fetch,
  ) {}

  withToken(token: string): ApiClient {
    return new ApiClient(this.base, token, this.fetchImpl);
  }

  private headers(json: boolean, accept?: string): Record<string, string> {
    const headers: Record<string, string> = {};
    if (json) {
      headers["Content-Type"] = "application/json";
    }
    if (accept) {
      headers["Accept"] = accept;
    }
    if (this.token) {
      headers["Authorization"] = `Bearer ${this.token}`;
    }
    return headers;
  }

  private async decode<T>(response: Response): Promise<T> {
    if (!response.ok) {
      let body: ApiErrorBody = { code: "http", message: `HTTP ${response.status}` };
      try {
        body = (await response.json()) as ApiErrorBody;
      } catch {
        // keep the fallback body
      }
      throw new ApiError(response.status, body.code, body.message);
    }
    return (await response.json()) as T;
  }

  async createSale(fiatCents: number, currency: string, note: string): Promise<SaleView> {
    const response = await this.fetchImpl(`${this.base}/v1/sales`, {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify({ fiat_cents: fiatCents, currency, note }),
    });
    return this.decode<SaleView>(response);
  }

  async status(
    saleId: string,
    options: { wait?: number; version?: number } = {},
  ): Promise<StatusView> {
    const params = new URLSearchParams();
    if (options.wait !== undefined) {
      params.set("wait", String(options.wait));
    }
    if (options.version !== undefined) {
      params.set("version", String(options.version));
    }
    const query = params.size > 0 ? `?${params.toString()}` : "";
    const response = await this.fetchImpl(
      `${this.base}/v1/sales/${encodeURIComponent(saleId)}/status${query}`,
      { headers: this.headers(false) },
    );
    return this.decode<StatusView>(response);
  }

  async rates(fiat: string): Promise<RatesView> {
    const response = await this.fetchImpl(
      `${this.base}/v1/rates?pair=BTC-${encodeURIComponent(fiat)}`,
      { headers: this.headers(false) },
    );
    return this.decode<RatesView>(response);
  }

  async report(fromTs: number, toTs: number): Promise<ReportView> {
    const response = await this.fetchImpl(
      `${this.base}/v1/report?from=${fromTs}&to=${toTs}`,
      { headers: this.headers(false) },
    );
    return this.decode<ReportView>(response);
  }

  async reportCsv(fromTs: number, toTs: number): Promise<string> {
    const response = await this.fetchImpl(
      `${this.base}/v1/report?from=${fromTs}&to=${toTs}`,
      { headers: this.headers(false, "text/csv") },
    );
    if (!response.ok) {
      throw new ApiError(response.status, "http", `HTTP ${response.status}`);
    }
    return response.text();
  }
}
