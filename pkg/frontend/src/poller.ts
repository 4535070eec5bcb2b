import type { StatusView } from "./types.js";

// Customers get told a sale is done by a state change from the server,
// never by the page guessing from elapsed time.

export const TERMINAL_STATES = new Set([
  "confirmed",
  "double_spent",
  "expired",
  "late_paid",
]);

export type StatusFetcher = (knownVersion: number) => Promise<StatusView>;

export interface PollerOptions {
  intervalMs?: number;
  /** injectable for tests */
  schedule?: (fn: () => void, ms: number) => unknown;
  cancel?: (handle: unknown) => void;
}

export class StatusPoller {
  private version = -1;
  private stopped = false;
  private handle: unknown = null;
  private readonly intervalMs: number;
  private readonly schedule: (fn: () => void, ms: number) => unknown;
  private readonly cancel: (handle: unknown) => void;

  constructor(
    private fetchStatus: StatusFetcher,
    private onChange: (status: StatusView) => void,
    options: PollerOptions = {},
  ) {
    this.intervalMs = options.intervalMs ?? 2000;
    this.schedule = options.schedule ?? ((fn, ms) => setTimeout(fn, ms));
    this.cancel = options.cancel ?? ((h) => clearTimeout(h as number));
  }

  start(): void {
    void this.tick();
  }

  stop(): void {
    this.stopped = true;
    if (this.handle !== null) {
      this.cancel(this.handle);
      this.handle = null;
    }
  }

  /** One poll pass; exposed for tests. Reschedules itself unless the
   *  sale reached a terminal state. */
  async tick(): Promise<void> {
    if (this.stopped) {
      return;
    }
    try {
      const status = await this.fetchStatus(this.version);
      if (this.stopped) {
        return;
      }
      if (status.version !== this.version) {
        this.version = status.version;
        this.onChange(status);
      }
      if (TERMINAL_STATES.has(status.state)) {
        this.stop();
        return;
      }
    } catch {
      // transient failure: keep polling at the same cadence
    }
    if (!this.stopped) {
      this.handle = this.schedule(() => void this.tick(), this.intervalMs);
    }
  }
}
