/**
 * Newline-delimited JSON event stream reader.
 *
 * The service emits state snapshots at up to 20 Hz on GET /events; this
 * subscribes with fetch streaming and hands each parsed snapshot to the
 * callback until `close()` is called or the server ends the stream.
 */

import type { StateSnapshot } from './types.js';

export interface EventStreamOptions {
  /** Snapshot interval hint in ms (server clamps to >= 50). */
  intervalMs?: number;
  /** Stop after this many snapshots (0 = unbounded). */
  limit?: number;
  fetchFn?: typeof fetch;
}

export class EventStream {
  private controller = new AbortController();
  private finished: Promise<void>;

  constructor(
    baseUrl: string,
    onSnapshot: (snap: StateSnapshot) => void,
    options: EventStreamOptions = {},
  ) {
    const fetchFn = options.fetchFn ?? fetch;
    const params = new URLSearchParams();
    if (options.intervalMs) params.set('interval_ms', String(options.intervalMs));
    if (options.limit) params.set('limit', String(options.limit));
    const url = `${baseUrl}/events${params.toString() ? `?${params}` : ''}`;
    this.finished = (async () => {
      const resp = await fetchFn(url, { signal: this.controller.signal });
      if (!resp.ok || !resp.body) {
        throw new Error(`event stream failed: ${resp.status}`);
      }
      const reader = resp.body.getReader();
      const decoder = new TextDecoder();
      let buffer = '';
      try {
        for (;;) {
          const { done, value } = await reader.read();
          if (done) break;
          buffer += decoder.decode(value, { stream: true });
          let newline = buffer.indexOf('\n');
          while (newline >= 0) {
            const line = buffer.slice(0, newline).trim();
            buffer = buffer.slice(newline + 1);
            if (line) onSnapshot(JSON.parse(line) as StateSnapshot);
            newline = buffer.indexOf('\n');
          }
        }
      } catch (err) {
        if (!this.controller.signal.aborted) throw err;
      }
    })();
  }

  close(): void {
    this.controller.abort();
  }

  /** Resolves when the stream ends (server limit reached or closed). */
  done(): Promise<void> {
    return this.finished.catch((err) => {
      if (!this.controller.signal.aborted) throw err;
    });
  }
}
