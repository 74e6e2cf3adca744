/**
 * Typed client for the coilboard control service.
 *
 * Every method maps one-to-one onto a service endpoint; the UI holds no
 * authoritative state of its own and can always be rebuilt from these calls.
 */

import type {
  BindingDoc,
  ConfigurationDoc,
  GridDoc,
  HistoryRecord,
  PlanSummary,
  SequenceDoc,
  SnapResult,
  StateSnapshot,
} from './types.js';

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(typeof detail === 'string' ? detail : JSON.stringify(detail));
  }

  /** Trigger lookups attach nearest-match suggestions. */
  get suggestions(): string[] {
    if (this.detail && typeof this.detail === 'object' && 'suggestions' in this.detail) {
      return (this.detail as { suggestions: string[] }).suggestions;
    }
    return [];
  }
}

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { 'content-type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await resp.text();
    const data = text ? JSON.parse(text) : null;
    if (!resp.ok) {
      throw new ApiError(resp.status, (data && data.detail) ?? text);
    }
    return data as T;
  }

  getState(): Promise<StateSnapshot> {
    return this.request('GET', '/state');
  }

  getGrid(): Promise<GridDoc> {
    return this.request('GET', '/grid');
  }

  snap(x: number, y: number): Promise<SnapResult> {
    return this.request('GET', `/snap?x_mm=${x}&y_mm=${y}`);
  }

  getHistory(params: { marker_id?: number; event?: string } = {}): Promise<HistoryRecord[]> {
    const query = new URLSearchParams();
    if (params.marker_id !== undefined) query.set('marker_id', String(params.marker_id));
    if (params.event !== undefined) query.set('event', params.event);
    const suffix = query.toString() ? `?${query}` : '';
    return this.request('GET', `/history${suffix}`);
  }

  placeMarker(where: { coil_id: number } | { x_mm: number; y_mm: number }): Promise<{ marker_id: number }> {
    return this.request('POST', '/markers', where);
  }

  moveMarker(markerId: number, target: number | [number, number]): Promise<PlanSummary> {
    return this.request('POST', `/markers/${markerId}/move`, { target });
  }

  setCoil(coilId: number, on: boolean): Promise<{ coil_id: number; on: boolean }> {
    return this.request('POST', `/coils/${coilId}`, { on });
  }

  park(): Promise<PlanSummary> {
    return this.request('POST', '/park');
  }

  trigger(text: string): Promise<PlanSummary> {
    return this.request('POST', '/trigger', { text });
  }

  listConfigurations(): Promise<Record<string, ConfigurationDoc>> {
    return this.request('GET', '/configurations');
  }

  getConfiguration(name: string): Promise<ConfigurationDoc> {
    return this.request('GET', `/configurations/${encodeURIComponent(name)}`);
  }

  saveConfiguration(doc: {
    name: string;
    static_elements?: unknown[];
    marker_targets?: unknown[];
  }): Promise<ConfigurationDoc> {
    return this.request('POST', '/configurations', doc);
  }

  deleteConfiguration(name: string): Promise<{ deleted: string }> {
    return this.request('DELETE', `/configurations/${encodeURIComponent(name)}`);
  }

  renderConfiguration(name: string): Promise<PlanSummary> {
    return this.request('POST', `/configurations/${encodeURIComponent(name)}/render`);
  }

  listBindings(): Promise<Record<string, BindingDoc>> {
    return this.request('GET', '/bindings');
  }

  saveBinding(doc: BindingDoc): Promise<BindingDoc> {
    return this.request('POST', '/bindings', doc);
  }

  listSequences(): Promise<Record<string, SequenceDoc>> {
    return this.request('GET', '/sequences');
  }

  saveSequence(doc: { name: string; steps: string[] }): Promise<SequenceDoc> {
    return this.request('POST', '/sequences', doc);
  }

  stepSequence(name: string, direction: 'NEXT' | 'PREV' | 'RESET'): Promise<PlanSummary> {
    return this.request('POST', `/sequences/${encodeURIComponent(name)}/step`, { direction });
  }

  importGraphic(format: 'svg' | 'polyline-json', content: string): Promise<{ elements: unknown[] }> {
    return this.request('POST', '/import', { format, content });
  }
}
