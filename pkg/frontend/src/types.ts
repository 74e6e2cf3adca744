/**
 * Wire types for the coilboard control service (HTTP/JSON).
 */

export interface ModuleDoc {
  id: string;
  rows: number;
  cols: number;
  origin_mm: [number, number];
}

export interface GridDoc {
  modules: ModuleDoc[];
  pitch_mm: number;
  profile: Record<string, unknown>;
}

export type MarkerStateName = 'FREE' | 'HELD' | 'MOVING' | 'PARKED';

export interface MarkerSnapshot {
  marker_id: number;
  x_mm: number;
  y_mm: number;
  state: MarkerStateName;
  held_at: number | null;
}

export interface StateSnapshot {
  clock_ms: number;
  markers: MarkerSnapshot[];
  energized: number[];
  duty_ms: Record<string, number>;
  contention_count: number;
  separation_violations: number;
  manual_on: number[];
  executing: number | null;
  queued_jobs: number;
  history_len: number;
  dwell_ms: number;
  backend: string;
}

export interface GraphicElement {
  kind: 'polyline' | 'polygon';
  points: [number, number][];
}

export interface ConfigurationDoc {
  name: string;
  static_elements: GraphicElement[];
  marker_targets: number[];
}

export interface BindingDoc {
  trigger: string;
  configuration: string;
  kind: 'RENDER' | 'SEQUENCE';
}

export interface SequenceDoc {
  name: string;
  steps: string[];
  current_step: number;
}

export interface PlanSummary {
  status: 'COMPLETE' | 'PARTIAL_FAILURE';
  makespan_ticks: number;
  parking: boolean;
  unplanned: number[];
  markers: Record<string, { hops: number; path: number[] }>;
  job_id: number;
  queued: boolean;
  delivered: boolean | null;
  trigger?: string;
  sequence?: string;
  step?: number;
  saturated?: boolean;
}

export interface HistoryRecord {
  timestamp_ms: number;
  marker_id: number;
  coil_id: number | null;
  event: 'ARRIVED' | 'HELD' | 'PARKED' | 'CONTENTION';
}

export interface SnapResult {
  coil_id: number;
  center_mm: [number, number];
}
