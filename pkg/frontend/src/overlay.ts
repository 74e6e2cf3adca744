/**
 * Live overlay model: turns a state snapshot into drawable primitives
 * (marker dots, energized coil rings, duty heat tints).  Pure data in, pure
 * data out, so the mapping is testable without a canvas.
 */

import { GridGeometry } from './geometry.js';
import type { MarkerStateName, StateSnapshot } from './types.js';

export interface MarkerDot {
  markerId: number;
  x: number;
  y: number;
  state: MarkerStateName;
}

export interface CoilRing {
  coilId: number;
  x: number;
  y: number;
}

export interface HeatTint {
  coilId: number;
  x: number;
  y: number;
  /** 0..1 where 1 is the saturation duty (1 s of accumulated on-time). */
  strength: number;
}

export interface OverlayModel {
  markers: MarkerDot[];
  energized: CoilRing[];
  heat: HeatTint[];
  clockMs: number;
}

/** Accumulated on-time at which the tint saturates. */
export const HEAT_SATURATION_MS = 1000;

export function heatStrength(dutyMs: number): number {
  if (dutyMs <= 0) return 0;
  return Math.min(1, dutyMs / HEAT_SATURATION_MS);
}

export function buildOverlay(grid: GridGeometry, snap: StateSnapshot): OverlayModel {
  const markers = snap.markers.map((m) => ({
    markerId: m.marker_id,
    x: m.x_mm,
    y: m.y_mm,
    state: m.state,
  }));
  const energized = snap.energized.map((id) => {
    const [x, y] = grid.center(id);
    return { coilId: id, x, y };
  });
  const heat: HeatTint[] = [];
  for (const [key, duty] of Object.entries(snap.duty_ms)) {
    const id = Number(key);
    const strength = heatStrength(duty);
    if (strength > 0) {
      const [x, y] = grid.center(id);
      heat.push({ coilId: id, x, y, strength });
    }
  }
  heat.sort((a, b) => a.coilId - b.coilId);
  return { markers, energized, heat, clockMs: snap.clock_ms };
}
