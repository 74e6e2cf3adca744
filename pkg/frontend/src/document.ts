/**
 * Authoring model for one canvas document: static graphic layers plus the
 * marker target layer being edited.
 *
 * Targets snap to coil centers the moment they are placed, so what the
 * designer sees is exactly what the service will store.  Saving is blocked
 * while any two targets sit closer than one pitch; the conflicting pairs are
 * exposed so the canvas can highlight them.
 */

import { GridGeometry } from './geometry.js';
import type { ConfigurationDoc, GraphicElement } from './types.js';

export interface TargetConflict {
  a: number;
  b: number;
}

export class DesignerDocument {
  name = 'untitled';
  staticElements: GraphicElement[] = [];
  targets: number[] = [];

  constructor(readonly grid: GridGeometry) {}

  /** Snap a board point to its coil and add it as a target. Duplicate coils
   * collapse to one entry. Returns the snapped coil id, or null off-board. */
  addTargetAt(x: number, y: number): number | null {
    if (!this.grid.onBoard(x, y)) return null;
    const id = this.grid.nearestCoil(x, y);
    if (!this.targets.includes(id)) this.targets.push(id);
    return id;
  }

  removeTargetNear(x: number, y: number): number | null {
    if (this.targets.length === 0) return null;
    let best: number | null = null;
    let bestD2 = Infinity;
    for (const id of this.targets) {
      const [cx, cy] = this.grid.center(id);
      const d2 = (cx - x) ** 2 + (cy - y) ** 2;
      if (d2 < bestD2) {
        bestD2 = d2;
        best = id;
      }
    }
    if (best !== null && bestD2 <= this.grid.pitch ** 2) {
      this.targets = this.targets.filter((t) => t !== best);
      return best;
    }
    return null;
  }

  /** Pairs of targets closer than one pitch (these block saving). */
  conflicts(): TargetConflict[] {
    const minSepSq = this.grid.pitch ** 2;
    const out: TargetConflict[] = [];
    for (let i = 0; i < this.targets.length; i++) {
      for (let j = i + 1; j < this.targets.length; j++) {
        const d2 = this.grid.centerDistanceSq(this.targets[i], this.targets[j]);
        if (d2 < minSepSq - 1e-9) {
          out.push({ a: this.targets[i], b: this.targets[j] });
        }
      }
    }
    return out;
  }

  get saveBlocked(): boolean {
    return this.conflicts().length > 0;
  }

  toConfigurationBody(): { name: string; static_elements: GraphicElement[]; marker_targets: number[] } {
    return {
      name: this.name,
      static_elements: this.staticElements,
      marker_targets: [...this.targets],
    };
  }

  loadConfiguration(doc: ConfigurationDoc): void {
    this.name = doc.name;
    this.staticElements = doc.static_elements.map((el) => ({
      kind: el.kind,
      points: el.points.map((p) => [p[0], p[1]] as [number, number]),
    }));
    this.targets = [...doc.marker_targets];
  }
}
