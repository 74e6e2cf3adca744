/**
 * Client-side lattice math for a two-layer coil grid.
 *
 * Mirrors the service's geometry exactly (same center formulas, same packed
 * ID layout, same nearest-coil tie-break toward the lower ID) so that
 * anything the UI snaps locally agrees with what the service would store.
 */

import type { GridDoc } from './types.js';

export type Layer = 'TOP' | 'BOTTOM';

const LAYER_SHIFT: Record<Layer, number> = { TOP: 1, BOTTOM: 2 };

export interface CoilInfo {
  id: number;
  module: string;
  layer: Layer;
  row: number;
  col: number;
  x: number;
  y: number;
}

interface ModuleMeta {
  id: string;
  rows: number;
  cols: number;
  originHalfX: number;
  originHalfY: number;
  base: number;
}

export class GridGeometry {
  readonly pitch: number;
  readonly half: number;
  readonly coilCount: number;
  private readonly modules: ModuleMeta[];

  constructor(doc: GridDoc) {
    this.pitch = doc.pitch_mm;
    this.half = doc.pitch_mm / 2;
    this.modules = [];
    let base = 0;
    for (const mod of doc.modules) {
      this.modules.push({
        id: mod.id,
        rows: mod.rows,
        cols: mod.cols,
        originHalfX: Math.round(mod.origin_mm[0] / this.half),
        originHalfY: Math.round(mod.origin_mm[1] / this.half),
        base,
      });
      base += 2 * mod.rows * mod.cols;
    }
    this.coilCount = base;
  }

  /** Union bounding box of the module footprints, in mm. */
  bounds(): { xMin: number; yMin: number; xMax: number; yMax: number } {
    let xMin = Infinity, yMin = Infinity, xMax = -Infinity, yMax = -Infinity;
    for (const m of this.modules) {
      xMin = Math.min(xMin, m.originHalfX * this.half);
      yMin = Math.min(yMin, m.originHalfY * this.half);
      xMax = Math.max(xMax, (m.originHalfX + 2 * m.cols) * this.half);
      yMax = Math.max(yMax, (m.originHalfY + 2 * m.rows) * this.half);
    }
    return { xMin, yMin, xMax, yMax };
  }

  onBoard(x: number, y: number): boolean {
    for (const m of this.modules) {
      const x0 = m.originHalfX * this.half;
      const y0 = m.originHalfY * this.half;
      if (
        x >= x0 && x <= x0 + 2 * m.cols * this.half &&
        y >= y0 && y <= y0 + 2 * m.rows * this.half
      ) {
        return true;
      }
    }
    return false;
  }

  coilInfo(id: number): CoilInfo {
    for (const m of this.modules) {
      const size = 2 * m.rows * m.cols;
      if (id < m.base || id >= m.base + size) continue;
      const within = id - m.base;
      const perLayer = m.rows * m.cols;
      const layer: Layer = within < perLayer ? 'TOP' : 'BOTTOM';
      const cell = within % perLayer;
      const row = Math.floor(cell / m.cols);
      const col = cell % m.cols;
      const shift = LAYER_SHIFT[layer];
      return {
        id,
        module: m.id,
        layer,
        row,
        col,
        x: (m.originHalfX + 2 * col + shift) * this.half,
        y: (m.originHalfY + 2 * row + shift) * this.half,
      };
    }
    throw new RangeError(`unknown coil id ${id}`);
  }

  center(id: number): [number, number] {
    const info = this.coilInfo(id);
    return [info.x, info.y];
  }

  /** All coils, in packed-ID order. */
  coils(): CoilInfo[] {
    const out: CoilInfo[] = [];
    for (let id = 0; id < this.coilCount; id++) out.push(this.coilInfo(id));
    return out;
  }

  /**
   * Nearest coil center; equal distances resolve to the lower packed ID,
   * matching the service's snapping rule bit for bit.
   */
  nearestCoil(x: number, y: number): number {
    let bestD2 = Infinity;
    let bestId = -1;
    for (const m of this.modules) {
      for (const layer of ['TOP', 'BOTTOM'] as Layer[]) {
        const shift = LAYER_SHIFT[layer];
        const cGuess = Math.round((x / this.half - m.originHalfX - shift) / 2);
        const rGuess = Math.round((y / this.half - m.originHalfY - shift) / 2);
        const layerBase = m.base + (layer === 'TOP' ? 0 : m.rows * m.cols);
        for (let r = Math.max(0, rGuess - 1); r < Math.min(m.rows, rGuess + 2); r++) {
          for (let c = Math.max(0, cGuess - 1); c < Math.min(m.cols, cGuess + 2); c++) {
            const cx = (m.originHalfX + 2 * c + shift) * this.half;
            const cy = (m.originHalfY + 2 * r + shift) * this.half;
            const d2 = (cx - x) ** 2 + (cy - y) ** 2;
            const id = layerBase + r * m.cols + c;
            if (d2 < bestD2 || (d2 === bestD2 && id < bestId)) {
              bestD2 = d2;
              bestId = id;
            }
          }
        }
      }
    }
    if (bestId < 0) throw new RangeError('grid has no coils');
    return bestId;
  }

  /** Squared distance between two coil centers, in mm^2. */
  centerDistanceSq(a: number, b: number): number {
    const [ax, ay] = this.center(a);
    const [bx, by] = this.center(b);
    return (ax - bx) ** 2 + (ay - by) ** 2;
  }
}
