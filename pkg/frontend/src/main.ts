/**
 * Designer/operator app: author marker configurations on a board canvas,
 * bind command phrases, and drive the live board with a console while the
 * overlay animates marker state from the event stream.
 */

import { ApiClient, ApiError } from './api.js';
import { DesignerDocument } from './document.js';
import { EventStream } from './events.js';
import { GridGeometry } from './geometry.js';
import { buildOverlay, OverlayModel } from './overlay.js';
import type { StateSnapshot } from './types.js';

const SCALE = 4; // canvas px per mm

interface AppState {
  api: ApiClient;
  grid: GridGeometry;
  doc: DesignerDocument;
  overlay: OverlayModel | null;
  stream: EventStream | null;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function boardToCanvas(grid: GridGeometry, x: number, y: number): [number, number] {
  const { yMax } = grid.bounds();
  return [x * SCALE, (yMax - y) * SCALE]; // y up on the board, down on canvas
}

function canvasToBoard(grid: GridGeometry, px: number, py: number): [number, number] {
  const { yMax } = grid.bounds();
  return [px / SCALE, yMax - py / SCALE];
}

function draw(state: AppState, canvas: HTMLCanvasElement): void {
  const { grid, doc, overlay } = state;
  const ctx = canvas.getContext('2d');
  if (!ctx) return;
  const { xMax, yMax } = grid.bounds();
  canvas.width = xMax * SCALE;
  canvas.height = yMax * SCALE;
  ctx.fillStyle = '#fafaf7';
  ctx.fillRect(0, 0, canvas.width, canvas.height);

  // coil lattice
  for (const coil of grid.coils()) {
    const [px, py] = boardToCanvas(grid, coil.x, coil.y);
    ctx.fillStyle = coil.layer === 'TOP' ? '#c8c8d4' : '#e0d8c8';
    ctx.beginPath();
    ctx.arc(px, py, 2, 0, Math.PI * 2);
    ctx.fill();
  }

  // duty heat tint under everything else
  if (overlay) {
    for (const heat of overlay.heat) {
      const [px, py] = boardToCanvas(grid, heat.x, heat.y);
      ctx.fillStyle = `rgba(220, 90, 40, ${0.35 * heat.strength})`;
      ctx.beginPath();
      ctx.arc(px, py, grid.half * SCALE, 0, Math.PI * 2);
      ctx.fill();
    }
  }

  // static graphic layers
  ctx.strokeStyle = '#30424f';
  ctx.lineWidth = 2;
  for (const elem of doc.staticElements) {
    if (elem.points.length < 2) continue;
    ctx.beginPath();
    elem.points.forEach(([x, y], i) => {
      const [px, py] = boardToCanvas(grid, x, y);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    if (elem.kind === 'polygon') ctx.closePath();
    ctx.stroke();
  }

  // authored targets, conflicts highlighted
  const conflicted = new Set<number>();
  for (const pair of doc.conflicts()) {
    conflicted.add(pair.a);
    conflicted.add(pair.b);
  }
  for (const target of doc.targets) {
    const [x, y] = grid.center(target);
    const [px, py] = boardToCanvas(grid, x, y);
    ctx.strokeStyle = conflicted.has(target) ? '#d2322d' : '#2d7dd2';
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.arc(px, py, 7, 0, Math.PI * 2);
    ctx.stroke();
  }

  // live overlay: energized coils and markers
  if (overlay) {
    for (const ring of overlay.energized) {
      const [px, py] = boardToCanvas(grid, ring.x, ring.y);
      ctx.strokeStyle = '#e8a013';
      ctx.lineWidth = 1.5;
      ctx.beginPath();
      ctx.arc(px, py, 5, 0, Math.PI * 2);
      ctx.stroke();
    }
    for (const marker of overlay.markers) {
      const [px, py] = boardToCanvas(grid, marker.x, marker.y);
      ctx.fillStyle =
        marker.state === 'PARKED' ? '#8a8a8a'
        : marker.state === 'MOVING' ? '#f05f18'
        : '#1c1c1c';
      ctx.beginPath();
      ctx.arc(px, py, 5, 0, Math.PI * 2);
      ctx.fill();
    }
  }
}

function setStatus(text: string, isError = false): void {
  const bar = el<HTMLDivElement>('status');
  bar.textContent = text;
  bar.style.color = isError ? '#b01818' : '#2c2c2c';
}

async function refreshContentLists(state: AppState): Promise<void> {
  const configs = await state.api.listConfigurations();
  const select = el<HTMLSelectElement>('config-list');
  select.innerHTML = '';
  for (const name of Object.keys(configs)) {
    const option = document.createElement('option');
    option.value = name;
    option.textContent = name;
    select.appendChild(option);
  }
}

async function boot(): Promise<void> {
  const api = new ApiClient('');
  const grid = new GridGeometry(await api.getGrid());
  const state: AppState = { api, grid, doc: new DesignerDocument(grid), overlay: null, stream: null };
  const canvas = el<HTMLCanvasElement>('board');

  const redraw = () => draw(state, canvas);

  canvas.addEventListener('click', (ev) => {
    const rect = canvas.getBoundingClientRect();
    const [x, y] = canvasToBoard(grid, ev.clientX - rect.left, ev.clientY - rect.top);
    if (ev.shiftKey) state.doc.removeTargetNear(x, y);
    else state.doc.addTargetAt(x, y);
    const blocked = state.doc.saveBlocked;
    el<HTMLButtonElement>('save-config').disabled = blocked;
    setStatus(blocked ? 'targets closer than one pitch; fix before saving' : 'ready', blocked);
    redraw();
  });

  el<HTMLButtonElement>('save-config').addEventListener('click', async () => {
    state.doc.name = el<HTMLInputElement>('config-name').value || 'untitled';
    try {
      await api.saveConfiguration(state.doc.toConfigurationBody());
      await refreshContentLists(state);
      setStatus(`saved configuration ${state.doc.name}`);
    } catch (err) {
      setStatus(String(err), true);
    }
  });

  el<HTMLButtonElement>('load-config').addEventListener('click', async () => {
    const name = el<HTMLSelectElement>('config-list').value;
    if (!name) return;
    state.doc.loadConfiguration(await api.getConfiguration(name));
    el<HTMLInputElement>('config-name').value = name;
    redraw();
    setStatus(`loaded configuration ${name}`);
  });

  el<HTMLButtonElement>('render-config').addEventListener('click', async () => {
    const name = el<HTMLSelectElement>('config-list').value;
    if (!name) return;
    try {
      const plan = await api.renderConfiguration(name);
      setStatus(`rendering ${name}: ${plan.status}, ${plan.makespan_ticks} ticks`);
    } catch (err) {
      setStatus(String(err), true);
    }
  });

  el<HTMLButtonElement>('import-file').addEventListener('click', async () => {
    const input = document.createElement('input');
    input.type = 'file';
    input.accept = '.svg,.json';
    input.onchange = async () => {
      const file = input.files?.[0];
      if (!file) return;
      const text = await file.text();
      const format = file.name.endsWith('.svg') ? 'svg' : 'polyline-json';
      try {
        const { elements } = await api.importGraphic(format, text);
        state.doc.staticElements.push(...(elements as typeof state.doc.staticElements));
        redraw();
        setStatus(`imported ${elements.length} elements from ${file.name}`);
      } catch (err) {
        setStatus(err instanceof ApiError ? `import rejected: ${err.message}` : String(err), true);
      }
    };
    input.click();
  });

  el<HTMLButtonElement>('send-trigger').addEventListener('click', async () => {
    const text = el<HTMLInputElement>('trigger-text').value;
    try {
      const plan = await api.trigger(text);
      setStatus(`trigger ok: ${plan.status}`);
    } catch (err) {
      if (err instanceof ApiError && err.suggestions.length) {
        setStatus(`no such command; did you mean: ${err.suggestions.join(', ')}?`, true);
      } else {
        setStatus(String(err), true);
      }
    }
  });

  const stepButton = (id: string, direction: 'NEXT' | 'PREV' | 'RESET') =>
    el<HTMLButtonElement>(id).addEventListener('click', async () => {
      const name = el<HTMLInputElement>('sequence-name').value;
      if (!name) return;
      try {
        const plan = await api.stepSequence(name, direction);
        setStatus(`sequence ${name} -> step ${plan.step}`);
      } catch (err) {
        setStatus(String(err), true);
      }
    });
  stepButton('seq-next', 'NEXT');
  stepButton('seq-prev', 'PREV');
  stepButton('seq-reset', 'RESET');

  el<HTMLButtonElement>('park').addEventListener('click', async () => {
    try {
      await api.park();
      setStatus('parked');
    } catch (err) {
      setStatus(String(err), true);
    }
  });

  el<HTMLButtonElement>('add-marker').addEventListener('click', async () => {
    const snap = state.overlay;
    const { xMin, yMin } = grid.bounds();
    const spot = await api.snap(
      xMin + grid.pitch * (2 + (snap?.markers.length ?? 0)),
      yMin + grid.pitch * 15,
    );
    try {
      await api.placeMarker({ coil_id: spot.coil_id });
      setStatus(`marker placed at coil ${spot.coil_id}`);
    } catch (err) {
      setStatus(String(err), true);
    }
  });

  state.stream = new EventStream('', (snap: StateSnapshot) => {
    state.overlay = buildOverlay(grid, snap);
    redraw();
  });

  await refreshContentLists(state);
  redraw();
  setStatus('ready');
}

boot().catch((err) => setStatus(`failed to start: ${err}`, true));
