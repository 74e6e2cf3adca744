"""HTTP control service: coil- and marker-level commands, authored content,
schedule execution, and marker history.

All mutations funnel through one lock-guarded controller that owns the
executor and simulator state; HTTP readers get immutable snapshot copies.  In
*instant* mode every command runs to completion before the response (useful
for tests and batch demos); in paced mode a ticker thread advances simulated
time in real time and commands queue behind the running plan.
"""

from __future__ import annotations

import asyncio
import json
import threading
from dataclasses import dataclass
from typing import Union

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from .content import (
    BindingKind,
    CommandBinding,
    Configuration,
    ContentStore,
    StepSequence,
    parse_polyline_json,
    parse_svg_subset,
    snap_targets,
    suggest_triggers,
    validate_targets,
)
from .errors import (
    CoilboardError,
    ContentError,
    DriveError,
    GridError,
    NotFoundError,
    PlanningError,
    SeparationError,
    SimulationError,
)
from .executor import FrameLogExecutor, SimExecutor
from .geometry import CoilGrid
from .planner import MotionPlan, PlanStatus, park_all, plan_multi
from .simulation import SimParams, SimState


class TriggerNotFound(NotFoundError):
    def __init__(self, message: str, suggestions: list[str]):
        super().__init__(message)
        self.suggestions = suggestions


@dataclass(frozen=True)
class HistoryRecord:
    timestamp_ms: float
    marker_id: int
    coil_id: int | None
    event: str  # ARRIVED | HELD | PARKED | CONTENTION

    def to_dict(self) -> dict:
        return {
            "timestamp_ms": self.timestamp_ms,
            "marker_id": self.marker_id,
            "coil_id": self.coil_id,
            "event": self.event,
        }


class Controller:
    """Single-writer command core shared by the HTTP app and the CLI."""

    def __init__(
        self,
        grid: CoilGrid,
        store: ContentStore | None = None,
        *,
        backend: str = "sim",
        dwell_ms: float = 20.0,
        instant: bool = True,
        params: SimParams | None = None,
    ):
        self.grid = grid
        self.store = store or ContentStore()
        self.lock = threading.RLock()
        self.dwell_ms = dwell_ms
        self.instant = instant
        self.backend_kind = backend
        if backend == "sim":
            self.sim: SimState | None = SimState(grid, params)
            self.executor = SimExecutor(self.sim, dwell_ms)
        elif backend == "log":
            self.sim = None
            self.executor = FrameLogExecutor(grid, dwell_ms)
        else:
            raise CoilboardError(f"unknown backend {backend!r}; use 'sim' or 'log'")
        self.history: list[HistoryRecord] = []

    # ------------------------------------------------------------------
    # internals

    def _drain_events(self) -> None:
        for ev in self.executor.drain_events():
            self.history.append(
                HistoryRecord(ev.clock_ms, ev.marker_id, ev.coil_id, ev.kind)
            )

    def _settle(self) -> None:
        if self.instant:
            self.executor.run_until_idle()
        self._drain_events()

    def tick(self, sim_ms: float) -> None:
        """Advance simulated time (paced mode's ticker entry point)."""
        with self.lock:
            self.executor.tick(sim_ms)
            self._drain_events()

    def _marker_cells(self) -> dict[int, int]:
        """Current cell of every marker (snapped for free-floating ones)."""
        if self.sim is not None:
            return {
                mid: (
                    m.held_at
                    if m.held_at is not None
                    else self.grid.nearest_coil_id(m.x, m.y)
                )
                for mid, m in self.sim.markers.items()
            }
        return dict(self.executor.markers)

    def _predicted_cells(self) -> dict[int, int]:
        """Marker cells once every queued plan has finished."""
        cells = self._marker_cells()
        jobs = ([self.executor.active] if self.executor.active else []) + list(
            self.executor.queue
        )
        for job in jobs:
            cells.update(job.plan.goals())
        return cells

    def _submit(self, plan: MotionPlan, park: bool = False) -> dict:
        job = self.executor.submit(plan, park=park)
        queued = self.executor.active is not job
        self._settle()
        summary = plan.summary()
        summary["job_id"] = job.job_id
        summary["queued"] = queued
        summary["delivered"] = job.delivered if job.done else None
        return summary

    # ------------------------------------------------------------------
    # marker and coil commands

    def place_marker(self, x_mm: float | None = None, y_mm: float | None = None,
                     coil_id: int | None = None) -> dict:
        with self.lock:
            if coil_id is not None:
                x_mm, y_mm = self.grid.center_of_id(coil_id)
            if x_mm is None or y_mm is None:
                raise SimulationError("marker placement needs x_mm/y_mm or coil_id")
            if self.sim is not None:
                marker_id = self.sim.place_marker(x_mm, y_mm)
            else:
                marker_id = self.executor.place_marker(
                    self.grid.nearest_coil_id(x_mm, y_mm)
                )
            return {"marker_id": marker_id}

    def set_coil(self, coil_id: int, on: bool) -> dict:
        with self.lock:
            self.executor.set_coil(coil_id, on)
            if self.instant and not self.executor.busy:
                # let holds settle/release under the new override set
                self.executor.tick(max(500.0, 5 * self.dwell_ms))
            self._drain_events()
            return {"coil_id": coil_id, "on": coil_id in self.executor.manual_on}

    def move_marker(self, marker_id: int, target) -> dict:
        with self.lock:
            cells = self._predicted_cells()
            if marker_id not in cells:
                raise NotFoundError(f"unknown marker {marker_id}")
            goal = self._resolve_target(target)
            others = {mid: cid for mid, cid in cells.items() if mid != marker_id}
            gh = self.grid.half_center(goal)
            for mid, cid in sorted(others.items()):
                oh = self.grid.half_center(cid)
                if (gh[0] - oh[0]) ** 2 + (gh[1] - oh[1]) ** 2 < 4:
                    raise SeparationError(
                        f"target coil {goal} is within one pitch of marker {mid}"
                    )
            plan = plan_multi(
                self.grid,
                {marker_id: goal},
                {marker_id: cells[marker_id]},
                obstacles_mm=[self.grid.center_of_id(c) for _, c in sorted(others.items())],
            )
            return self._submit(plan)

    def _resolve_target(self, target) -> int:
        if isinstance(target, int):
            self.grid.addr_of(target)
            return target
        if isinstance(target, (list, tuple)) and len(target) == 2:
            return self.grid.nearest_coil_id(float(target[0]), float(target[1]))
        if isinstance(target, dict) and "x_mm" in target and "y_mm" in target:
            return self.grid.nearest_coil_id(float(target["x_mm"]), float(target["y_mm"]))
        raise SimulationError(f"target {target!r} is neither a coil id nor an mm point")

    def park(self) -> dict:
        with self.lock:
            plan = park_all(self.grid, self._predicted_cells())
            if plan.status is not PlanStatus.COMPLETE:
                raise PlanningError(
                    f"parking failed for markers {list(plan.unplanned)}"
                )
            return self._submit(plan, park=True)

    # ------------------------------------------------------------------
    # rendering and dispatch

    def render_configuration(self, name: str) -> dict:
        with self.lock:
            config = self.store.configuration(name)
            targets = list(config.marker_targets)
            cells = self._predicted_cells()
            if not targets:
                plan = park_all(self.grid, cells)
                if plan.status is not PlanStatus.COMPLETE:
                    raise PlanningError(
                        f"parking failed for markers {list(plan.unplanned)}"
                    )
                return self._submit(plan, park=True)
            if len(targets) > len(cells):
                raise ContentError(
                    f"configuration {name!r} needs {len(targets)} markers, "
                    f"only {len(cells)} on the board ({len(targets) - len(cells)} short)"
                )
            goals = self._assign_markers(cells, targets)
            plan = plan_multi(self.grid, goals, {m: cells[m] for m in goals})
            return self._submit(plan)

    def _assign_markers(self, cells: dict[int, int], targets: list[int]) -> dict[int, int]:
        """Greedy nearest assignment by hop distance; surplus markers park."""
        from .planner import _bfs_distances, _MIN_SEP_SQ, _d2  # shared lattice helpers

        dists = {t: _bfs_distances(self.grid, t) for t in set(targets)}
        unassigned = dict(cells)
        goals: dict[int, int] = {}
        remaining = list(enumerate(targets))
        while remaining:
            best = None
            for mid, cell in sorted(unassigned.items()):
                for idx, t in remaining:
                    d = dists[t].get(cell)
                    if d is None:
                        continue
                    cand = (d, mid, idx)
                    if best is None or cand < best:
                        best = cand
            if best is None:
                raise PlanningError("configuration targets unreachable from markers")
            _, mid, idx = best
            goals[mid] = targets[idx]
            del unassigned[mid]
            remaining = [(i, t) for i, t in remaining if i != idx]
        if unassigned:
            surplus = park_all(self.grid, dict(unassigned)).goals()
            taken = [self.grid.half_center(t) for t in goals.values()]
            for mid, slot in sorted(surplus.items()):
                sh = self.grid.half_center(slot)
                if any(_d2(sh, th) < _MIN_SEP_SQ for th in taken):
                    # parking spot crowds the rendered targets: shunt the
                    # marker to its nearest cell clear of every chosen goal
                    mh = self.grid.half_center(unassigned[mid])
                    slot = min(
                        (
                            cid
                            for cid in range(self.grid.coil_count)
                            if all(
                                _d2(self.grid.half_center(cid), th) >= _MIN_SEP_SQ
                                for th in taken
                            )
                        ),
                        key=lambda cid: (_d2(self.grid.half_center(cid), mh), cid),
                    )
                    sh = self.grid.half_center(slot)
                goals[mid] = slot
                taken.append(sh)
        return goals

    def trigger(self, text: str) -> dict:
        with self.lock:
            if not text or not text.strip():
                raise ContentError("trigger text is empty")
            binding = self.store.bindings.get(text)
            if binding is None:
                suggestions = suggest_triggers(text, self.store.bindings.keys())
                raise TriggerNotFound(f"no binding for {text!r}", suggestions)
            if binding.kind is BindingKind.SEQUENCE:
                return self.sequence_step(binding.configuration, "NEXT")
            result = self.render_configuration(binding.configuration)
            result["trigger"] = text
            return result

    def sequence_step(self, name: str, direction: str) -> dict:
        with self.lock:
            seq = self.store.sequence(name)
            before = seq.current_step
            index = seq.advance(direction)
            self.store.save()
            if direction == "NEXT" and index == before:
                # saturated at the last step: nothing to do
                return {"sequence": name, "step": index, "saturated": True,
                        "status": "COMPLETE", "makespan_ticks": 0, "markers": {}}
            result = self.render_configuration(seq.steps[index])
            result["sequence"] = name
            result["step"] = index
            return result

    # ------------------------------------------------------------------
    # content CRUD

    def save_configuration(self, name: str, static_elements: list | None,
                           raw_targets: list | None) -> dict:
        with self.lock:
            targets = snap_targets(self.grid, raw_targets or [])
            validate_targets(self.grid, targets)
            config = Configuration(name, list(static_elements or []), targets)
            self.store.configurations[name] = config
            self.store.save()
            return config.to_dict()

    def delete_configuration(self, name: str) -> None:
        with self.lock:
            self.store.configuration(name)
            del self.store.configurations[name]
            self.store.save()

    def save_binding(self, trigger: str, configuration: str, kind: str) -> dict:
        with self.lock:
            if not trigger.strip():
                raise ContentError("binding trigger is empty")
            binding_kind = BindingKind(kind)
            if binding_kind is BindingKind.RENDER:
                self.store.configuration(configuration)
            else:
                self.store.sequence(configuration)
            binding = CommandBinding(trigger, configuration, binding_kind)
            self.store.bindings[trigger] = binding
            self.store.save()
            return binding.to_dict()

    def delete_binding(self, trigger: str) -> None:
        with self.lock:
            if trigger not in self.store.bindings:
                raise NotFoundError(f"unknown binding {trigger!r}")
            del self.store.bindings[trigger]
            self.store.save()

    def save_sequence(self, name: str, steps: list[str]) -> dict:
        with self.lock:
            for step in steps:
                self.store.configuration(step)
            seq = StepSequence(name, list(steps))
            self.store.sequences[name] = seq
            self.store.save()
            return seq.to_dict()

    def delete_sequence(self, name: str) -> None:
        with self.lock:
            self.store.sequence(name)
            del self.store.sequences[name]
            self.store.save()

    # ------------------------------------------------------------------
    # reads

    def get_state(self) -> dict:
        with self.lock:
            snap = self.executor.state_snapshot()
            snap["history_len"] = len(self.history)
            snap["dwell_ms"] = self.dwell_ms
            snap["backend"] = self.backend_kind
            return snap

    def get_history(
        self,
        marker_id: int | None = None,
        since_ms: float | None = None,
        until_ms: float | None = None,
        event: str | None = None,
    ) -> list[dict]:
        with self.lock:
            out = []
            for rec in self.history:
                if marker_id is not None and rec.marker_id != marker_id:
                    continue
                if since_ms is not None and rec.timestamp_ms < since_ms:
                    continue
                if until_ms is not None and rec.timestamp_ms > until_ms:
                    continue
                if event is not None and rec.event != event:
                    continue
                out.append(rec.to_dict())
            return out


# ---------------------------------------------------------------------------
# HTTP layer


class CoilBody(BaseModel):
    on: bool


class MarkerCreate(BaseModel):
    x_mm: float | None = None
    y_mm: float | None = None
    coil_id: int | None = None


class MoveBody(BaseModel):
    target: Union[int, list[float], dict]


class TriggerBody(BaseModel):
    text: str


class StepBody(BaseModel):
    direction: str


class ConfigurationBody(BaseModel):
    name: str
    static_elements: list = []
    marker_targets: list = []


class BindingBody(BaseModel):
    trigger: str
    configuration: str
    kind: str = "RENDER"


class SequenceBody(BaseModel):
    name: str
    steps: list[str]


class ImportBody(BaseModel):
    format: str  # "svg" | "polyline-json"
    content: str


def _http_error(exc: CoilboardError) -> HTTPException:
    if isinstance(exc, TriggerNotFound):
        return HTTPException(404, {"message": str(exc), "suggestions": exc.suggestions})
    if isinstance(exc, NotFoundError):
        return HTTPException(404, str(exc))
    if isinstance(exc, SeparationError):
        return HTTPException(409, str(exc))
    if isinstance(exc, PlanningError):
        return HTTPException(409, str(exc))
    return HTTPException(400, str(exc))


def create_app(controller: Controller, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="coilboard control service", version="0.1.0")
    app.state.controller = controller

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    def guard(fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except CoilboardError as exc:
            raise _http_error(exc) from exc

    @app.get("/state")
    def get_state():
        return controller.get_state()

    @app.get("/grid")
    def get_grid():
        return controller.grid.to_dict()

    @app.get("/snap")
    def snap(x_mm: float, y_mm: float):
        cid = guard(controller.grid.nearest_coil_id, x_mm, y_mm)
        cx, cy = controller.grid.center_of_id(cid)
        return {"coil_id": cid, "center_mm": [cx, cy]}

    @app.get("/history")
    def get_history(
        marker_id: int | None = None,
        since_ms: float | None = None,
        until_ms: float | None = None,
        event: str | None = None,
    ):
        return controller.get_history(marker_id, since_ms, until_ms, event)

    @app.post("/markers")
    def create_marker(body: MarkerCreate):
        return guard(controller.place_marker, body.x_mm, body.y_mm, body.coil_id)

    @app.post("/markers/{marker_id}/move")
    def move_marker(marker_id: int, body: MoveBody):
        return guard(controller.move_marker, marker_id, body.target)

    @app.post("/coils/{coil_id}")
    def set_coil(coil_id: int, body: CoilBody):
        return guard(controller.set_coil, coil_id, body.on)

    @app.post("/park")
    def park():
        return guard(controller.park)

    @app.post("/trigger")
    def trigger(body: TriggerBody):
        return guard(controller.trigger, body.text)

    @app.get("/configurations")
    def list_configurations():
        return {
            name: c.to_dict() for name, c in sorted(controller.store.configurations.items())
        }

    @app.post("/configurations")
    def save_configuration(body: ConfigurationBody):
        return guard(
            controller.save_configuration, body.name, body.static_elements, body.marker_targets
        )

    @app.get("/configurations/{name}")
    def get_configuration(name: str):
        return guard(controller.store.configuration, name).to_dict()

    @app.delete("/configurations/{name}")
    def delete_configuration(name: str):
        guard(controller.delete_configuration, name)
        return {"deleted": name}

    @app.post("/configurations/{name}/render")
    def render_configuration(name: str):
        return guard(controller.render_configuration, name)

    @app.get("/bindings")
    def list_bindings():
        return {t: b.to_dict() for t, b in sorted(controller.store.bindings.items())}

    @app.post("/bindings")
    def save_binding(body: BindingBody):
        return guard(controller.save_binding, body.trigger, body.configuration, body.kind)

    @app.delete("/bindings/{trigger}")
    def delete_binding(trigger: str):
        guard(controller.delete_binding, trigger)
        return {"deleted": trigger}

    @app.get("/sequences")
    def list_sequences():
        return {n: s.to_dict() for n, s in sorted(controller.store.sequences.items())}

    @app.post("/sequences")
    def save_sequence(body: SequenceBody):
        return guard(controller.save_sequence, body.name, body.steps)

    @app.delete("/sequences/{name}")
    def delete_sequence(name: str):
        guard(controller.delete_sequence, name)
        return {"deleted": name}

    @app.post("/sequences/{name}/step")
    def sequence_step(name: str, body: StepBody):
        return guard(controller.sequence_step, name, body.direction)

    @app.post("/import")
    def import_graphic(body: ImportBody):
        if body.format == "svg":
            return {"elements": guard(parse_svg_subset, body.content)}
        if body.format == "polyline-json":
            return {"elements": guard(parse_polyline_json, body.content)}
        raise HTTPException(400, f"unknown graphic format {body.format!r}")

    @app.get("/events")
    async def events(request: Request, limit: int = 0, interval_ms: int = 50):
        interval = max(50, interval_ms) / 1000.0  # 20 Hz ceiling

        async def stream():
            sent = 0
            while limit <= 0 or sent < limit:
                if await request.is_disconnected():
                    break
                yield json.dumps(controller.get_state()) + "\n"
                sent += 1
                if limit <= 0 or sent < limit:
                    await asyncio.sleep(interval)

        return StreamingResponse(stream(), media_type="application/x-ndjson")

    return app


class Ticker:
    """Background thread advancing a paced controller in real time."""

    def __init__(self, controller: Controller, speed: float = 1.0, poll_s: float = 0.025):
        self.controller = controller
        self.speed = speed
        self.poll_s = poll_s
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, name="coilboard-ticker", daemon=True)

    def _run(self) -> None:
        import time

        last = time.monotonic()
        while not self._stop.is_set():
            time.sleep(self.poll_s)
            now = time.monotonic()
            dt_ms = (now - last) * 1000.0 * self.speed
            last = now
            if dt_ms > 0:
                self.controller.tick(min(dt_ms, 1000.0))

    def start(self) -> None:
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        self._thread.join(timeout=2.0)
