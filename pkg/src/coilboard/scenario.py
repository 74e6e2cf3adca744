"""Headless scenario runs: scripted marker placements, moves, perturbations,
and manual coil writes against the simulator, with a per-tick CSV trace.

Scenario schema (JSON)::

    {
      "markers": [{"x_mm": 10, "y_mm": 10} | {"coil_id": 5}, ...],
      "events": [
        {"at_ms": 0,    "kind": "move",    "marker_id": 0, "target": 123 | [x, y]},
        {"at_ms": 500,  "kind": "perturb", "marker_id": 0, "dx_mm": 3, "dy_mm": 0},
        {"at_ms": 900,  "kind": "coil",    "coil_id": 7, "on": true},
        {"at_ms": 2000, "kind": "park"}
      ]
    }

A top-level "perturbations" list is accepted as shorthand for perturb events.
The trace has one row per marker per sample tick: ``clock_ms, marker_id,
x_mm, y_mm, state``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import SimulationError
from .executor import SimExecutor
from .geometry import CoilGrid
from .planner import PlanStatus, park_all, plan_multi
from .simulation import SimState


@dataclass
class ScenarioResult:
    summary: dict
    trace_csv: str

    @property
    def violations(self) -> int:
        return self.summary["contention_count"] + self.summary["separation_violations"] \
            + self.summary["undelivered"]


def load_scenario(path: str | Path) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SimulationError(f"cannot read scenario {path}: {exc}") from exc
    return normalize_scenario(data)


def normalize_scenario(data: dict) -> dict:
    if not isinstance(data, dict):
        raise SimulationError("scenario must be a JSON object")
    markers = data.get("markers", [])
    events = list(data.get("events", []))
    for p in data.get("perturbations", []):
        events.append({**p, "kind": "perturb"})
    for ev in events:
        if "at_ms" not in ev or "kind" not in ev:
            raise SimulationError(f"scenario event needs at_ms and kind: {ev!r}")
    events.sort(key=lambda e: float(e["at_ms"]))
    return {"markers": markers, "events": events}


def run_scenario(
    grid: CoilGrid,
    scenario: dict,
    dwell_ms: float = 20.0,
    sample_every_ms: float = 100.0,
) -> ScenarioResult:
    scenario = normalize_scenario(scenario)
    sim = SimState(grid)
    executor = SimExecutor(sim, dwell_ms)
    trace = io.StringIO()
    writer = csv.writer(trace)
    writer.writerow(["clock_ms", "marker_id", "x_mm", "y_mm", "state"])

    for entry in scenario["markers"]:
        if "coil_id" in entry:
            x, y = grid.center_of_id(int(entry["coil_id"]))
        else:
            x, y = float(entry["x_mm"]), float(entry["y_mm"])
        sim.place_marker(x, y)

    jobs = []

    def sample() -> None:
        for mid in sorted(sim.markers):
            m = sim.markers[mid]
            writer.writerow(
                [f"{sim.clock_ms:.0f}", mid, f"{m.x:.3f}", f"{m.y:.3f}", m.state.value]
            )

    def advance_to(target_ms: float) -> None:
        while sim.clock_ms + sample_every_ms <= target_ms:
            executor.tick(sample_every_ms)
            sample()
        rest = target_ms - sim.clock_ms
        if rest > 1e-9:
            executor.tick(rest)
            sample()

    def marker_cells() -> dict[int, int]:
        cells = {
            mid: (m.held_at if m.held_at is not None else grid.nearest_coil_id(m.x, m.y))
            for mid, m in sim.markers.items()
        }
        for job in ([executor.active] if executor.active else []) + list(executor.queue):
            cells.update(job.plan.goals())
        return cells

    sample()
    planner_failures = 0
    for ev in scenario["events"]:
        advance_to(float(ev["at_ms"]))
        kind = ev["kind"]
        if kind == "perturb":
            sim.perturb(int(ev["marker_id"]), float(ev.get("dx_mm", 0)), float(ev.get("dy_mm", 0)))
        elif kind == "coil":
            executor.set_coil(int(ev["coil_id"]), bool(ev.get("on", True)))
        elif kind == "move":
            mid = int(ev["marker_id"])
            cells = marker_cells()
            if mid not in cells:
                raise SimulationError(f"scenario moves unknown marker {mid}")
            target = ev["target"]
            goal = (
                int(target)
                if isinstance(target, int)
                else grid.nearest_coil_id(float(target[0]), float(target[1]))
            )
            others = [grid.center_of_id(c) for m, c in sorted(cells.items()) if m != mid]
            plan = plan_multi(grid, {mid: goal}, {mid: cells[mid]}, obstacles_mm=others)
            if plan.status is PlanStatus.COMPLETE:
                jobs.append(executor.submit(plan))
            else:
                planner_failures += 1
        elif kind == "park":
            plan = park_all(grid, marker_cells())
            if plan.status is PlanStatus.COMPLETE:
                jobs.append(executor.submit(plan, park=True))
            else:
                planner_failures += 1
        else:
            raise SimulationError(f"unknown scenario event kind {kind!r}")

    # let queued work finish, then settle one capture interval
    while executor.busy:
        executor.tick(sample_every_ms)
        sample()
    executor.tick(sim.params.t_snap_ms)
    sample()

    events = executor.drain_events()
    undelivered = sum(1 for job in jobs if not job.delivered) + planner_failures
    summary = {
        "clock_ms": sim.clock_ms,
        "markers": len(sim.markers),
        "jobs": len(jobs),
        "arrived": sum(1 for e in events if e.kind == "ARRIVED"),
        "parked": sum(1 for e in events if e.kind == "PARKED"),
        "contention_count": sim.contention_count,
        "separation_violations": sim.separation_violations,
        "undelivered": undelivered,
        "final_states": {
            str(mid): sim.markers[mid].state.value for mid in sorted(sim.markers)
        },
    }
    return ScenarioResult(summary, trace.getvalue())


# ---------------------------------------------------------------------------
# built-in scenarios for the CLI


def builtin_scenario(name: str, grid: CoilGrid) -> dict:
    """Small canned scenarios: 'hexagon' traces the drawing-guide corners,
    'contention' forces two markers to fight over one coil."""
    from .demos import hexagon_points

    if name == "hexagon":
        corners = [grid.nearest_coil_id(x, y) for x, y in hexagon_points(grid)]
        return {
            "markers": [{"coil_id": corners[0]}],
            "events": [
                {"at_ms": 200 + 4000 * i, "kind": "move", "marker_id": 0, "target": c}
                for i, c in enumerate(corners[1:] + corners[:1])
            ]
            + [{"at_ms": 200 + 4000 * 6, "kind": "park"}],
        }
    if name == "contention":
        # two free markers flanking one coil, then energize it manually
        pitch = grid.pitch_mm
        xmin, ymin, _, _ = grid.board_bounds()
        cx, cy = xmin + 4 * pitch, ymin + 4 * pitch
        cid = grid.nearest_coil_id(cx, cy)
        x, y = grid.center_of_id(cid)
        return {
            "markers": [
                {"x_mm": x - 0.55 * pitch, "y_mm": y},
                {"x_mm": x + 0.55 * pitch, "y_mm": y},
            ],
            "events": [{"at_ms": 100, "kind": "coil", "coil_id": cid, "on": True}],
        }
    raise SimulationError(f"unknown built-in scenario {name!r}")
