"""Schedule execution against a backend.

The executor owns playback: exactly one plan runs at a time, later plans
queue.  Each planner tick's frame schedule is scanned for enough full cycles
that every energized coil accumulates one capture interval of on-time, then
the next tick starts.  Between plans an idle schedule keeps held markers'
coils and any manual overrides scanning.

Two backends exist: the magnet simulator (closed loop, marker physics) and a
frame logger standing in for serial hardware (open loop, dead-reckoned
positions).  Both expose the same surface to the control service.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass

from .driver import FrameSchedule, dump_frames, schedule_frames
from .errors import DriveError
from .geometry import CoilGrid
from .planner import MotionPlan, PlanStatus, compile_plan
from .simulation import MarkerState, SimState


@dataclass
class ExecutorEvent:
    """History-ready fact emitted by a backend."""

    kind: str  # "ARRIVED" | "HELD" | "PARKED" | "CONTENTION"
    clock_ms: float
    marker_id: int
    coil_id: int | None


@dataclass
class PlanJob:
    job_id: int
    plan: MotionPlan
    schedules: list[FrameSchedule]
    park: bool = False
    # filled on completion
    done: bool = False
    delivered: bool = False


class SimExecutor:
    """Closed-loop executor stepping the magnet simulator frame by frame."""

    def __init__(self, sim: SimState, dwell_ms: float = 20.0):
        lo, hi = sim.grid.profile.scan_period_ms
        if not (lo <= dwell_ms <= hi):
            raise DriveError(f"dwell {dwell_ms} ms outside the scan band [{lo}, {hi}] ms")
        self.sim = sim
        self.grid = sim.grid
        self.dwell_ms = float(dwell_ms)
        self.manual_on: set[int] = set()
        # coils explicitly commanded off: masks the automatic hold until the
        # marker there actually lets go
        self.manual_off: set[int] = set()
        self.queue: deque[PlanJob] = deque()
        self.active: PlanJob | None = None
        self.events: list[ExecutorEvent] = []
        self._job_counter = 0
        self._carry_ms = 0.0
        # playback cursor
        self._tick_index = 0
        self._frames: list = []  # prepared frames of the current schedule
        self._frame_index = 0
        self._cycles_left = 0
        self._installed_targets: set[int] = set()
        self._load_idle()

    # ------------------------------------------------------------------
    # commands

    def next_job_id(self) -> int:
        self._job_counter += 1
        return self._job_counter

    def submit(self, plan: MotionPlan, park: bool = False) -> PlanJob:
        if plan.status is not PlanStatus.COMPLETE:
            raise DriveError("cannot execute a plan that is not COMPLETE")
        job = PlanJob(self.next_job_id(), plan, compile_plan(self.grid, plan, self.dwell_ms), park)
        self.queue.append(job)
        if self.active is None:
            self._start_next()
        return job

    def set_coil(self, coil_id: int, on: bool) -> None:
        self.grid.addr_of(coil_id)  # validates
        if on:
            self.manual_on.add(coil_id)
            self.manual_off.discard(coil_id)
        else:
            self.manual_on.discard(coil_id)
            self.manual_off.add(coil_id)
        self._reload_current_schedule()

    @property
    def busy(self) -> bool:
        return self.active is not None or bool(self.queue)

    # ------------------------------------------------------------------
    # playback

    def cycles_per_tick(self) -> int:
        return max(1, math.ceil(self.sim.params.t_snap_ms / self.dwell_ms))

    def tick(self, sim_ms: float) -> None:
        """Advance simulated time, stepping whole frames of the current schedule."""
        self._carry_ms += sim_ms
        while self._carry_ms >= self.dwell_ms - 1e-9:
            self._carry_ms -= self.dwell_ms
            self._step_frame()

    def run_until_idle(self, settle_ms: float = 0.0, max_ms: float = 600_000.0) -> None:
        spent = 0.0
        while self.busy and spent < max_ms:
            self.tick(self.dwell_ms)
            spent += self.dwell_ms
        if settle_ms > 0:
            self.tick(settle_ms)

    def _step_frame(self) -> None:
        if not self._frames:
            # idle with nothing energized: time still passes
            self.sim.step_energized((), self.dwell_ms)
        else:
            prepared = self._frames[self._frame_index]
            self.sim.step_energized(prepared, self.dwell_ms)
            self._frame_index += 1
            if self._frame_index >= len(self._frames):
                self._frame_index = 0
                self._cycle_completed()
        self._translate_sim_events()

    def _cycle_completed(self) -> None:
        if self.active is None:
            return
        self._cycles_left -= 1
        if self._cycles_left > 0:
            return
        self._tick_index += 1
        if self._tick_index < len(self.active.schedules):
            self._load_tick(self._tick_index)
        else:
            self._finish_job()

    def _finish_job(self) -> None:
        job = self.active
        assert job is not None
        job.done = True
        job.delivered = True
        goals = job.plan.goals()
        for mid in sorted(goals):
            goal = goals[mid]
            marker = self.sim.markers.get(mid)
            if marker is None:
                job.delivered = False
                continue
            gx, gy = self.grid.center_of_id(goal)
            if (marker.x - gx) ** 2 + (marker.y - gy) ** 2 > 1e-6:
                job.delivered = False
                continue
            if job.park:
                marker.state = MarkerState.PARKED
                marker.held_at = goal
                self.events.append(ExecutorEvent("PARKED", self.sim.clock_ms, mid, goal))
            else:
                self.events.append(ExecutorEvent("ARRIVED", self.sim.clock_ms, mid, goal))
        self.active = None
        self._start_next()

    def _start_next(self) -> None:
        if self.queue:
            self.active = self.queue.popleft()
            self._tick_index = 0
            self._load_tick(0)
        else:
            self._load_idle()

    def _load_tick(self, tick_index: int) -> None:
        assert self.active is not None
        schedule = self.active.schedules[tick_index]
        targets = set(schedule.energized_ids(self.grid))
        targets |= self._hold_targets(exclude=set(self.active.plan.per_marker))
        targets |= self.manual_on
        self._install(targets)
        self._cycles_left = self.cycles_per_tick()

    def _load_idle(self) -> None:
        targets = self._hold_targets() | self.manual_on
        self._install(targets)
        self._cycles_left = 0

    def _hold_targets(self, exclude: set[int] | None = None) -> set[int]:
        held = set()
        for mid, marker in self.sim.markers.items():
            if exclude and mid in exclude:
                continue
            if marker.state is MarkerState.HELD and marker.held_at is not None:
                held.add(marker.held_at)
        self.manual_off &= held  # masks expire once nothing is held there
        return held - self.manual_off

    def _install(self, targets: set[int]) -> None:
        self._installed_targets = set(targets)
        if targets:
            schedule = schedule_frames(self.grid, targets, self.dwell_ms)
            self._frames = [self.sim.decode_pattern(p) for p, _ in schedule.frames]
            self.sim.hold_release_ms = max(100.0, schedule.cycle_ms + self.dwell_ms)
        else:
            self._frames = []
            self.sim.hold_release_ms = max(100.0, 2 * self.dwell_ms)
        self._frame_index = 0

    def _reload_current_schedule(self) -> None:
        if self.active is not None:
            cycles = self._cycles_left
            self._load_tick(self._tick_index)
            self._cycles_left = cycles
        else:
            self._load_idle()

    def _translate_sim_events(self) -> None:
        for ev in self.sim.drain_events():
            if ev.kind == "contention":
                self.events.append(
                    ExecutorEvent("CONTENTION", ev.clock_ms, ev.marker_id, ev.coil_id)
                )
            elif ev.kind == "snap" and self.active is None:
                # manual capture outside any plan
                self.events.append(ExecutorEvent("HELD", ev.clock_ms, ev.marker_id, ev.coil_id))
        if self.active is None:
            # released or newly captured markers change the idle hold set
            targets = self._hold_targets() | self.manual_on
            if targets != self._installed_targets:
                self._install(targets)

    def drain_events(self) -> list[ExecutorEvent]:
        events, self.events = self.events, []
        return events

    # ------------------------------------------------------------------
    # introspection

    def state_snapshot(self) -> dict:
        snap = self.sim.snapshot()
        snap["manual_on"] = sorted(self.manual_on)
        snap["executing"] = self.active.job_id if self.active else None
        snap["queued_jobs"] = len(self.queue)
        return snap


class FrameLogExecutor:
    """Open-loop stand-in for real hardware: frames go to a logger, marker
    positions are dead-reckoned from the plans themselves."""

    def __init__(self, grid: CoilGrid, dwell_ms: float = 20.0, logger: logging.Logger | None = None):
        self.grid = grid
        self.dwell_ms = float(dwell_ms)
        self.log = logger or logging.getLogger("coilboard.frames")
        self.manual_on: set[int] = set()
        self.markers: dict[int, int] = {}  # marker -> coil id
        self.parked: set[int] = set()
        self.clock_ms = 0.0
        self.queue: deque[PlanJob] = deque()
        self.active: PlanJob | None = None
        self.events: list[ExecutorEvent] = []
        self._job_counter = 0
        self._remaining_ms = 0.0

    def next_job_id(self) -> int:
        self._job_counter += 1
        return self._job_counter

    def place_marker(self, coil_id: int) -> int:
        self.grid.addr_of(coil_id)
        marker_id = len(self.markers)
        self.markers[marker_id] = coil_id
        return marker_id

    def submit(self, plan: MotionPlan, park: bool = False) -> PlanJob:
        job = PlanJob(self.next_job_id(), plan, compile_plan(self.grid, plan, self.dwell_ms), park)
        self.queue.append(job)
        if self.active is None:
            self._start_next()
        return job

    def set_coil(self, coil_id: int, on: bool) -> None:
        self.grid.addr_of(coil_id)
        if on:
            self.manual_on.add(coil_id)
        else:
            self.manual_on.discard(coil_id)
        self.log.info("manual coil %d %s", coil_id, "on" if on else "off")

    @property
    def busy(self) -> bool:
        return self.active is not None or bool(self.queue)

    def tick(self, sim_ms: float) -> None:
        self.clock_ms += sim_ms
        if self.active is None:
            return
        self._remaining_ms -= sim_ms
        if self._remaining_ms <= 0:
            self._finish_job()

    def run_until_idle(self, settle_ms: float = 0.0, max_ms: float = 600_000.0) -> None:
        spent = 0.0
        while self.busy and spent < max_ms:
            self.tick(max(self.dwell_ms, self._remaining_ms))
            spent += self.dwell_ms

    def _start_next(self) -> None:
        if not self.queue:
            return
        self.active = self.queue.popleft()
        cycles = max(1, math.ceil(100.0 / self.dwell_ms))
        self._remaining_ms = 0.0
        for schedule in self.active.schedules:
            for _ in range(cycles):
                self.log.info("%s", dump_frames(schedule))
            self._remaining_ms += cycles * max(schedule.cycle_ms, self.dwell_ms)

    def _finish_job(self) -> None:
        job = self.active
        assert job is not None
        job.done = True
        job.delivered = True
        for mid, goal in sorted(job.plan.goals().items()):
            if mid in self.markers:
                self.markers[mid] = goal
                if job.park:
                    self.parked.add(mid)
                    self.events.append(ExecutorEvent("PARKED", self.clock_ms, mid, goal))
                else:
                    self.parked.discard(mid)
                    self.events.append(ExecutorEvent("ARRIVED", self.clock_ms, mid, goal))
        self.active = None
        self._start_next()

    def drain_events(self) -> list[ExecutorEvent]:
        events, self.events = self.events, []
        return events

    def state_snapshot(self) -> dict:
        markers = []
        for mid in sorted(self.markers):
            cid = self.markers[mid]
            x, y = self.grid.center_of_id(cid)
            markers.append(
                {
                    "marker_id": mid,
                    "x_mm": x,
                    "y_mm": y,
                    "state": "PARKED" if mid in self.parked else "HELD",
                    "held_at": cid,
                }
            )
        return {
            "clock_ms": self.clock_ms,
            "markers": markers,
            "energized": sorted(self.manual_on),
            "duty_ms": {},
            "contention_count": 0,
            "separation_violations": 0,
            "manual_on": sorted(self.manual_on),
            "executing": self.active.job_id if self.active else None,
            "queued_jobs": len(self.queue),
        }
