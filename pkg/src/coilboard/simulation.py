"""Discrete-time magnet simulation over a coil grid.

Markers are passive magnets.  While a coil is energized it attracts the
single nearest marker inside its reach; position converges exponentially and
the marker snaps to the coil center once it has accumulated a full capture
interval of coil on-time (or is already within the snap tolerance).  A held
marker is released when its coil has been off for longer than the hold-release
window, which callers running a multiplexed scan should widen to the scan
cycle length (see `hold_release_ms`).

Per-coil duty is tracked two ways: a decaying on-time accumulator (a crude
heat proxy) and merged on-intervals over a trailing window for duty-fraction
queries.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .driver import DrivePattern
from .errors import NotFoundError, SeparationError, SimulationError
from .geometry import CoilAddress, CoilGrid


class MarkerState(str, Enum):
    FREE = "FREE"
    HELD = "HELD"
    MOVING = "MOVING"
    PARKED = "PARKED"


@dataclass(frozen=True)
class SimParams:
    """Capture dynamics constants.

    capture time: cumulative coil on-time after which a marker snaps to the
    coil center; the approach time constant is a third of it so motion is
    visibly smooth at UI timescales.
    """

    t_snap_ms: float = 100.0
    snap_epsilon_mm: float = 0.1
    duty_window_ms: float = 10_000.0

    @property
    def tau_ms(self) -> float:
        return self.t_snap_ms / 3.0


@dataclass(frozen=True)
class SimEvent:
    kind: str  # "snap" | "contention" | "release" | "separation"
    clock_ms: float
    marker_id: int
    coil_id: int | None


class Marker:
    __slots__ = ("marker_id", "x", "y", "state", "held_at", "capture_coil", "capture_on_ms")

    def __init__(self, marker_id: int, x: float, y: float):
        self.marker_id = marker_id
        self.x = x
        self.y = y
        self.state = MarkerState.FREE
        self.held_at: int | None = None
        self.capture_coil: int | None = None
        self.capture_on_ms = 0.0

    def as_dict(self) -> dict:
        return {
            "marker_id": self.marker_id,
            "x_mm": self.x,
            "y_mm": self.y,
            "state": self.state.value,
            "held_at": self.held_at,
        }


class _CoilRecord:
    __slots__ = ("on_until", "streak_start", "duty_value", "intervals")

    def __init__(self) -> None:
        self.on_until = -math.inf
        self.streak_start = 0.0
        self.duty_value = 0.0
        self.intervals: deque[list[float]] = deque()


PreparedFrame = tuple[tuple[int, float, float], ...]  # (coil_id, cx, cy) per coil


class SimState:
    """Mutable simulation state, owned by exactly one stepping loop.

    Readers should take `snapshot()` copies; the stepping owner may mutate
    freely between snapshots.
    """

    def __init__(self, grid: CoilGrid, params: SimParams | None = None):
        self.grid = grid
        self.params = params or SimParams()
        self.clock_ms = 0.0
        self.markers: dict[int, Marker] = {}
        self.hold_release_ms = max(100.0, grid.profile.scan_period_ms[1])
        self._next_marker_id = 0
        self._records: dict[int, _CoilRecord] = {}
        self._energized_now: tuple[int, ...] = ()
        self._last_dt = 0.0
        self._events: list[SimEvent] = []
        self._violating_pairs: set[tuple[int, int]] = set()
        self.contention_count = 0
        self.separation_violations = 0

        pitch = grid.pitch_mm
        self.attraction_radius_mm = pitch / math.sqrt(2.0)
        self.min_separation_mm = pitch
        self._radius_sq = pitch * pitch / 2.0
        self._min_sep_sq = (pitch - 1e-6) ** 2
        self._snap_eps_sq = self.params.snap_epsilon_mm**2

    # ------------------------------------------------------------------
    # marker management

    def place_marker(self, x_mm: float, y_mm: float) -> int:
        if not self.grid.on_board(x_mm, y_mm):
            raise SimulationError(f"({x_mm}, {y_mm}) mm is off the board")
        for other in self.markers.values():
            if (other.x - x_mm) ** 2 + (other.y - y_mm) ** 2 < self._min_sep_sq:
                raise SeparationError(
                    f"({x_mm}, {y_mm}) mm is within {self.min_separation_mm:.3f} mm "
                    f"of marker {other.marker_id}"
                )
        marker_id = self._next_marker_id
        self._next_marker_id += 1
        self.markers[marker_id] = Marker(marker_id, float(x_mm), float(y_mm))
        return marker_id

    def marker(self, marker_id: int) -> Marker:
        try:
            return self.markers[marker_id]
        except KeyError:
            raise NotFoundError(f"unknown marker {marker_id}") from None

    def perturb(self, marker_id: int, dx_mm: float, dy_mm: float) -> None:
        """Displace a marker externally (a touch).  A held marker pushed past
        the attraction radius comes free; inside it, the hold coil will pull
        it back over subsequent steps."""
        m = self.marker(marker_id)
        if dx_mm == 0 and dy_mm == 0:
            return
        m.x += dx_mm
        m.y += dy_mm
        offset_sq = dx_mm * dx_mm + dy_mm * dy_mm
        m.capture_on_ms = 0.0
        if m.state is MarkerState.HELD:
            if offset_sq >= self._radius_sq:
                m.state = MarkerState.FREE
                m.held_at = None
                m.capture_coil = None
            else:
                m.capture_coil = m.held_at
        elif m.state is MarkerState.PARKED:
            # no hold current at a parking spot: any push frees the marker
            m.state = MarkerState.FREE
            m.held_at = None
            m.capture_coil = None

    # ------------------------------------------------------------------
    # stepping

    def prepare(self, coil_ids: Iterable[int]) -> PreparedFrame:
        """Resolve coil centers once so a frame can be stepped repeatedly."""
        return tuple(
            (cid, *self.grid.center_of_id(cid)) for cid in sorted(set(coil_ids))
        )

    def decode_pattern(self, pattern: DrivePattern) -> PreparedFrame:
        ids = [
            self.grid.coil_id(CoilAddress(pattern.module_id, pattern.layer, r, c))
            for r, c in pattern.energized()
        ]
        return self.prepare(ids)

    def step(self, pattern: DrivePattern | None, dt_ms: float) -> "SimState":
        """Advance one frame: attract, snap, release, and account duty."""
        prepared = self.decode_pattern(pattern) if pattern is not None else ()
        return self.step_energized(prepared, dt_ms)

    def step_energized(self, prepared: PreparedFrame, dt_ms: float) -> "SimState":
        if dt_ms <= 0:
            raise SimulationError(f"dt must be positive, got {dt_ms}")
        t0 = self.clock_ms
        t1 = t0 + dt_ms
        self._last_dt = dt_ms

        for cid, _, _ in prepared:
            self._coil_on(cid, t0, t1, dt_ms)

        # Each marker is pulled only when exactly one energized coil reaches it.
        claims: dict[int, list[tuple[float, int, float, float]]] = {}
        for mid in sorted(self.markers):
            m = self.markers[mid]
            hits = []
            for cid, cx, cy in prepared:
                d2 = (m.x - cx) ** 2 + (m.y - cy) ** 2
                if d2 <= self._radius_sq:
                    hits.append((d2, cid, cx, cy))
            if len(hits) == 1:
                d2, cid, cx, cy = hits[0]
                claims.setdefault(cid, []).append((d2, mid, cx, cy))

        for cid in sorted(claims):
            contenders = sorted(claims[cid])
            d2, mid, cx, cy = contenders[0]
            self._attract(self.markers[mid], cid, cx, cy, dt_ms, t1)
            for _, loser, _, _ in contenders[1:]:
                self.contention_count += 1
                self._events.append(SimEvent("contention", t1, loser, cid))

        for mid in sorted(self.markers):
            m = self.markers[mid]
            if m.state is MarkerState.HELD and m.held_at is not None:
                rec = self._records.get(m.held_at)
                last_on = rec.on_until if rec else -math.inf
                if t1 - last_on > self.hold_release_ms:
                    m.state = MarkerState.FREE
                    coil = m.held_at
                    m.held_at = None
                    m.capture_coil = None
                    m.capture_on_ms = 0.0
                    self._events.append(SimEvent("release", t1, mid, coil))

        self._scan_separation(t1)
        self._energized_now = tuple(cid for cid, _, _ in prepared)
        self.clock_ms = t1
        return self

    def _attract(self, m: Marker, cid: int, cx: float, cy: float, dt: float, now: float) -> None:
        if m.capture_coil != cid:
            m.capture_coil = cid
            m.capture_on_ms = 0.0
        if m.state is MarkerState.HELD:
            if m.held_at != cid:
                m.state = MarkerState.MOVING
                m.held_at = None
        elif m.state is not MarkerState.MOVING:
            m.state = MarkerState.MOVING
        m.capture_on_ms += dt
        factor = math.exp(-dt / self.params.tau_ms)
        nx = cx + (m.x - cx) * factor
        ny = cy + (m.y - cy) * factor
        d2 = (nx - cx) ** 2 + (ny - cy) ** 2
        if m.capture_on_ms >= self.params.t_snap_ms - 1e-9 or d2 < self._snap_eps_sq:
            m.x, m.y = cx, cy
            if m.state is not MarkerState.HELD:
                m.state = MarkerState.HELD
                m.held_at = cid
                self._events.append(SimEvent("snap", now, m.marker_id, cid))
        else:
            m.x, m.y = nx, ny

    def _scan_separation(self, now: float) -> None:
        mids = sorted(self.markers)
        current: set[tuple[int, int]] = set()
        for i, a in enumerate(mids):
            ma = self.markers[a]
            for b in mids[i + 1 :]:
                mb = self.markers[b]
                d2 = (ma.x - mb.x) ** 2 + (ma.y - mb.y) ** 2
                if d2 < self._min_sep_sq:
                    current.add((a, b))
        for pair in sorted(current - self._violating_pairs):
            self.separation_violations += 1
            self._events.append(SimEvent("separation", now, pair[0], None))
        self._violating_pairs = current

    # ------------------------------------------------------------------
    # coil accounting

    def _coil_on(self, cid: int, t0: float, t1: float, dt: float) -> None:
        rec = self._records.get(cid)
        if rec is None:
            rec = self._records[cid] = _CoilRecord()
            rec.streak_start = t0
        gap = t0 - rec.on_until
        if gap > 1e-9:
            rec.duty_value = max(0.0, rec.duty_value - gap)  # linear cool-down
            if gap >= dt - 1e-9:
                rec.streak_start = t0
        rec.duty_value += dt
        if rec.intervals and rec.intervals[-1][1] >= t0 - 1e-9:
            rec.intervals[-1][1] = t1
        else:
            rec.intervals.append([t0, t1])
        horizon = t1 - self.params.duty_window_ms - 1000.0
        while rec.intervals and rec.intervals[0][1] < horizon:
            rec.intervals.popleft()
        rec.on_until = t1

    def coil_duty(self, coil: CoilAddress | int) -> tuple[float, float]:
        """(on-fraction over the trailing window, current continuous on-time ms).

        Continuity tolerates gaps shorter than one step; a full missed step
        resets the streak.
        """
        cid = coil if isinstance(coil, int) else self.grid.coil_id(coil)
        self.grid.addr_of(cid)  # validates
        rec = self._records.get(cid)
        if rec is None:
            return (0.0, 0.0)
        now = self.clock_ms
        window = min(now, self.params.duty_window_ms)
        if window <= 0:
            return (0.0, 0.0)
        wstart = now - window
        on_ms = 0.0
        for start, end in rec.intervals:
            on_ms += max(0.0, min(end, now) - max(start, wstart))
        gap_now = now - rec.on_until
        if gap_now >= max(self._last_dt, 1e-9) - 1e-9:
            continuous = 0.0
        else:
            continuous = rec.on_until - rec.streak_start
        return (min(1.0, on_ms / window), continuous)

    def duty_map(self) -> dict[int, float]:
        """Decayed on-time accumulator per touched coil (heat proxy, ms)."""
        out = {}
        for cid, rec in self._records.items():
            value = rec.duty_value - max(0.0, self.clock_ms - rec.on_until)
            if value > 0:
                out[cid] = value
        return out

    # ------------------------------------------------------------------
    # introspection

    @property
    def energized(self) -> tuple[int, ...]:
        """Coils energized during the most recent step."""
        return self._energized_now

    def drain_events(self) -> list[SimEvent]:
        events, self._events = self._events, []
        return events

    def snapshot(self) -> dict:
        return {
            "clock_ms": self.clock_ms,
            "markers": [self.markers[mid].as_dict() for mid in sorted(self.markers)],
            "energized": sorted(self._energized_now),
            "duty_ms": {str(k): round(v, 3) for k, v in sorted(self.duty_map().items())},
            "contention_count": self.contention_count,
            "separation_violations": self.separation_violations,
        }
