"""Shortest zig-zag paths and collision-free multi-marker motion plans.

Planning runs on packed coil IDs over the integer half-pitch lattice, so all
separation checks are exact.  One planner tick moves a marker one inter-layer
hop (the capture interval).  Multi-marker plans are built marker-by-marker
against the trajectories already committed; a candidate move from c0 to c1
between ticks t and t+1 must keep c1 a full pitch away from every other
marker's position at t and t+1 *and* keep c0 a pitch away from their t+1
positions.  Those cross checks rule out swap conflicts and, because hops are
short relative to the pitch, also bound every mid-hop approach distance above
one pitch.
"""

from __future__ import annotations

import heapq
import itertools
import json
import math
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .driver import FrameSchedule, schedule_frames
from .errors import PlanningError, SeparationError
from .geometry import CoilAddress, CoilGrid

# Squared half-pitch distances: one pitch is 2 half-units.
_MIN_SEP_SQ = 4
# Off-lattice obstacles get extra clearance so a hop segment cannot dip
# inside the separation disc around them.
_FLOATER_CLEARANCE_SQ = 4.5

_EXPANSION_CAP = 15_000
_TOTAL_POPS_BUDGET = 30_000
MAX_PRIORITY_ORDERS = 24


class _ConcurrentBudget:
    """Shared cap on A* expansions across one plan_multi call, so a hard
    instance degrades to the sequential fallback instead of stalling."""

    def __init__(self, total: int):
        self.left = total

    @property
    def exhausted(self) -> bool:
        return self.left <= 0


class PlanStatus(str, Enum):
    COMPLETE = "COMPLETE"
    PARTIAL_FAILURE = "PARTIAL_FAILURE"


@dataclass
class MotionPlan:
    """Timed per-marker coil sequences; tick t holds each marker's cell."""

    per_marker: dict[int, list[tuple[int, int]]]  # marker -> [(coil_id, tick)]
    makespan_ticks: int
    status: PlanStatus
    unplanned: tuple[int, ...] = ()
    parking: bool = False

    def path_cells(self, marker_id: int) -> list[int]:
        return [cid for cid, _ in self.per_marker[marker_id]]

    def position_at(self, marker_id: int, tick: int) -> int:
        path = self.per_marker[marker_id]
        return path[min(tick, len(path) - 1)][0]

    def goals(self) -> dict[int, int]:
        return {mid: path[-1][0] for mid, path in self.per_marker.items()}

    def summary(self) -> dict:
        return {
            "status": self.status.value,
            "makespan_ticks": self.makespan_ticks,
            "parking": self.parking,
            "unplanned": list(self.unplanned),
            "markers": {
                str(mid): {"hops": _hop_count(path), "path": [c for c, _ in path]}
                for mid, path in sorted(self.per_marker.items())
            },
        }

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "makespan_ticks": self.makespan_ticks,
            "parking": self.parking,
            "unplanned": list(self.unplanned),
            "markers": {
                str(mid): [[cid, tick] for cid, tick in path]
                for mid, path in sorted(self.per_marker.items())
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MotionPlan":
        try:
            per_marker = {
                int(mid): [(int(cid), int(tick)) for cid, tick in path]
                for mid, path in data["markers"].items()
            }
            plan = cls(
                per_marker,
                int(data["makespan_ticks"]),
                PlanStatus(data["status"]),
                tuple(int(m) for m in data.get("unplanned", [])),
                bool(data.get("parking", False)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise PlanningError(f"malformed plan document: {exc}") from exc
        for mid, path in plan.per_marker.items():
            if [tick for _, tick in path] != list(range(len(path))):
                raise PlanningError(f"marker {mid} path ticks are not dense from 0")
        return plan

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "MotionPlan":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise PlanningError(f"plan document is not valid JSON: {exc}") from exc


def _hop_count(path: Sequence[tuple[int, int]]) -> int:
    return sum(1 for i in range(1, len(path)) if path[i][0] != path[i - 1][0])


# ---------------------------------------------------------------------------
# single-marker shortest path


def plan_path(grid: CoilGrid, start: CoilAddress | int, goal: CoilAddress | int) -> list[CoilAddress]:
    """Minimal-hop path on the inter-layer adjacency graph, start and goal
    inclusive.  Ties resolve toward lower packed IDs, so results are stable."""
    start_id = start if isinstance(start, int) else grid.coil_id(start)
    goal_id = goal if isinstance(goal, int) else grid.coil_id(goal)
    cells = _shortest_cells(grid, start_id, goal_id)
    if cells is None:
        raise PlanningError(f"coil {goal_id} is unreachable from {start_id}")
    return [grid.addr_of(cid) for cid in cells]


def _shortest_cells(grid: CoilGrid, start_id: int, goal_id: int) -> list[int] | None:
    grid.addr_of(start_id)
    grid.addr_of(goal_id)
    if start_id == goal_id:
        return [start_id]
    gx, gy = grid.half_center(goal_id)

    def h(cid: int) -> int:
        hx, hy = grid.half_center(cid)
        return max(abs(hx - gx), abs(hy - gy))

    dist = {start_id: 0}
    parent: dict[int, int] = {}
    heap = [(h(start_id), start_id)]
    while heap:
        f, cid = heapq.heappop(heap)
        g = dist[cid]
        if f > g + h(cid):
            continue  # stale entry
        if cid == goal_id:
            path = [cid]
            while path[-1] != start_id:
                path.append(parent[path[-1]])
            path.reverse()
            return path
        for nid in grid.neighbor_ids(cid):
            if nid not in dist or g + 1 < dist[nid]:
                dist[nid] = g + 1
                parent[nid] = cid
                heapq.heappush(heap, (g + 1 + h(nid), nid))
    return None


def _bfs_distances(grid: CoilGrid, source: int) -> dict[int, int]:
    table = grid.neighbors_table()
    dist = {source: 0}
    queue = deque([source])
    while queue:
        cid = queue.popleft()
        d = dist[cid] + 1
        for nid in table[cid]:
            if nid not in dist:
                dist[nid] = d
                queue.append(nid)
    return dist


# ---------------------------------------------------------------------------
# multi-marker prioritized planning


def _d2(a: tuple[float, float], b: tuple[float, float]) -> float:
    return (a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2


def _astar_timed(
    grid: CoilGrid,
    start: int,
    goal: int,
    hdist: Mapping[int, int],
    trajs: list[list[tuple[int, int]]],
    obstacles: list[tuple[float, float, float]],
    horizon: int,
    soft_cells: list[tuple[int, int]] = (),
    budget: "_ConcurrentBudget | None" = None,
) -> list[int] | None:
    """Time-expanded A*: returns cells at ticks 0..T or None.

    `soft_cells` are the start positions of markers not yet routed: landing
    within a pitch of one costs an extra tick, steering this path away so the
    waiting marker does not get pinned before it can leave.
    """
    halves = grid.half_centers()
    moves = grid.moves_table()
    goal_half = halves[goal]

    for ox, oy, clear_sq in obstacles:
        if _d2(goal_half, (ox, oy)) < clear_sq:
            return None  # goal permanently blocked
    # the marker rests on its goal after arriving, so it may not arrive while
    # any committed trajectory still passes within a pitch of the goal
    goal_free_from = 0
    for traj in trajs:
        for t in range(len(traj) - 1, -1, -1):
            if _d2(goal_half, traj[t]) < _MIN_SEP_SQ:
                goal_free_from = max(goal_free_from, t + 1)
                break
    horizon = max(horizon, goal_free_from + 8)

    depth = max([horizon] + [len(tr) for tr in trajs]) + 2
    occupied: list[list[tuple[int, int]]] = [[] for _ in range(depth)]
    for traj in trajs:
        last = traj[-1]
        for t in range(depth):
            occupied[t].append(traj[t] if t < len(traj) else last)

    brush_cache: dict[int, int] = {}

    def brush_cost(cid: int) -> int:
        cost = brush_cache.get(cid)
        if cost is None:
            p = halves[cid]
            cost = sum(1 for s in soft_cells if _d2(p, s) < _MIN_SEP_SQ)
            brush_cache[cid] = cost
        return cost

    start_h = hdist.get(start)
    if start_h is None:
        return None
    best_g = {(start, 0): 0}
    parent: dict[tuple[int, int], int] = {}
    heap = [(max(start_h, goal_free_from), start, 0, 0)]  # (f, cell, t, g)
    pops = 0
    while heap:
        f, cid, t, g = heapq.heappop(heap)
        pops += 1
        if budget is not None:
            budget.left -= 1
            if budget.left <= 0:
                return None
        if pops > _EXPANSION_CAP:
            return None
        if g > best_g.get((cid, t), g):
            continue  # stale
        if cid == goal and t >= goal_free_from:
            cells = [cid]
            tt = t
            while tt > 0:
                cells.append(parent[(cells[-1], tt)])
                tt -= 1
            cells.reverse()
            return cells
        if t >= horizon:
            continue
        p0 = halves[cid]
        now = occupied[t]
        nxt = occupied[t + 1]
        for nid in moves[cid]:
            nh = hdist.get(nid)
            if nh is None:
                continue
            p1 = halves[nid]
            ok = True
            for q in nxt:
                if (
                    (p1[0] - q[0]) ** 2 + (p1[1] - q[1]) ** 2 < _MIN_SEP_SQ
                    or (p0[0] - q[0]) ** 2 + (p0[1] - q[1]) ** 2 < _MIN_SEP_SQ
                ):
                    ok = False
                    break
            if ok:
                for q in now:
                    if (p1[0] - q[0]) ** 2 + (p1[1] - q[1]) ** 2 < _MIN_SEP_SQ:
                        ok = False
                        break
            if ok:
                for ox, oy, clear_sq in obstacles:
                    if (p1[0] - ox) ** 2 + (p1[1] - oy) ** 2 < clear_sq:
                        ok = False
                        break
            if not ok:
                continue
            ng = g + 1 + brush_cost(nid)
            state = (nid, t + 1)
            if ng >= best_g.get(state, 1 << 30):
                continue
            best_g[state] = ng
            parent[state] = cid
            heapq.heappush(heap, (max(ng + nh, goal_free_from), nid, t + 1, ng))
    return None


def _validate_cell_set(grid: CoilGrid, cells: Mapping[int, int], what: str) -> None:
    items = sorted(cells.items())
    for mid, cid in items:
        grid.addr_of(cid)
    for i, (mid_a, a) in enumerate(items):
        pa = grid.half_center(a)
        for mid_b, b in items[i + 1 :]:
            if a == b:
                raise PlanningError(
                    f"{what} of markers {mid_a} and {mid_b} use the same coil {a}"
                )
            if _d2(pa, grid.half_center(b)) < _MIN_SEP_SQ:
                raise SeparationError(
                    f"{what} of markers {mid_a} and {mid_b} are closer than one pitch"
                )


def _obstacle_entries(grid: CoilGrid, obstacles_mm: Iterable[tuple[float, float]]) -> list:
    entries = []
    half = grid.pitch_mm / 2.0
    for x, y in obstacles_mm:
        hx, hy = x / half, y / half
        on_lattice = abs(hx - round(hx)) < 1e-6 and abs(hy - round(hy)) < 1e-6
        entries.append((hx, hy, _MIN_SEP_SQ if on_lattice else _FLOATER_CLEARANCE_SQ))
    return entries


def plan_multi(
    grid: CoilGrid,
    goals: Mapping[int, CoilAddress | int],
    starts: Mapping[int, CoilAddress | int],
    *,
    obstacles_mm: Iterable[tuple[float, float]] = (),
    sequential: bool = False,
    max_orders: int | None = None,
) -> MotionPlan:
    """Plan all markers to distinct goals without ever breaking separation.

    Markers are routed one at a time against the already-committed
    trajectories, retrying priority permutations on failure.  `sequential`
    moves one marker at a time instead (a fidelity mode for hardware that
    never drives two markers at once).  Returns PARTIAL_FAILURE listing the
    markers left unplanned when every attempted order fails.
    """
    goal_ids = {mid: (g if isinstance(g, int) else grid.coil_id(g)) for mid, g in goals.items()}
    start_ids = {mid: (s if isinstance(s, int) else grid.coil_id(s)) for mid, s in starts.items()}
    if set(goal_ids) != set(start_ids):
        raise PlanningError("starts and goals must cover the same marker ids")
    if not goal_ids:
        return MotionPlan({}, 0, PlanStatus.COMPLETE)
    _validate_cell_set(grid, goal_ids, "goals")
    _validate_cell_set(grid, start_ids, "starts")
    obstacles = _obstacle_entries(grid, obstacles_mm)

    hdists: dict[int, dict[int, int]] = {}
    base_dist: dict[int, int] = {}
    for mid in sorted(goal_ids):
        hd = _bfs_distances(grid, goal_ids[mid])
        if start_ids[mid] not in hd:
            raise PlanningError(
                f"goal {goal_ids[mid]} is unreachable from start {start_ids[mid]}"
            )
        hdists[mid] = hd
        base_dist[mid] = hd[start_ids[mid]]

    k = len(goal_ids)
    horizon = max(base_dist.values()) + 4 * k + 12
    cap = max_orders if max_orders is not None else min(math.factorial(k), MAX_PRIORITY_ORDERS)

    if sequential:
        paths = _plan_sequential(grid, start_ids, goal_ids, hdists, obstacles)
        if paths is not None:
            return _finish_plan(paths, PlanStatus.COMPLETE)
        return _finish_plan({}, PlanStatus.PARTIAL_FAILURE, tuple(sorted(goal_ids)))

    budget = _ConcurrentBudget(_TOTAL_POPS_BUDGET)

    def attempt(order: tuple[int, ...]):
        trajs: list[list[tuple[int, int]]] = []
        paths: dict[int, list[int]] = {}
        for pos, mid in enumerate(order):
            soft = [grid.half_center(start_ids[m]) for m in order[pos + 1 :]]
            cells = _astar_timed(
                grid, start_ids[mid], goal_ids[mid], hdists[mid], trajs, obstacles,
                horizon, soft, budget,
            )
            if cells is None:
                return paths, mid
            paths[mid] = cells
            trajs.append([grid.half_center(c) for c in cells])
        return paths, None

    # Priority seeds: longest haul first, markers with crowded goals first
    # (they must claim their spot before neighbors wall it off), shortest
    # haul first (fills clusters inside-out), cluster boundary first, and
    # plain id order.  A failed marker bubbles to the front of its order; on
    # a repeat we move to the next seed, then plain permutations.
    mids = sorted(goal_ids)
    cx = sum(grid.half_center(start_ids[m])[0] for m in mids) / k
    cy = sum(grid.half_center(start_ids[m])[1] for m in mids) / k
    peel = {m: _d2(grid.half_center(start_ids[m]), (cx, cy)) for m in mids}
    crowd = {
        m: sum(
            1
            for o in mids
            if o != m and _d2(grid.half_center(goal_ids[m]), grid.half_center(goal_ids[o])) <= 36
        )
        for m in mids
    }
    seeds: list[tuple[int, ...]] = []
    for key in (
        lambda m: (-base_dist[m], m),
        lambda m: (-crowd[m], base_dist[m], m),
        lambda m: (base_dist[m], m),
        lambda m: (-peel[m], m),
        lambda m: m,
    ):
        order = tuple(sorted(mids, key=key))
        if order not in seeds:
            seeds.append(order)
    seeds += list(itertools.islice(itertools.permutations(mids), 64))

    tried: set[tuple[int, ...]] = set()
    best_paths: dict[int, list[int]] = {}
    pending = deque(seeds)
    order = pending.popleft()
    while len(tried) < cap and not budget.exhausted:
        while order in tried:
            if not pending:
                break
            order = pending.popleft()
        if order in tried:
            break
        tried.add(order)
        paths, failed = attempt(order)
        if failed is None:
            return _finish_plan(paths, PlanStatus.COMPLETE)
        if len(paths) > len(best_paths):
            best_paths = paths
        order = (failed, *(m for m in order if m != failed))

    # concurrent routing failed: move one marker at a time instead, trading
    # makespan for robustness in packed clusters
    paths = _plan_sequential(grid, start_ids, goal_ids, hdists, obstacles)
    if paths is not None:
        return _finish_plan(paths, PlanStatus.COMPLETE)
    unplanned = tuple(sorted(set(goal_ids) - set(best_paths)))
    return _finish_plan(best_paths, PlanStatus.PARTIAL_FAILURE, unplanned)


def _fill_order(
    grid: CoilGrid,
    goal_cells: Mapping[int, int],
    pinned_cells: Iterable[int] = (),
) -> dict[int, int]:
    """Rank goals so the deepest cell of any packed cluster fills first.

    Simulates unloading the fully-occupied goal configuration: repeatedly
    remove a marker that has a free exit hop.  Filling in the reverse of that
    unload order gives every marker a free approach hop at its fill time.
    `pinned_cells` (markers that never move) stay occupied throughout.
    """
    halves = grid.half_centers()
    table = grid.neighbors_table()
    pinned = [halves[c] for c in pinned_cells]
    occupied = dict(goal_cells)
    unload: list[int] = []
    while occupied:
        peeled = None
        for mid in sorted(occupied):
            cell = occupied[mid]
            for exit_cell in table[cell]:
                p = halves[exit_cell]
                if all(_d2(p, q) >= _MIN_SEP_SQ for q in pinned) and all(
                    _d2(p, halves[c]) >= _MIN_SEP_SQ
                    for m, c in occupied.items()
                    if m != mid
                ):
                    peeled = mid
                    break
            if peeled is not None:
                break
        if peeled is None:
            unload.extend(sorted(occupied))
            break
        unload.append(peeled)
        del occupied[peeled]
    return {mid: len(unload) - 1 - i for i, mid in enumerate(unload)}


def _astar_static(grid, start, goal, hdist, keep_out):
    """Shortest path with every keep-out disc avoided (nothing else moves)."""
    halves = grid.half_centers()
    table = grid.neighbors_table()

    def clear(cid: int) -> bool:
        p = halves[cid]
        return all((p[0] - ox) ** 2 + (p[1] - oy) ** 2 >= c for ox, oy, c in keep_out)

    if not clear(goal):
        return None
    dist = {start: 0}
    parent: dict[int, int] = {}
    heap = [(hdist[start], start)]
    while heap:
        f, cid = heapq.heappop(heap)
        if cid == goal:
            path = [cid]
            while path[-1] != start:
                path.append(parent[path[-1]])
            path.reverse()
            return path
        g = dist[cid]
        for nid in table[cid]:
            if nid in dist or nid not in hdist or not clear(nid):
                continue
            dist[nid] = g + 1
            parent[nid] = cid
            heapq.heappush(heap, (g + 1 + hdist[nid], nid))
    return None


def _plan_sequential(grid, start_ids, goal_ids, hdists, obstacles):
    """Move exactly one marker at a time, peeling in whatever order works.

    Each round routes a remaining marker that (a) can reach its goal with
    everyone else treated as a static keep-out and (b) does not strand any
    other remaining marker by occupying its goal's last approach.  Markers
    blocked by neighbors simply wait for a later round, which handles packed
    clusters that defeat fixed priority orders.
    """
    mids = sorted(goal_ids)
    halves = grid.half_centers()
    stay_put = [m for m in mids if start_ids[m] == goal_ids[m]]
    fill_rank = _fill_order(
        grid,
        {m: goal_ids[m] for m in mids if m not in stay_put},
        pinned_cells=[goal_ids[m] for m in stay_put],
    )
    positions = {m: halves[start_ids[m]] for m in mids}
    paths: dict[int, list[int]] = {m: [goal_ids[m]] for m in stay_put}
    remaining = [m for m in mids if m not in stay_put]
    offset = 0

    def keep_out_for(mid, pos_map):
        return [
            (x, y, float(_MIN_SEP_SQ))
            for m, (x, y) in sorted(pos_map.items())
            if m != mid
        ] + obstacles

    def commit(mid, route):
        nonlocal offset
        paths[mid] = [route[0]] * offset + route
        offset += len(route) - 1
        positions[mid] = halves[goal_ids[mid]]
        remaining.remove(mid)

    while remaining:
        scan = sorted(remaining, key=lambda m: (fill_rank[m], m))
        routable: list[tuple[int, list[int]]] = []
        for mid in scan:
            route = _astar_static(
                grid, start_ids[mid], goal_ids[mid], hdists[mid], keep_out_for(mid, positions)
            )
            if route is not None:
                routable.append((mid, route))
        if not routable:
            return None
        chosen = None
        for mid, route in routable:
            after = dict(positions)
            after[mid] = halves[goal_ids[mid]]
            if all(
                _astar_static(
                    grid, start_ids[o], goal_ids[o], hdists[o], keep_out_for(o, after)
                )
                is not None
                for o in remaining
                if o != mid
            ):
                chosen = (mid, route)
                break
        if chosen is None:
            chosen = routable[0]  # no safe pick; take the first and hope later rounds recover
        commit(*chosen)
    return paths


def _finish_plan(
    paths: dict[int, list[int]],
    status: PlanStatus,
    unplanned: tuple[int, ...] = (),
) -> MotionPlan:
    per_marker = {
        mid: [(cid, t) for t, cid in enumerate(cells)] for mid, cells in paths.items()
    }
    makespan = max((len(c) - 1 for c in paths.values()), default=0)
    return MotionPlan(per_marker, makespan, status, unplanned)


# ---------------------------------------------------------------------------
# compilation and parking


def compile_plan(grid: CoilGrid, plan: MotionPlan, dwell_ms: float) -> list[FrameSchedule]:
    """One frame schedule per tick: tick 0 settles every marker onto its start
    coil, later ticks energize each marker's next coil (movers) or current
    coil (holds).  Each schedule is meant to run for a full capture interval."""
    if plan.status is not PlanStatus.COMPLETE:
        raise PlanningError("only COMPLETE plans can be compiled")
    for mid in plan.per_marker:
        for cid in plan.path_cells(mid):
            grid.addr_of(cid)
    schedules = []
    for tick in range(plan.makespan_ticks + 1):
        targets = {plan.position_at(mid, tick) for mid in plan.per_marker}
        schedules.append(schedule_frames(grid, targets, dwell_ms))
    return schedules


_CORNERS = ("sw", "se", "nw", "ne")


def park_all(
    grid: CoilGrid,
    marker_cells: Mapping[int, int] | None = None,
    *,
    state=None,
    corner: str = "sw",
    region_pitches: float = 5.0,
) -> MotionPlan:
    """Route every marker into the corner parking region, one at a time.

    Parking cells expand outward from the chosen corner, filtered to pairwise
    separation.  If every marker already rests on a parking cell the plan is
    empty.  Otherwise markers loitering inside the region are first staged
    just outside it, then the cells fill corner-outward (each new cell always
    has an outward approach clear of the ones already filled), nearest
    remaining marker first.
    """
    if corner not in _CORNERS:
        raise PlanningError(f"corner must be one of {_CORNERS}, got {corner!r}")
    if marker_cells is None:
        if state is None:
            raise PlanningError("park_all needs marker cells or a sim state")
        marker_cells = {
            mid: (m.held_at if m.held_at is not None else grid.nearest_coil_id(m.x, m.y))
            for mid, m in state.markers.items()
        }
    if not marker_cells:
        return MotionPlan({}, 0, PlanStatus.COMPLETE, parking=True)
    for cid in marker_cells.values():
        grid.addr_of(cid)

    halves = grid.half_centers()
    xmin, ymin, xmax, ymax = grid.board_bounds()
    cx = xmin if "w" in corner else xmax
    cy = ymin if "s" in corner else ymax
    reach = region_pitches * grid.pitch_mm + 1e-9

    candidates = []
    for cid in range(grid.coil_count):
        x, y = grid.center_of_id(cid)
        if abs(x - cx) <= reach and abs(y - cy) <= reach:
            candidates.append(((x - cx) ** 2 + (y - cy) ** 2, cid))
    candidates.sort()
    slots: list[int] = []
    slot_pos: list[tuple[int, int]] = []
    for _, cid in candidates:
        p = halves[cid]
        if all(_d2(p, q) >= _MIN_SEP_SQ for q in slot_pos):
            slots.append(cid)
            slot_pos.append(p)

    if set(marker_cells.values()) <= set(slots):
        # already parked: nothing to move
        return MotionPlan(
            {mid: [(c, 0)] for mid, c in marker_cells.items()},
            0,
            PlanStatus.COMPLETE,
            parking=True,
        )

    k = len(marker_cells)
    used_slots = slots[:k]
    unparkable = sorted(marker_cells)[len(slots):] if k > len(slots) else []

    positions = {mid: halves[c] for mid, c in marker_cells.items()}
    current = dict(marker_cells)
    paths: dict[int, list[int]] = {mid: [marker_cells[mid]] for mid in marker_cells}
    offset = 0

    def route(mid: int, goal: int) -> bool:
        nonlocal offset
        keep_out = [
            (x, y, float(_MIN_SEP_SQ))
            for m, (x, y) in sorted(positions.items())
            if m != mid
        ]
        hdist = _bfs_distances(grid, goal)
        if current[mid] not in hdist:
            return False
        cells = _astar_static(grid, current[mid], goal, hdist, keep_out)
        if cells is None:
            return False
        paths[mid].extend([paths[mid][-1]] * (offset - (len(paths[mid]) - 1)))
        paths[mid].extend(cells[1:])
        offset += len(cells) - 1
        positions[mid] = halves[goal]
        current[mid] = goal
        return True

    # stage markers that sit in or hug the parking region out past a margin
    margin = reach + grid.pitch_mm
    in_way = [
        mid
        for mid in sorted(marker_cells)
        if mid not in unparkable
        and abs(grid.center_of_id(current[mid])[0] - cx) <= margin
        and abs(grid.center_of_id(current[mid])[1] - cy) <= margin
    ]
    failed: set[int] = set()
    for mid in in_way:
        staging = sorted(
            (
                (_d2(halves[cid], positions[mid]), cid)
                for cid in range(grid.coil_count)
                if abs(grid.center_of_id(cid)[0] - cx) > margin
                or abs(grid.center_of_id(cid)[1] - cy) > margin
            ),
        )
        placed = False
        for _, cand in staging:
            p = halves[cand]
            if any(_d2(p, q) < _MIN_SEP_SQ for m, q in positions.items() if m != mid):
                continue
            if route(mid, cand):
                placed = True
                break
        if not placed:
            failed.add(mid)

    # fill slots corner-outward, nearest marker first
    remaining = [m for m in sorted(marker_cells) if m not in unparkable and m not in failed]
    for slot in used_slots:
        if not remaining:
            break
        sp = halves[slot]
        order = sorted(remaining, key=lambda m: (_d2(positions[m], sp), m))
        filled = None
        for mid in order:
            if route(mid, slot):
                filled = mid
                break
        if filled is None:
            failed.add(order[0])
            remaining.remove(order[0])
            continue
        remaining.remove(filled)

    bad = tuple(sorted(set(unparkable) | failed))
    status = PlanStatus.PARTIAL_FAILURE if bad else PlanStatus.COMPLETE
    plan_paths = {
        mid: cells for mid, cells in paths.items() if mid not in bad
    }
    per_marker = {
        mid: [(cid, t) for t, cid in enumerate(cells)] for mid, cells in plan_paths.items()
    }
    makespan = max((len(c) - 1 for c in plan_paths.values()), default=0)
    return MotionPlan(per_marker, makespan, status, bad, parking=True)
