"""Shortest paths, multi-marker coordination, compilation, parking."""

import random
from collections import deque

import pytest

from coilboard import (
    CoilAddress,
    Layer,
    MarkerState,
    MotionPlan,
    PlanningError,
    PlanStatus,
    SimState,
    build_grid,
    compile_plan,
    park_all,
    plan_multi,
    plan_path,
)
from coilboard.executor import SimExecutor


def bfs_oracle(grid, src):
    dist = {src: 0}
    q = deque([src])
    while q:
        c = q.popleft()
        for n in grid.neighbor_ids(c):
            if n not in dist:
                dist[n] = dist[c] + 1
                q.append(n)
    return dist


def sample_separated_cells(grid, rng, n):
    halves = grid.half_centers()
    cells = []
    while len(cells) < n:
        cid = rng.randrange(grid.coil_count)
        p = halves[cid]
        if all((p[0] - halves[c][0]) ** 2 + (p[1] - halves[c][1]) ** 2 >= 4 for c in cells):
            cells.append(cid)
    return cells


@pytest.fixture
def g4():
    return build_grid(4, 4, 40)


@pytest.fixture
def g16():
    return build_grid(16, 16, 150)


class TestPlanPath:
    def test_identity(self, g4):
        a = CoilAddress("m0", Layer.TOP, 2, 2)
        assert plan_path(g4, a, a) == [a]

    def test_two_hops_via_bottom(self, g4):
        a = CoilAddress("m0", Layer.TOP, 0, 0)
        b = CoilAddress("m0", Layer.TOP, 0, 1)
        path = plan_path(g4, a, b)
        assert len(path) == 3
        assert path[0] == a and path[-1] == b
        assert path[1].layer is Layer.BOTTOM

    def test_corner_to_corner_matches_oracle(self, g4):
        a = CoilAddress("m0", Layer.TOP, 0, 0)
        b = CoilAddress("m0", Layer.TOP, 3, 3)
        path = plan_path(g4, a, b)
        oracle = bfs_oracle(g4, g4.coil_id(a))
        assert len(path) == oracle[g4.coil_id(b)] + 1

    def test_layers_alternate(self, g16):
        rng = random.Random(7)
        for _ in range(50):
            s, g = rng.randrange(g16.coil_count), rng.randrange(g16.coil_count)
            path = plan_path(g16, s, g)
            for prev, cur in zip(path, path[1:]):
                assert prev.layer is not cur.layer

    def test_deterministic(self, g16):
        a = CoilAddress("m0", Layer.TOP, 2, 3)
        b = CoilAddress("m0", Layer.BOTTOM, 11, 12)
        assert plan_path(g16, a, b) == plan_path(g16, a, b)


class TestPlanMulti:
    def test_single_marker_reduces_to_plan_path(self, g16):
        s = g16.coil_id(CoilAddress("m0", Layer.TOP, 1, 1))
        g = g16.coil_id(CoilAddress("m0", Layer.TOP, 6, 4))
        plan = plan_multi(g16, {0: g}, {0: s})
        assert plan.status is PlanStatus.COMPLETE
        single = [g16.coil_id(a) for a in plan_path(g16, s, g)]
        assert plan.path_cells(0) == single
        assert [t for _, t in plan.per_marker[0]] == list(range(len(single)))

    def test_corridor_swap(self, g16):
        # two markers exchange ends of a short row; one must side-step
        a = g16.coil_id(CoilAddress("m0", Layer.TOP, 8, 4))
        b = g16.coil_id(CoilAddress("m0", Layer.TOP, 8, 7))
        plan = plan_multi(g16, {0: b, 1: a}, {0: a, 1: b})
        assert plan.status is PlanStatus.COMPLETE
        assert_plan_invariants(g16, plan)
        assert simulate_plan(g16, plan, {0: a, 1: b})

    def test_duplicate_goals_rejected(self, g16):
        g = g16.coil_id(CoilAddress("m0", Layer.TOP, 5, 5))
        with pytest.raises(PlanningError):
            plan_multi(g16, {0: g, 1: g}, {0: 0, 1: 4})

    def test_deterministic(self, g16):
        rng = random.Random(3)
        starts = dict(enumerate(sample_separated_cells(g16, rng, 5)))
        goals = dict(enumerate(sample_separated_cells(g16, rng, 5)))
        p1 = plan_multi(g16, goals, starts)
        p2 = plan_multi(g16, goals, starts)
        assert p1.to_dict() == p2.to_dict()

    def test_sequential_mode(self, g16):
        rng = random.Random(11)
        starts = dict(enumerate(sample_separated_cells(g16, rng, 4)))
        goals = dict(enumerate(sample_separated_cells(g16, rng, 4)))
        plan = plan_multi(g16, goals, starts, sequential=True)
        assert plan.status is PlanStatus.COMPLETE
        assert_plan_invariants(g16, plan)
        assert simulate_plan(g16, plan, starts)


def assert_plan_invariants(grid, plan):
    halves = grid.half_centers()
    for mid, path in plan.per_marker.items():
        cells = [c for c, _ in path]
        for prev, cur in zip(cells, cells[1:]):
            if prev != cur:
                assert cur in grid.neighbor_ids(prev)
    for t in range(plan.makespan_ticks + 1):
        positions = [halves[plan.position_at(mid, t)] for mid in sorted(plan.per_marker)]
        for i, p in enumerate(positions):
            for q in positions[i + 1 :]:
                assert (p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2 >= 4


def simulate_plan(grid, plan, starts, dwell=50.0):
    sim = SimState(grid)
    for mid in sorted(starts):
        sim.place_marker(*grid.center_of_id(starts[mid]))
    ex = SimExecutor(sim, dwell_ms=dwell)
    job = ex.submit(plan)
    ex.run_until_idle()
    if not job.delivered or sim.contention_count or sim.separation_violations:
        return False
    for mid, goal in plan.goals().items():
        gx, gy = grid.center_of_id(goal)
        m = sim.markers[mid]
        if (m.x - gx) ** 2 + (m.y - gy) ** 2 > 1e-9:
            return False
    return True


class TestCompilePlan:
    def test_decodes_to_path_coils(self, g16):
        s = g16.coil_id(CoilAddress("m0", Layer.TOP, 0, 0))
        g = g16.coil_id(CoilAddress("m0", Layer.TOP, 0, 1))
        plan = plan_multi(g16, {0: g}, {0: s})
        schedules = compile_plan(g16, plan, 20)
        assert len(schedules) >= 2
        union = set()
        for sched in schedules:
            union |= sched.energized_ids(g16)
        assert union == set(plan.path_cells(0))

    def test_hold_only_for_trivial_plan(self, g16):
        s = g16.coil_id(CoilAddress("m0", Layer.TOP, 3, 3))
        plan = plan_multi(g16, {0: s}, {0: s})
        schedules = compile_plan(g16, plan, 20)
        assert len(schedules) == 1
        assert schedules[0].energized_ids(g16) == {s}

    def test_partial_rejected(self, g16):
        plan = MotionPlan({}, 0, PlanStatus.PARTIAL_FAILURE, (1,))
        with pytest.raises(PlanningError):
            compile_plan(g16, plan, 20)

    def test_out_of_grid_cell_rejected(self, g16):
        plan = MotionPlan({0: [(10**6, 0)]}, 0, PlanStatus.COMPLETE)
        with pytest.raises(Exception):
            compile_plan(g16, plan, 20)

    def test_row_exclusive_everywhere(self, g16):
        rng = random.Random(5)
        starts = dict(enumerate(sample_separated_cells(g16, rng, 6)))
        goals = dict(enumerate(sample_separated_cells(g16, rng, 6)))
        plan = plan_multi(g16, goals, starts)
        for sched in compile_plan(g16, plan, 20):
            for pattern, _ in sched.frames:
                highs = [lv for lv in pattern.row_levels if lv.value == "HIGH"]
                assert len(highs) <= 1


class TestParkAll:
    def test_single_marker_parks_in_corner(self, g16):
        cell = g16.coil_id(CoilAddress("m0", Layer.TOP, 8, 8))
        plan = park_all(g16, {0: cell})
        assert plan.status is PlanStatus.COMPLETE
        assert plan.parking
        goal = plan.goals()[0]
        gx, gy = g16.center_of_id(goal)
        assert gx <= 5 * g16.pitch_mm and gy <= 5 * g16.pitch_mm
        assert simulate_plan(g16, plan, {0: cell})

    def test_no_markers(self, g16):
        plan = park_all(g16, {})
        assert plan.status is PlanStatus.COMPLETE
        assert plan.makespan_ticks == 0
        assert plan.per_marker == {}

    def test_already_parked_fixpoint(self, g16):
        cell = g16.coil_id(CoilAddress("m0", Layer.TOP, 8, 8))
        first = park_all(g16, {0: cell})
        goal = first.goals()[0]
        again = park_all(g16, {0: goal})
        assert again.status is PlanStatus.COMPLETE
        assert again.makespan_ticks == 0

    def test_overflow_partial(self):
        grid = build_grid(4, 4, 40)
        cells = {}
        for i, (r, c) in enumerate([(0, 0), (0, 2), (2, 0), (2, 2), (0, 3), (3, 0), (3, 3), (2, 3)]):
            cells[i] = grid.coil_id(CoilAddress("m0", Layer.TOP, r, c))
        plan = park_all(grid, cells, region_pitches=1.0)
        assert plan.status is PlanStatus.PARTIAL_FAILURE
        assert plan.unplanned


class TestPlanSerialization:
    def test_round_trip(self, g16):
        rng = random.Random(9)
        starts = dict(enumerate(sample_separated_cells(g16, rng, 4)))
        goals = dict(enumerate(sample_separated_cells(g16, rng, 4)))
        plan = plan_multi(g16, goals, starts)
        again = MotionPlan.from_json(plan.to_json())
        assert again.to_dict() == plan.to_dict()

    def test_malformed_rejected(self):
        with pytest.raises(PlanningError):
            MotionPlan.from_json('{"status": "COMPLETE"}')
        with pytest.raises(PlanningError):
            MotionPlan.from_json("not json")
