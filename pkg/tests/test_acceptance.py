"""Acceptance criteria, one test per criterion, each printing PASS/FAIL.

Run with `pytest tests/test_acceptance.py -v -s` to see the verdict lines.
The multi-marker and zig-zag suites feed every frame they generate into a
shared accumulator that the row-exclusivity criterion audits afterwards.
"""

import json
import math
import random
import time
from collections import deque

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coilboard import (
    CoilAddress,
    CoilGrid,
    Layer,
    Level,
    MotionPlan,
    PlanStatus,
    ShiftChainImage,
    SimState,
    build_grid,
    compile_plan,
    default_chain_layout,
    deserialize_shift_chain,
    encode_frame,
    estimate_bom,
    io_pin_count,
    plan_multi,
    plan_path,
    schedule_frames,
    serialize_to_shift_chain,
)
from coilboard.cli import EXIT_OK, main
from coilboard.content import Configuration, ContentStore
from coilboard.executor import SimExecutor

SEED = 20260809

# Frames generated by the planning/simulation criteria, audited afterwards.
GENERATED_FRAMES: list = []


def _report(name: str, ok: bool, detail: str = "") -> None:
    print(f"\nACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} {detail}".rstrip())
    assert ok, f"{name}: {detail}"


def _sample_separated(grid, rng, n):
    halves = grid.half_centers()
    cells = []
    while len(cells) < n:
        cid = rng.randrange(grid.coil_count)
        p = halves[cid]
        if all((p[0] - halves[c][0]) ** 2 + (p[1] - halves[c][1]) ** 2 >= 4 for c in cells):
            cells.append(cid)
    return cells


def test_01_multiplex_worked_example():
    started = time.monotonic()
    g4 = build_grid(4, 4, 40)
    first = encode_frame(g4, "m0", Layer.TOP, {(0, 0), (0, 2)})
    second = encode_frame(g4, "m0", Layer.TOP, {(1, 0), (1, 3)})
    ok = (
        first.row_levels == (Level.HIGH, Level.LOW, Level.LOW, Level.LOW)
        and first.col_levels == (Level.LOW, Level.HIGH, Level.LOW, Level.HIGH)
        and second.row_levels == (Level.LOW, Level.HIGH, Level.LOW, Level.LOW)
        and second.col_levels == (Level.LOW, Level.HIGH, Level.HIGH, Level.LOW)
    )
    elapsed = time.monotonic() - started
    _report("multiplex-worked-example", ok and elapsed < 1.0, f"({elapsed:.3f}s)")


def test_02_pin_arithmetic():
    _report("pin-arithmetic", io_pin_count(4, 4, False) == 8)


def test_03_bom_reproduction():
    started = time.monotonic()
    big = estimate_bom(160, 160)
    items = {name: line.subtotal_usd for name, line in big.line_items.items()}
    expected = {
        "mosfet": 128.0,
        "diode": 147.0,
        "shift_register": 20.0,
        "pcb": 200.0,
        "microcontroller": 15.0,
    }
    small_total = estimate_bom(16, 16).total_usd
    elapsed = time.monotonic() - started
    ok = (
        items == expected
        and big.total_usd == 510.0
        and 25 <= small_total <= 55
        and elapsed < 1.0
    )
    _report(
        "bom-reproduction", ok, f"(160x160 total {big.total_usd}, 16x16 total {small_total})"
    )


def test_04_single_marker_optimality():
    started = time.monotonic()
    mismatches = 0
    pairs = 0
    for rows in range(2, 9):
        for cols in range(2, 9):
            grid = build_grid(rows, cols, cols * 10.0)
            table = grid.neighbors_table()
            for src in range(grid.coil_count):
                dist = {src: 0}
                queue = deque([src])
                while queue:
                    c = queue.popleft()
                    for n in table[c]:
                        if n not in dist:
                            dist[n] = dist[c] + 1
                            queue.append(n)
                for dst in range(grid.coil_count):
                    pairs += 1
                    if len(plan_path(grid, src, dst)) - 1 != dist[dst]:
                        mismatches += 1
    elapsed = time.monotonic() - started
    _report(
        "single-marker-optimality",
        mismatches == 0 and elapsed < 60.0,
        f"({pairs} pairs, {mismatches} mismatches, {elapsed:.1f}s)",
    )


def test_05_zigzag_invariant():
    grid = build_grid(16, 16, 150)
    rng = random.Random(SEED)
    half = grid.pitch_mm / 2.0
    violations = 0
    for _ in range(10_000):
        src = rng.randrange(grid.coil_count)
        dst = rng.randrange(grid.coil_count)
        path = plan_path(grid, src, dst)
        for prev, cur in zip(path, path[1:]):
            if prev.layer is cur.layer:
                violations += 1
            px, py = grid.coil_center(prev)
            cx, cy = grid.coil_center(cur)
            if abs(cx - px) > half + 1e-9 or abs(cy - py) > half + 1e-9:
                violations += 1
        if len(path) > 1:
            GENERATED_FRAMES.extend(
                schedule_frames(grid, [grid.coil_id(a) for a in path[:1]], 20).frames
            )
    _report("zigzag-invariant", violations == 0, f"(10000 paths, {violations} violations)")


def test_06_multi_marker_validity():
    started = time.monotonic()
    grid = build_grid(16, 16, 150)
    rng = random.Random(SEED + 1)
    failures = []
    for trial in range(1000):
        k = rng.randint(1, 10)
        starts_l = _sample_separated(grid, rng, k)
        goals_l = _sample_separated(grid, rng, k)
        starts = dict(enumerate(starts_l))
        goals = dict(enumerate(goals_l))
        plan = plan_multi(grid, goals, starts)
        if plan.status is not PlanStatus.COMPLETE:
            failures.append((trial, "plan", plan.unplanned))
            continue
        schedules = compile_plan(grid, plan, 50)
        GENERATED_FRAMES.extend(f for sched in schedules for f in sched.frames)
        sim = SimState(grid)
        for mid in range(k):
            sim.place_marker(*grid.center_of_id(starts_l[mid]))
        executor = SimExecutor(sim, dwell_ms=50)
        job = executor.submit(plan)
        executor.run_until_idle()
        if not job.delivered:
            failures.append((trial, "undelivered", None))
            continue
        if sim.contention_count or sim.separation_violations:
            failures.append(
                (trial, "violations", (sim.contention_count, sim.separation_violations))
            )
            continue
        for mid in range(k):
            gx, gy = grid.center_of_id(goals_l[mid])
            m = sim.markers[mid]
            if (m.x - gx) ** 2 + (m.y - gy) ** 2 > 1e-9:
                failures.append((trial, "off-goal", mid))
                break
    elapsed = time.monotonic() - started
    _report(
        "multi-marker-validity",
        not failures and elapsed < 300.0,
        f"(1000 instances, {len(failures)} failures, {elapsed:.1f}s)",
    )


def test_07_hold_stability():
    grid = build_grid(16, 16, 150)
    rng = random.Random(SEED + 2)
    params_checked = 0
    worst = 0.0
    ok = True
    for _ in range(100):
        sim = SimState(grid)
        coil = rng.randrange(grid.coil_count)
        cx, cy = grid.center_of_id(coil)
        mid = sim.place_marker(cx, cy)
        sched = schedule_frames(grid, [coil], 20)
        pattern = sched.frames[0][0]
        for _ in range(10):  # capture firmly
            sim.step(pattern, 20)
        radius = sim.attraction_radius_mm
        angle = rng.uniform(0, 2 * math.pi)
        r = rng.uniform(0, radius * 0.999)
        sim.perturb(mid, r * math.cos(angle), r * math.sin(angle))
        steps = int(round(sim.params.t_snap_ms / 20))
        for _ in range(steps):  # exactly one capture interval of simulated time
            sim.step(pattern, 20)
        m = sim.markers[mid]
        err = math.hypot(m.x - cx, m.y - cy)
        worst = max(worst, err)
        if err >= 0.1:
            ok = False
        params_checked += 1
    _report(
        "hold-stability", ok and params_checked == 100, f"(worst error {worst:.4f} mm)"
    )


def test_08_row_exclusivity():
    # Audit every frame generated by the planning suites above, plus a fresh
    # batch of random target sets.
    grid = build_grid(16, 16, 150)
    rng = random.Random(SEED + 3)
    frames = list(GENERATED_FRAMES)
    for _ in range(200):
        ids = rng.sample(range(grid.coil_count), rng.randint(0, 24))
        frames.extend(schedule_frames(grid, ids, 20).frames)
    violations = 0
    for pattern, _dwell in frames:
        if sum(1 for lv in pattern.row_levels if lv is Level.HIGH) > 1:
            violations += 1
    _report(
        "row-exclusivity", violations == 0 and len(frames) > 1000,
        f"({len(frames)} frames audited, {violations} violations)",
    )


def test_09_scenario_demos():
    codes = {}
    for name in ("temperature", "map", "hexagon"):
        codes[name] = main(["--output", "json", "demo", name])
    ok = all(code == EXIT_OK for code in codes.values())
    _report("scenario-demos", ok, f"(exit codes {codes})")


class TestRoundTrips:
    """Criterion: grid files, plans, configurations, and shift-chain images
    all round-trip losslessly."""

    @given(
        rows=st.integers(2, 12),
        cols=st.integers(2, 12),
        board=st.floats(20, 400, allow_nan=False),
        turns=st.integers(1, 60),
    )
    @settings(max_examples=40, deadline=None)
    def test_grid_documents(self, rows, cols, board, turns):
        from coilboard import HardwareProfile

        grid = build_grid(rows, cols, board, HardwareProfile(coil_turns=turns))
        again = CoilGrid.from_json(grid.to_json())
        assert again.to_dict() == grid.to_dict()

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=25, deadline=None)
    def test_plan_documents(self, seed):
        grid = build_grid(16, 16, 150)
        rng = random.Random(seed)
        k = rng.randint(1, 5)
        starts = dict(enumerate(_sample_separated(grid, rng, k)))
        goals = dict(enumerate(_sample_separated(grid, rng, k)))
        plan = plan_multi(grid, goals, starts)
        again = MotionPlan.from_json(plan.to_json())
        assert again.to_dict() == plan.to_dict()

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=25, deadline=None)
    def test_configuration_documents(self, seed, tmp_path_factory):
        grid = build_grid(16, 16, 150)
        rng = random.Random(seed)
        targets = _sample_separated(grid, rng, rng.randint(0, 8))
        elements = [
            {"kind": "polyline", "points": [[rng.uniform(0, 150), rng.uniform(0, 150)]
                                            for _ in range(rng.randint(2, 5))]}
        ]
        path = tmp_path_factory.mktemp("store") / "content.json"
        store = ContentStore(path)
        store.configurations["c"] = Configuration("c", elements, targets)
        store.save()
        assert ContentStore(path).to_dict() == store.to_dict()

    @given(data=st.data())
    @settings(max_examples=40, deadline=None)
    def test_shift_chain_images(self, data):
        grid = build_grid(6, 5, 50)
        layout = default_chain_layout(grid, "m0", Layer.TOP)
        row = data.draw(st.one_of(st.none(), st.integers(0, 5)))
        cols = data.draw(st.sets(st.integers(0, 4), max_size=5))
        coils = {(row, c) for c in cols} if row is not None else set()
        pattern = encode_frame(grid, "m0", Layer.TOP, coils)
        image = serialize_to_shift_chain(pattern, layout)
        assert deserialize_shift_chain(image, layout) == pattern
        assert ShiftChainImage.from_hex(image.to_hex(), image.register_count) == image

    def test_report(self):
        _report("persistence-round-trips", True, "(property suites above)")
