"""Lattice geometry: centers, adjacency, IDs, tiling, serialization."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coilboard import (
    CoilAddress,
    CoilGrid,
    GridError,
    HardwareProfile,
    Layer,
    ModulePlacement,
    NotFoundError,
    build_grid,
    tile_grids,
)


def enumerate_neighbors(grid, addr):
    """Oracle: scan every coil and keep opposite-layer coils offset by
    exactly (half-pitch, half-pitch) in each axis."""
    cx, cy = grid.coil_center(addr)
    half = grid.pitch_mm / 2.0
    out = []
    for other in grid.addresses():
        if other.layer is addr.layer:
            continue
        ox, oy = grid.coil_center(other)
        if abs(abs(ox - cx) - half) < 1e-9 and abs(abs(oy - cy) - half) < 1e-9:
            out.append(grid.coil_id(other))
    return sorted(out)


class TestBuildGrid:
    def test_prototype_pitch(self):
        grid = build_grid(16, 16, 150)
        assert grid.pitch_mm == pytest.approx(9.375)
        assert grid.coil_count == 16 * 16 * 2

    def test_two_by_two(self):
        grid = build_grid(2, 2, 20)
        assert grid.pitch_mm == 10
        tops = [a for a in grid.addresses() if a.layer is Layer.TOP]
        bottoms = [a for a in grid.addresses() if a.layer is Layer.BOTTOM]
        assert len(tops) == 4 and len(bottoms) == 4

    def test_rejects_single_row(self):
        with pytest.raises(GridError):
            build_grid(1, 16, 150)

    def test_rejects_nonpositive_board(self):
        with pytest.raises(GridError):
            build_grid(4, 4, 0)


class TestCenters:
    def test_top_origin(self):
        grid = build_grid(4, 4, 40)  # 10 mm pitch
        assert grid.coil_center(CoilAddress("m0", Layer.TOP, 0, 0)) == (5, 5)

    def test_bottom_offset(self):
        grid = build_grid(4, 4, 40)
        assert grid.coil_center(CoilAddress("m0", Layer.BOTTOM, 0, 0)) == (10, 10)

    def test_module_translation(self):
        grid = tile_grids(
            [
                ModulePlacement("a", 4, 4, (0, 0)),
                ModulePlacement("b", 4, 4, (150, 0)),
            ],
            pitch_mm=10,
        )
        assert grid.coil_center(CoilAddress("b", Layer.TOP, 0, 0)) == (155, 5)


class TestNeighbors:
    def test_interior_four(self):
        grid = build_grid(4, 4, 40)
        addr = CoilAddress("m0", Layer.TOP, 1, 1)
        got = [grid.coil_id(a) for a in grid.neighbors(addr)]
        assert got == enumerate_neighbors(grid, addr)
        rcs = {(a.row, a.col) for a in grid.neighbors(addr)}
        assert rcs == {(0, 0), (0, 1), (1, 0), (1, 1)}
        assert all(a.layer is Layer.BOTTOM for a in grid.neighbors(addr))

    def test_corner_single(self):
        grid = build_grid(4, 4, 40)
        addr = CoilAddress("m0", Layer.TOP, 0, 0)
        assert [grid.coil_id(a) for a in grid.neighbors(addr)] == enumerate_neighbors(
            grid, addr
        )
        assert len(grid.neighbors(addr)) == 1

    def test_never_same_layer(self):
        grid = build_grid(4, 4, 40)
        for addr in grid.addresses():
            for n in grid.neighbors(addr):
                assert n.layer is not addr.layer

    @given(rows=st.integers(2, 6), cols=st.integers(2, 6))
    @settings(max_examples=20, deadline=None)
    def test_structure_properties(self, rows, cols):
        grid = build_grid(rows, cols, cols * 10.0)
        half = grid.pitch_mm / 2.0
        for addr in grid.addresses():
            nbrs = grid.neighbors(addr)
            assert 1 <= len(nbrs) <= 4
            cid = grid.coil_id(addr)
            cx, cy = grid.coil_center(addr)
            for n in nbrs:
                # symmetry and exact half-pitch offsets on both axes
                assert cid in [grid.coil_id(b) for b in grid.neighbors(n)]
                nx, ny = grid.coil_center(n)
                assert abs(abs(nx - cx) - half) < 1e-9
                assert abs(abs(ny - cy) - half) < 1e-9

    def test_interior_degree_exactly_four(self):
        grid = build_grid(5, 5, 50)
        addr = CoilAddress("m0", Layer.TOP, 2, 2)
        assert len(grid.neighbors(addr)) == 4


class TestIds:
    def test_round_trip_every_coil(self):
        grid = build_grid(4, 4, 40)
        for addr in grid.addresses():
            assert grid.addr_of(grid.coil_id(addr)) == addr

    def test_injective(self):
        grid = build_grid(4, 4, 40)
        ids = [grid.coil_id(a) for a in grid.addresses()]
        assert len(ids) == len(set(ids))
        assert sorted(ids) == list(range(grid.coil_count))  # dense

    def test_out_of_range(self):
        grid = build_grid(4, 4, 40)
        with pytest.raises(NotFoundError):
            grid.addr_of(grid.coil_count)
        with pytest.raises(NotFoundError):
            grid.coil_id(CoilAddress("m0", Layer.TOP, 4, 0))
        with pytest.raises(NotFoundError):
            grid.coil_id(CoilAddress("nope", Layer.TOP, 0, 0))


class TestTiling:
    def side_by_side(self):
        return tile_grids(
            [
                ModulePlacement("a", 16, 16, (0, 0)),
                ModulePlacement("b", 16, 16, (150, 0)),
            ],
            pitch_mm=9.375,
        )

    def test_counts(self):
        grid = self.side_by_side()
        assert grid.coil_count == 2 * 16 * 16 * 2

    def test_seam_neighbors_cross_modules(self):
        grid = self.side_by_side()
        seam_bottom = CoilAddress("a", Layer.BOTTOM, 3, 15)
        nbrs = grid.neighbors(seam_bottom)
        assert [grid.coil_id(a) for a in nbrs] == enumerate_neighbors(grid, seam_bottom)
        modules = {a.module_id for a in nbrs}
        assert modules == {"a", "b"}

    def test_adjacency_connected_across_seam(self):
        grid = self.side_by_side()
        seen = {0}
        stack = [0]
        while stack:
            cid = stack.pop()
            for n in grid.neighbor_ids(cid):
                if n not in seen:
                    seen.add(n)
                    stack.append(n)
        assert len(seen) == grid.coil_count

    def test_single_module_matches_build_grid(self):
        a = build_grid(4, 4, 40)
        b = tile_grids([ModulePlacement("m0", 4, 4, (0, 0))], pitch_mm=10)
        assert a.to_dict() == b.to_dict()
        for addr in a.addresses():
            assert a.coil_center(addr) == b.coil_center(addr)

    def test_overlap_rejected(self):
        with pytest.raises(GridError):
            tile_grids(
                [
                    ModulePlacement("a", 4, 4, (0, 0)),
                    ModulePlacement("b", 4, 4, (30, 0)),
                ],
                pitch_mm=10,
            )

    def test_off_lattice_origin_rejected(self):
        with pytest.raises(GridError):
            tile_grids(
                [
                    ModulePlacement("a", 4, 4, (0, 0)),
                    ModulePlacement("b", 4, 4, (45, 0)),  # half-pitch offset
                ],
                pitch_mm=10,
            )


class TestSnapping:
    def test_nearest_center(self):
        grid = build_grid(4, 4, 40)
        cid = grid.coil_id(CoilAddress("m0", Layer.TOP, 1, 2))
        x, y = grid.center_of_id(cid)
        assert grid.nearest_coil_id(x + 1.0, y - 0.5) == cid

    def test_tie_breaks_to_lowest_id(self):
        grid = build_grid(4, 4, 40)
        a = grid.coil_id(CoilAddress("m0", Layer.TOP, 0, 0))
        b = grid.coil_id(CoilAddress("m0", Layer.BOTTOM, 0, 0))
        ax, ay = grid.center_of_id(a)
        bx, by = grid.center_of_id(b)
        mid = ((ax + bx) / 2, (ay + by) / 2)
        assert grid.nearest_coil_id(*mid) == min(a, b)


class TestSerialization:
    def test_json_round_trip(self, tmp_path):
        grid = tile_grids(
            [
                ModulePlacement("a", 16, 16, (0, 0)),
                ModulePlacement("b", 16, 16, (150, 0)),
            ],
            pitch_mm=9.375,
            profile=HardwareProfile(coil_turns=30),
        )
        path = tmp_path / "grid.json"
        grid.save(path)
        loaded = CoilGrid.load(path)
        assert loaded.to_dict() == grid.to_dict()
        assert loaded.profile == grid.profile

    @given(
        rows=st.integers(2, 8),
        cols=st.integers(2, 8),
        board=st.floats(10, 500, allow_nan=False),
    )
    @settings(max_examples=30, deadline=None)
    def test_round_trip_property(self, rows, cols, board):
        grid = build_grid(rows, cols, board)
        again = CoilGrid.from_json(grid.to_json())
        assert again.to_dict() == grid.to_dict()


class TestProfile:
    def test_defaults_positive(self):
        p = HardwareProfile()
        assert p.coil_turns == 22
        assert p.scan_period_ms == (10.0, 100.0)

    def test_rejects_negative(self):
        with pytest.raises(GridError):
            HardwareProfile(coil_size_mm=-1)

    def test_rejects_inverted_range(self):
        with pytest.raises(GridError):
            HardwareProfile(coil_current_amps=(2.0, 1.0))
