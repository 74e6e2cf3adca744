"""Content store persistence, trigger matching, graphic import."""

import json

import pytest

from coilboard import ContentError, SeparationError, build_grid
from coilboard.content import (
    CommandBinding,
    Configuration,
    ContentStore,
    StepSequence,
    edit_distance,
    parse_polyline_json,
    parse_svg_subset,
    snap_targets,
    suggest_triggers,
    validate_targets,
)


class TestStore:
    def make_store(self, path):
        store = ContentStore(path)
        store.configurations["plot"] = Configuration(
            "plot",
            [{"kind": "polyline", "points": [[0.0, 0.0], [10.0, 10.0]]}],
            [3, 40, 77],
        )
        store.bindings["show plot"] = CommandBinding("show plot", "plot")
        store.sequences["guide"] = StepSequence("guide", ["plot"], 0)
        store.save()
        return store

    def test_round_trip_lossless(self, tmp_path):
        path = tmp_path / "store.json"
        store = self.make_store(path)
        loaded = ContentStore(path)
        assert loaded.to_dict() == store.to_dict()

    def test_atomic_save_leaves_no_temp(self, tmp_path):
        path = tmp_path / "store.json"
        self.make_store(path)
        assert path.exists()
        assert not list(tmp_path.glob("*.tmp"))

    def test_corrupt_store_raises(self, tmp_path):
        path = tmp_path / "store.json"
        path.write_text("{broken", encoding="utf-8")
        with pytest.raises(ContentError):
            ContentStore(path)

    def test_in_memory_store_save_is_noop(self):
        store = ContentStore()
        store.save()  # no path, nothing to write


class TestTargets:
    def test_snap_mixed_inputs(self):
        grid = build_grid(4, 4, 40)
        cid = grid.nearest_coil_id(6.0, 5.0)
        out = snap_targets(grid, [cid, [6.0, 5.0], {"x_mm": 6.0, "y_mm": 5.0}])
        assert out == [cid, cid, cid]

    def test_snap_rejects_garbage(self):
        grid = build_grid(4, 4, 40)
        with pytest.raises(ContentError):
            snap_targets(grid, ["nope"])

    def test_separation_enforced(self):
        grid = build_grid(4, 4, 40)
        a = grid.nearest_coil_id(5, 5)
        b = grid.nearest_coil_id(10, 10)  # diagonal neighbor, under one pitch
        with pytest.raises(SeparationError):
            validate_targets(grid, [a, b])


class TestSequences:
    def test_saturation(self):
        seq = StepSequence("s", ["a", "b", "c"])
        assert seq.advance("NEXT") == 1
        assert seq.advance("NEXT") == 2
        assert seq.advance("NEXT") == 2  # saturated
        assert seq.advance("PREV") == 1
        assert seq.advance("RESET") == 0
        assert seq.advance("PREV") == 0  # saturated low

    def test_empty_rejected(self):
        with pytest.raises(ContentError):
            StepSequence("s", [])

    def test_unknown_direction(self):
        seq = StepSequence("s", ["a"])
        with pytest.raises(ContentError):
            seq.advance("SIDEWAYS")


class TestTriggerMatching:
    def test_edit_distance(self):
        assert edit_distance("show me", "show me") == 0
        assert edit_distance("shw me", "show me") == 1
        assert edit_distance("sh me", "show me") == 2
        assert edit_distance("", "abc") == 3

    def test_suggestions_within_two(self):
        triggers = ["show me", "render plot", "park"]
        assert suggest_triggers("shw me", triggers) == ["show me"]
        assert suggest_triggers("xyzzy", triggers) == []

    def test_suggestions_sorted_by_distance(self):
        triggers = ["park", "part", "parks"]
        got = suggest_triggers("park", triggers)
        assert got[0] == "park"


class TestSvgImport:
    def test_line_and_polyline(self):
        svg = """<svg xmlns="http://www.w3.org/2000/svg">
          <line x1="0" y1="0" x2="10" y2="5"/>
          <polyline points="0,0 5,5 10,0"/>
          <polygon points="1 1 2 1 2 2"/>
        </svg>"""
        elements = parse_svg_subset(svg)
        kinds = [e["kind"] for e in elements]
        assert kinds == ["polyline", "polyline", "polygon"]
        assert elements[0]["points"] == [[0, 0], [10, 5]]

    def test_path_segments(self):
        svg = '<svg><path d="M 1 2 L 3 4 H 7 V 9 Z"/></svg>'
        (el,) = parse_svg_subset(svg)
        assert el["kind"] == "polygon"
        assert el["points"] == [[1, 2], [3, 4], [7, 4], [7, 9]]

    def test_relative_path_commands(self):
        svg = '<svg><path d="m 1 1 l 2 0 l 0 2"/></svg>'
        (el,) = parse_svg_subset(svg)
        assert el["points"] == [[1, 1], [3, 1], [3, 3]]

    def test_curves_rejected_with_list(self):
        svg = '<svg><path d="M 0 0 C 1 1 2 2 3 3"/></svg>'
        with pytest.raises(ContentError) as err:
            parse_svg_subset(svg)
        assert "C" in str(err.value)

    def test_empty_file_empty_layer(self):
        assert parse_svg_subset("<svg></svg>") == []

    def test_invalid_xml(self):
        with pytest.raises(ContentError):
            parse_svg_subset("<svg")


class TestPolylineJson:
    def test_parse(self):
        doc = json.dumps(
            {"elements": [{"kind": "polyline", "points": [[0, 0], [4, 4]]}]}
        )
        assert parse_polyline_json(doc) == [
            {"kind": "polyline", "points": [[0.0, 0.0], [4.0, 4.0]]}
        ]

    def test_rejects_unknown_kind(self):
        doc = json.dumps({"elements": [{"kind": "circle", "points": []}]})
        with pytest.raises(ContentError):
            parse_polyline_json(doc)

    def test_rejects_non_json(self):
        with pytest.raises(ContentError):
            parse_polyline_json("{")
