"""Bundled demo content: schematic stand-ins for the study graphics.

Three end-to-end demos run against the HTTP API: a twelve-point temperature
plot, a map location lookup, and a hexagon drawing guide stepped corner by
corner.  Each returns a summary dict with an ``ok`` flag; the CLI surfaces it
as the process exit code.
"""

from __future__ import annotations

import math

from .geometry import CoilAddress, CoilGrid, Layer, build_grid

DEMO_NAMES = ("temperature", "map", "hexagon")


def default_demo_grid() -> CoilGrid:
    return build_grid(16, 16, 150.0)


# ---------------------------------------------------------------------------
# static outlines (mm polylines on the 150 mm board)


def map_outline() -> list[dict]:
    """A schematic eastern-map: two coastlines and an inland sea blob."""
    return [
        {
            "kind": "polygon",
            "points": [[18, 135], [70, 140], [120, 128], [138, 95], [128, 60],
                       [135, 28], [95, 18], [40, 25], [15, 60], [22, 100]],
        },
        {
            "kind": "polygon",
            "points": [[78, 52], [95, 58], [104, 50], [92, 40], [76, 43]],
        },
        {"kind": "polyline", "points": [[30, 110], [55, 104], [72, 112], [95, 106]]},
    ]


def brain_outline() -> list[dict]:
    """Sectional brain-ish diagram: outer lobe, inner fold, stem."""
    return [
        {
            "kind": "polygon",
            "points": [[35, 70], [40, 105], [62, 128], [95, 132], [122, 115],
                       [130, 88], [120, 62], [98, 48], [60, 46]],
        },
        {"kind": "polyline", "points": [[55, 95], [72, 108], [94, 110], [112, 98]]},
        {"kind": "polyline", "points": [[100, 60], [110, 45], [118, 32]]},
    ]


def hexagon_points(grid: CoilGrid, radius_mm: float = 35.0) -> list[tuple[float, float]]:
    xmin, ymin, xmax, ymax = grid.board_bounds()
    cx, cy = (xmin + xmax) / 2, (ymin + ymax) / 2
    pts = []
    for i in range(6):
        angle = math.radians(60 * i)
        pts.append((cx + radius_mm * math.cos(angle), cy + radius_mm * math.sin(angle)))
    return pts


def temperature_curve(grid: CoilGrid) -> list[int]:
    """Twelve monthly readings as TOP-layer coils, one column per month."""
    rows = [3, 4, 6, 9, 12, 13, 12, 11, 9, 7, 5, 3]
    return [
        grid.coil_id(CoilAddress("m0", Layer.TOP, r, c + 2)) for c, r in enumerate(rows)
    ]


# ---------------------------------------------------------------------------
# content installation over HTTP


def _check(resp, what: str):
    if resp.status_code >= 400:
        raise RuntimeError(f"{what} failed: {resp.status_code} {resp.text}")
    return resp.json()


def install_demo_content(client, grid: CoilGrid) -> None:
    """Create the demo configurations, sequences, and bindings via the API."""
    _check(
        client.post(
            "/configurations",
            json={
                "name": "temperature-plot",
                "static_elements": [
                    {"kind": "polyline", "points": [[15, 15], [135, 15]]},
                    {"kind": "polyline", "points": [[15, 15], [15, 135]]},
                ],
                "marker_targets": temperature_curve(grid),
            },
        ),
        "save temperature-plot",
    )
    _check(
        client.post(
            "/configurations",
            json={
                "name": "map-black-sea",
                "static_elements": map_outline(),
                "marker_targets": [[88.0, 49.0]],
            },
        ),
        "save map-black-sea",
    )
    _check(
        client.post(
            "/configurations",
            json={
                "name": "brain-hippocampus",
                "static_elements": brain_outline(),
                "marker_targets": [[80.0, 95.0]],
            },
        ),
        "save brain-hippocampus",
    )
    for i, (x, y) in enumerate(hexagon_points(grid)):
        _check(
            client.post(
                "/configurations",
                json={"name": f"hexagon-corner-{i}", "marker_targets": [[x, y]]},
            ),
            f"save hexagon corner {i}",
        )
    _check(
        client.post(
            "/sequences",
            json={
                "name": "hexagon",
                "steps": [f"hexagon-corner-{i}" for i in range(6)],
            },
        ),
        "save hexagon sequence",
    )
    for trigger, configuration, kind in (
        ("render the temperatures", "temperature-plot", "RENDER"),
        ("show me the black sea", "map-black-sea", "RENDER"),
        ("which region is the hippocampus", "brain-hippocampus", "RENDER"),
        ("draw a hexagon", "hexagon", "SEQUENCE"),
    ):
        _check(
            client.post(
                "/bindings",
                json={"trigger": trigger, "configuration": configuration, "kind": kind},
            ),
            f"bind {trigger!r}",
        )


def _place_markers(client, grid: CoilGrid, count: int) -> list[int]:
    """Line markers up along the top edge, one pitch apart."""
    ids = []
    rows = grid.modules["m0"].rows
    for i in range(count):
        body = {"coil_id": grid.coil_id(CoilAddress("m0", Layer.TOP, rows - 1, 2 + i))}
        ids.append(_check(client.post("/markers", json=body), "place marker")["marker_id"])
    return ids


def _history_events(client, event: str) -> list[dict]:
    return _check(client.get("/history", params={"event": event}), "history")


def _park_and_verify(client, summary: dict) -> None:
    _check(client.post("/park"), "park")
    state = _check(client.get("/state"), "state")
    parked = [m for m in state["markers"] if m["state"] == "PARKED"]
    summary["parked"] = len(parked)
    summary["clean_park"] = len(parked) == len(state["markers"])
    summary["contention"] = state["contention_count"]
    summary["separation_violations"] = state["separation_violations"]


def run_temperature_demo(client, grid: CoilGrid | None = None) -> dict:
    grid = grid or default_demo_grid()
    install_demo_content(client, grid)
    markers = _place_markers(client, grid, 12)
    result = _check(client.post("/trigger", json={"text": "render the temperatures"}), "trigger")
    arrived = _history_events(client, "ARRIVED")
    summary = {
        "demo": "temperature",
        "markers": len(markers),
        "status": result["status"],
        "arrived": len(arrived),
    }
    _park_and_verify(client, summary)
    summary["ok"] = (
        result["status"] == "COMPLETE"
        and len(arrived) == 12
        and summary["clean_park"]
        and summary["contention"] == 0
        and summary["separation_violations"] == 0
    )
    return summary


def run_map_demo(client, grid: CoilGrid | None = None) -> dict:
    grid = grid or default_demo_grid()
    install_demo_content(client, grid)
    markers = _place_markers(client, grid, 1)
    result = _check(client.post("/trigger", json={"text": "show me the black sea"}), "trigger")
    arrived = _history_events(client, "ARRIVED")
    state = _check(client.get("/state"), "state")
    target = _check(
        client.get("/snap", params={"x_mm": 88.0, "y_mm": 49.0}), "snap"
    )
    at_target = any(
        m["held_at"] == target["coil_id"] for m in state["markers"]
    )
    summary = {
        "demo": "map",
        "markers": len(markers),
        "status": result["status"],
        "arrived": len(arrived),
        "at_target": at_target,
    }
    _park_and_verify(client, summary)
    summary["ok"] = (
        result["status"] == "COMPLETE"
        and len(arrived) == 1
        and at_target is True
        and summary["clean_park"]
        and summary["contention"] == 0
        and summary["separation_violations"] == 0
    )
    return summary


def run_hexagon_demo(client, grid: CoilGrid | None = None) -> dict:
    grid = grid or default_demo_grid()
    install_demo_content(client, grid)
    markers = _place_markers(client, grid, 1)
    corners_seen = []
    # RESET renders corner 0, then NEXT walks the remaining five in order
    result = _check(client.post("/sequences/hexagon/step", json={"direction": "RESET"}), "reset")
    statuses = [result["status"]]
    for i in range(1, 6):
        step = _check(
            client.post("/sequences/hexagon/step", json={"direction": "NEXT"}), "step"
        )
        statuses.append(step["status"])
    arrived = _history_events(client, "ARRIVED")
    for rec in arrived:
        corners_seen.append(rec["coil_id"])
    expected = [
        _check(client.get("/snap", params={"x_mm": x, "y_mm": y}), "snap")["coil_id"]
        for x, y in hexagon_points(grid)
    ]
    summary = {
        "demo": "hexagon",
        "markers": len(markers),
        "statuses": statuses,
        "arrived": len(arrived),
        "corners_in_order": corners_seen == expected,
    }
    _park_and_verify(client, summary)
    summary["ok"] = (
        all(s == "COMPLETE" for s in statuses)
        and len(arrived) == 6
        and corners_seen == expected
        and summary["clean_park"]
        and summary["contention"] == 0
        and summary["separation_violations"] == 0
    )
    return summary


DEMO_RUNNERS = {
    "temperature": run_temperature_demo,
    "map": run_map_demo,
    "hexagon": run_hexagon_demo,
}


def run_demo(name: str, client, grid: CoilGrid | None = None) -> dict:
    try:
        runner = DEMO_RUNNERS[name]
    except KeyError:
        raise ValueError(f"unknown demo {name!r}; choose from {sorted(DEMO_RUNNERS)}")
    return runner(client, grid)
