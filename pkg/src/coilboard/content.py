"""Authored content: marker configurations, command bindings, step sequences,
plus persistence and static-graphic import.

The store is a single JSON document written atomically (write to a sibling
temp file, then rename), sized for desk-scale content.  Marker targets are
stored as packed coil IDs: authoring inputs given in mm are snapped to the
nearest coil center before they ever reach the store, so save/load round-trips
are exact.
"""

from __future__ import annotations

import json
import os
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ContentError, NotFoundError, SeparationError
from .geometry import CoilGrid


class BindingKind(str, Enum):
    RENDER = "RENDER"
    SEQUENCE = "SEQUENCE"


@dataclass
class Configuration:
    """Named layout: static graphic elements plus snapped marker targets."""

    name: str
    static_elements: list[dict] = field(default_factory=list)
    marker_targets: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "static_elements": self.static_elements,
            "marker_targets": list(self.marker_targets),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Configuration":
        return cls(
            data["name"],
            list(data.get("static_elements", [])),
            [int(t) for t in data.get("marker_targets", [])],
        )


@dataclass
class CommandBinding:
    trigger: str
    configuration: str
    kind: BindingKind = BindingKind.RENDER

    def to_dict(self) -> dict:
        return {
            "trigger": self.trigger,
            "configuration": self.configuration,
            "kind": self.kind.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CommandBinding":
        return cls(data["trigger"], data["configuration"], BindingKind(data.get("kind", "RENDER")))


@dataclass
class StepSequence:
    """Ordered configurations forming a guide; the cursor saturates at the ends."""

    name: str
    steps: list[str]
    current_step: int = 0

    def __post_init__(self) -> None:
        if not self.steps:
            raise ContentError(f"sequence {self.name!r} needs at least one step")
        if not (0 <= self.current_step < len(self.steps)):
            raise ContentError(f"sequence {self.name!r} cursor out of range")

    def advance(self, direction: str) -> int:
        if direction == "NEXT":
            self.current_step = min(self.current_step + 1, len(self.steps) - 1)
        elif direction == "PREV":
            self.current_step = max(self.current_step - 1, 0)
        elif direction == "RESET":
            self.current_step = 0
        else:
            raise ContentError(f"unknown step direction {direction!r}")
        return self.current_step

    def to_dict(self) -> dict:
        return {"name": self.name, "steps": list(self.steps), "current_step": self.current_step}

    @classmethod
    def from_dict(cls, data: dict) -> "StepSequence":
        return cls(data["name"], list(data["steps"]), int(data.get("current_step", 0)))


def validate_targets(grid: CoilGrid, targets: Sequence[int]) -> None:
    """All targets must exist and sit pairwise at least one pitch apart."""
    for cid in targets:
        grid.addr_of(cid)
    min_sep_sq = 4  # one pitch, in squared half-units
    for i, a in enumerate(targets):
        pa = grid.half_center(a)
        for b in targets[i + 1 :]:
            pb = grid.half_center(b)
            if (pa[0] - pb[0]) ** 2 + (pa[1] - pb[1]) ** 2 < min_sep_sq:
                raise SeparationError(
                    f"targets {a} and {b} are closer than one pitch"
                )


def snap_targets(grid: CoilGrid, raw_targets: Iterable) -> list[int]:
    """Resolve a mixed list of coil IDs and mm points to snapped coil IDs."""
    out = []
    for t in raw_targets:
        if isinstance(t, int):
            grid.addr_of(t)
            out.append(t)
        elif isinstance(t, (list, tuple)) and len(t) == 2:
            out.append(grid.nearest_coil_id(float(t[0]), float(t[1])))
        elif isinstance(t, dict) and "x_mm" in t and "y_mm" in t:
            out.append(grid.nearest_coil_id(float(t["x_mm"]), float(t["y_mm"])))
        else:
            raise ContentError(f"target {t!r} is neither a coil id nor an mm point")
    return out


class ContentStore:
    """All authored content, persisted as one JSON document."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path else None
        self.configurations: dict[str, Configuration] = {}
        self.bindings: dict[str, CommandBinding] = {}
        self.sequences: dict[str, StepSequence] = {}
        if self.path and self.path.exists():
            self.load()

    # -- persistence ---------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "configurations": {n: c.to_dict() for n, c in sorted(self.configurations.items())},
            "bindings": {t: b.to_dict() for t, b in sorted(self.bindings.items())},
            "sequences": {n: s.to_dict() for n, s in sorted(self.sequences.items())},
        }

    @classmethod
    def from_dict(cls, data: dict, path: str | Path | None = None) -> "ContentStore":
        store = cls.__new__(cls)
        store.path = Path(path) if path else None
        store.configurations = {
            n: Configuration.from_dict(c) for n, c in data.get("configurations", {}).items()
        }
        store.bindings = {
            t: CommandBinding.from_dict(b) for t, b in data.get("bindings", {}).items()
        }
        store.sequences = {
            n: StepSequence.from_dict(s) for n, s in data.get("sequences", {}).items()
        }
        return store

    def save(self) -> None:
        if self.path is None:
            return
        tmp = self.path.with_name(self.path.name + ".tmp")
        tmp.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")
        os.replace(tmp, self.path)

    def load(self) -> None:
        try:
            data = json.loads(self.path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ContentError(f"content store {self.path} is corrupt: {exc}") from exc
        loaded = ContentStore.from_dict(data, self.path)
        self.configurations = loaded.configurations
        self.bindings = loaded.bindings
        self.sequences = loaded.sequences

    # -- lookups that raise --------------------------------------------

    def configuration(self, name: str) -> Configuration:
        try:
            return self.configurations[name]
        except KeyError:
            raise NotFoundError(f"unknown configuration {name!r}") from None

    def sequence(self, name: str) -> StepSequence:
        try:
            return self.sequences[name]
        except KeyError:
            raise NotFoundError(f"unknown sequence {name!r}") from None


# ---------------------------------------------------------------------------
# trigger matching


def edit_distance(a: str, b: str, cutoff: int = 3) -> int:
    """Levenshtein distance with an early-out once the cutoff is exceeded."""
    if abs(len(a) - len(b)) > cutoff:
        return cutoff + 1
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        best = i
        for j, cb in enumerate(b, 1):
            cost = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb))
            cur.append(cost)
            best = min(best, cost)
        if best > cutoff:
            return cutoff + 1
        prev = cur
    return prev[-1]


def suggest_triggers(text: str, triggers: Iterable[str], max_distance: int = 2) -> list[str]:
    scored = []
    for trig in triggers:
        d = edit_distance(text, trig, cutoff=max_distance)
        if d <= max_distance:
            scored.append((d, trig))
    return [t for _, t in sorted(scored)]


# ---------------------------------------------------------------------------
# static graphic import

_SVG_PATH_TOKEN = re.compile(r"([MmLlHhVvZzCcSsQqTtAa])|(-?\d*\.?\d+(?:[eE][-+]?\d+)?)")
_CURVE_COMMANDS = set("CcSsQqTtAa")


def parse_polyline_json(text: str) -> list[dict]:
    """Accept {"elements": [{"kind": "polyline"|"polygon", "points": [[x,y],...]}]}."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ContentError(f"graphic file is not valid JSON: {exc}") from exc
    elements = data.get("elements")
    if not isinstance(elements, list):
        raise ContentError("graphic JSON needs an 'elements' list")
    out = []
    for el in elements:
        kind = el.get("kind")
        points = el.get("points")
        if kind not in ("polyline", "polygon") or not isinstance(points, list):
            raise ContentError(f"unsupported element {el!r}")
        pts = [[float(x), float(y)] for x, y in points]
        out.append({"kind": kind, "points": pts})
    return out


def parse_svg_subset(text: str) -> list[dict]:
    """Import an SVG restricted to straight segments.

    Supported: <line>, <polyline>, <polygon>, and <path> data limited to
    M/L/H/V/Z commands.  Curves are rejected with the offending elements
    listed so the author can fix the export.
    """
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise ContentError(f"not valid SVG/XML: {exc}") from exc
    elements: list[dict] = []
    rejected: list[str] = []
    for node in root.iter():
        tag = node.tag.rsplit("}", 1)[-1]
        if tag == "line":
            elements.append(
                {
                    "kind": "polyline",
                    "points": [
                        [float(node.get("x1", 0)), float(node.get("y1", 0))],
                        [float(node.get("x2", 0)), float(node.get("y2", 0))],
                    ],
                }
            )
        elif tag in ("polyline", "polygon"):
            raw = node.get("points", "").replace(",", " ").split()
            nums = [float(v) for v in raw]
            pts = [[nums[i], nums[i + 1]] for i in range(0, len(nums) - 1, 2)]
            if pts:
                elements.append({"kind": tag, "points": pts})
        elif tag == "path":
            parsed = _parse_path_data(node.get("d", ""), rejected)
            elements.extend(parsed)
    if rejected:
        raise ContentError(
            "unsupported curved path commands: " + ", ".join(sorted(set(rejected)))
        )
    return elements


def _parse_path_data(d: str, rejected: list[str]) -> list[dict]:
    tokens = _SVG_PATH_TOKEN.findall(d)
    elements: list[dict] = []
    points: list[list[float]] = []
    cx = cy = 0.0
    start: tuple[float, float] | None = None
    command = ""
    numbers: list[float] = []

    def flush_subpath(closed: bool) -> None:
        nonlocal points
        if len(points) >= 2:
            elements.append({"kind": "polygon" if closed else "polyline", "points": points})
        points = []

    i = 0
    while i < len(tokens):
        cmd_tok, num_tok = tokens[i]
        if cmd_tok:
            command = cmd_tok
            if command in _CURVE_COMMANDS:
                rejected.append(f"path command {command!r} in {d[:40]!r}")
                return []
            if command in "Zz":
                if start is not None:
                    cx, cy = start
                flush_subpath(closed=True)
                if start is not None:
                    points = []
            i += 1
            continue
        numbers.append(float(num_tok))
        need = 1 if command in "HhVv" else 2
        if len(numbers) < need:
            i += 1
            continue
        if command in "Mm":
            if command == "M":
                cx, cy = numbers
            else:
                cx, cy = cx + numbers[0], cy + numbers[1]
            flush_subpath(closed=False)
            start = (cx, cy)
            points = [[cx, cy]]
            command = "L" if command == "M" else "l"  # subsequent pairs are line-tos
        elif command in "Ll":
            if command == "L":
                cx, cy = numbers
            else:
                cx, cy = cx + numbers[0], cy + numbers[1]
            points.append([cx, cy])
        elif command == "H":
            cx = numbers[0]
            points.append([cx, cy])
        elif command == "h":
            cx += numbers[0]
            points.append([cx, cy])
        elif command == "V":
            cy = numbers[0]
            points.append([cx, cy])
        elif command == "v":
            cy += numbers[0]
            points.append([cx, cy])
        numbers = []
        i += 1
    flush_subpath(closed=False)
    return elements
