"""Two-layer offset coil lattice: addressing, geometry, adjacency, and module tiling.

Coordinates are millimeters, origin at the board's lower-left corner, x to the
right, y up.  Internally every coil center lives on an integer half-pitch
lattice, which makes neighbor lookups and seam continuity exact (no float
tolerance anywhere).  TOP-layer centers have odd half-pitch coordinates,
BOTTOM-layer centers even ones, so opposite-layer adjacency is a parity fact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

from .errors import GridError, NotFoundError


class Layer(str, Enum):
    TOP = "TOP"
    BOTTOM = "BOTTOM"


# Half-pitch offset of a layer's lattice relative to the module origin.
_LAYER_SHIFT = {Layer.TOP: 1, Layer.BOTTOM: 2}


@dataclass(frozen=True)
class HardwareProfile:
    """Electrical and mechanical constants of one board build.

    Defaults describe the reference 16x16 prototype: 22-turn PCB coils,
    0.5-1 A drive at 9 V, 10-100 ms row scan, 2x3 mm N50 disc magnets.
    """

    coil_turns: int = 22
    coil_size_mm: float = 15.85
    trace_width_mm: float = 0.1524
    coil_current_amps: tuple[float, float] = (0.5, 1.0)
    supply_volts: float = 9.0
    scan_period_ms: tuple[float, float] = (10.0, 100.0)
    magnet_diameter_mm: float = 2.0
    magnet_thickness_mm: float = 3.0
    magnet_grade: str = "N50"
    marker_unit_cost_usd: float = 0.20

    def __post_init__(self) -> None:
        positives = {
            "coil_turns": self.coil_turns,
            "coil_size_mm": self.coil_size_mm,
            "trace_width_mm": self.trace_width_mm,
            "supply_volts": self.supply_volts,
            "magnet_diameter_mm": self.magnet_diameter_mm,
            "magnet_thickness_mm": self.magnet_thickness_mm,
            "marker_unit_cost_usd": self.marker_unit_cost_usd,
        }
        for name, value in positives.items():
            if value <= 0:
                raise GridError(f"{name} must be strictly positive, got {value}")
        for name, (lo, hi) in (
            ("coil_current_amps", self.coil_current_amps),
            ("scan_period_ms", self.scan_period_ms),
        ):
            if lo <= 0 or hi <= 0:
                raise GridError(f"{name} bounds must be strictly positive")
            if lo > hi:
                raise GridError(f"{name} min {lo} exceeds max {hi}")

    def to_dict(self) -> dict:
        return {
            "coil_turns": self.coil_turns,
            "coil_size_mm": self.coil_size_mm,
            "trace_width_mm": self.trace_width_mm,
            "coil_current_amps": list(self.coil_current_amps),
            "supply_volts": self.supply_volts,
            "scan_period_ms": list(self.scan_period_ms),
            "magnet_diameter_mm": self.magnet_diameter_mm,
            "magnet_thickness_mm": self.magnet_thickness_mm,
            "magnet_grade": self.magnet_grade,
            "marker_unit_cost_usd": self.marker_unit_cost_usd,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "HardwareProfile":
        kwargs = dict(data)
        for key in ("coil_current_amps", "scan_period_ms"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


DEFAULT_PROFILE = HardwareProfile()


@dataclass(frozen=True)
class CoilAddress:
    """Identity of one coil: module, layer, and row/column within the layer."""

    module_id: str
    layer: Layer
    row: int
    col: int


@dataclass(frozen=True)
class ModulePlacement:
    """One tiled board module: its per-layer grid size and mm origin."""

    module_id: str
    rows: int
    cols: int
    origin_mm: tuple[float, float] = (0.0, 0.0)


def _to_half_units(value_mm: float, half_mm: float, what: str) -> int:
    scaled = value_mm / half_mm
    nearest = round(scaled)
    if abs(scaled - nearest) > 1e-9 * max(1.0, abs(scaled)):
        raise GridError(f"{what} {value_mm} mm is not on the half-pitch lattice")
    return int(nearest)


class CoilGrid:
    """Immutable two-layer coil lattice over one or more tiled modules.

    Safe to share read-only across planners and simulators once built.
    """

    def __init__(
        self,
        placements: Iterable[ModulePlacement],
        pitch_mm: float,
        profile: HardwareProfile = DEFAULT_PROFILE,
    ):
        placements = list(placements)
        if not placements:
            raise GridError("a grid needs at least one module")
        if pitch_mm <= 0:
            raise GridError(f"pitch must be positive, got {pitch_mm}")
        self.pitch_mm = float(pitch_mm)
        self.profile = profile
        self._half_mm = self.pitch_mm / 2.0

        self._modules: dict[str, ModulePlacement] = {}
        # per module: (origin_x_half, origin_y_half, rows, cols, base_id)
        self._meta: dict[str, tuple[int, int, int, int, int]] = {}
        base = 0
        rects: list[tuple[int, int, int, int, str]] = []
        for pl in placements:
            if pl.module_id in self._modules:
                raise GridError(f"duplicate module id {pl.module_id!r}")
            if pl.rows < 2 or pl.cols < 2:
                raise GridError(
                    f"module {pl.module_id!r} needs at least 2 rows and 2 cols"
                )
            ox = _to_half_units(pl.origin_mm[0], self._half_mm, "module origin x")
            oy = _to_half_units(pl.origin_mm[1], self._half_mm, "module origin y")
            if ox % 2 or oy % 2:
                raise GridError(
                    f"module {pl.module_id!r} origin must be a whole-pitch multiple "
                    "(tiles share one lattice)"
                )
            rect = (ox, oy, ox + 2 * pl.cols, oy + 2 * pl.rows)
            for other in rects:
                if rect[0] < other[2] and other[0] < rect[2] and rect[1] < other[3] and other[1] < rect[3]:
                    raise GridError(
                        f"modules {pl.module_id!r} and {other[4]!r} overlap"
                    )
            rects.append((*rect, pl.module_id))
            self._modules[pl.module_id] = pl
            self._meta[pl.module_id] = (ox, oy, pl.rows, pl.cols, base)
            base += 2 * pl.rows * pl.cols
        self._coil_count = base

        # Dense ID tables and the half-unit center index used for adjacency.
        self._id_addr: list[CoilAddress] = [None] * base  # type: ignore[list-item]
        self._id_half: list[tuple[int, int]] = [None] * base  # type: ignore[list-item]
        self._half_to_id: dict[tuple[int, int], int] = {}
        for module_id, (ox, oy, rows, cols, mbase) in self._meta.items():
            for layer in (Layer.TOP, Layer.BOTTOM):
                shift = _LAYER_SHIFT[layer]
                layer_base = mbase + (0 if layer is Layer.TOP else rows * cols)
                for r in range(rows):
                    for c in range(cols):
                        cid = layer_base + r * cols + c
                        half = (ox + 2 * c + shift, oy + 2 * r + shift)
                        self._id_addr[cid] = CoilAddress(module_id, layer, r, c)
                        self._id_half[cid] = half
                        self._half_to_id[half] = cid

    # ------------------------------------------------------------------
    # identity

    @property
    def modules(self) -> dict[str, ModulePlacement]:
        return dict(self._modules)

    @property
    def coil_count(self) -> int:
        return self._coil_count

    def coil_id(self, addr: CoilAddress) -> int:
        """Packed integer ID of a coil; bijective with addresses."""
        meta = self._meta.get(addr.module_id)
        if meta is None:
            raise NotFoundError(f"unknown module {addr.module_id!r}")
        ox, oy, rows, cols, base = meta
        if not (0 <= addr.row < rows and 0 <= addr.col < cols):
            raise NotFoundError(
                f"coil ({addr.row},{addr.col}) outside module {addr.module_id!r}"
            )
        layer_off = 0 if addr.layer is Layer.TOP else rows * cols
        return base + layer_off + addr.row * cols + addr.col

    def addr_of(self, coil_id: int) -> CoilAddress:
        if not isinstance(coil_id, int) or not (0 <= coil_id < self._coil_count):
            raise NotFoundError(f"unknown coil id {coil_id}")
        return self._id_addr[coil_id]

    def addresses(self) -> Iterator[CoilAddress]:
        return iter(self._id_addr)

    # ------------------------------------------------------------------
    # geometry

    def half_center(self, coil_id: int) -> tuple[int, int]:
        """Center in exact half-pitch units (internal integer lattice)."""
        if not (0 <= coil_id < self._coil_count):
            raise NotFoundError(f"unknown coil id {coil_id}")
        return self._id_half[coil_id]

    def center_of_id(self, coil_id: int) -> tuple[float, float]:
        hx, hy = self.half_center(coil_id)
        return (hx * self._half_mm, hy * self._half_mm)

    def coil_center(self, addr: CoilAddress) -> tuple[float, float]:
        return self.center_of_id(self.coil_id(addr))

    def board_bounds(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) of the union of module footprints."""
        xs, ys, xe, ye = [], [], [], []
        for ox, oy, rows, cols, _ in self._meta.values():
            xs.append(ox)
            ys.append(oy)
            xe.append(ox + 2 * cols)
            ye.append(oy + 2 * rows)
        h = self._half_mm
        return (min(xs) * h, min(ys) * h, max(xe) * h, max(ye) * h)

    def on_board(self, x_mm: float, y_mm: float) -> bool:
        for ox, oy, rows, cols, _ in self._meta.values():
            h = self._half_mm
            if ox * h <= x_mm <= (ox + 2 * cols) * h and oy * h <= y_mm <= (oy + 2 * rows) * h:
                return True
        return False

    def nearest_coil_id(self, x_mm: float, y_mm: float) -> int:
        """Coil whose center is closest to a point; ties break to the lowest ID."""
        best: tuple[float, int] | None = None
        h = self._half_mm
        for module_id, (ox, oy, rows, cols, _) in self._meta.items():
            for layer in (Layer.TOP, Layer.BOTTOM):
                shift = _LAYER_SHIFT[layer]
                c_guess = round((x_mm / h - ox - shift) / 2)
                r_guess = round((y_mm / h - oy - shift) / 2)
                for r in range(max(0, r_guess - 1), min(rows, r_guess + 2)):
                    for c in range(max(0, c_guess - 1), min(cols, c_guess + 2)):
                        cid = self.coil_id(CoilAddress(module_id, layer, r, c))
                        cx, cy = self.center_of_id(cid)
                        d2 = (cx - x_mm) ** 2 + (cy - y_mm) ** 2
                        if best is None or (d2, cid) < best:
                            best = (d2, cid)
        if best is None:
            raise NotFoundError("grid has no coils")
        return best[1]

    # ------------------------------------------------------------------
    # adjacency

    def neighbor_ids(self, coil_id: int) -> tuple[int, ...]:
        """Opposite-layer coils one half-pitch away in each axis, sorted by ID.

        Parity of the half-unit lattice guarantees the layer alternation;
        seam neighbors in adjacent modules fall out of the shared index.
        """
        hx, hy = self.half_center(coil_id)
        found = []
        for dx in (-1, 1):
            for dy in (-1, 1):
                nid = self._half_to_id.get((hx + dx, hy + dy))
                if nid is not None:
                    found.append(nid)
        found.sort()
        return tuple(found)

    def neighbors(self, addr: CoilAddress) -> list[CoilAddress]:
        return [self._id_addr[nid] for nid in self.neighbor_ids(self.coil_id(addr))]

    def half_centers(self) -> list[tuple[int, int]]:
        """Dense center table in half-pitch units, indexed by coil ID."""
        return self._id_half

    def neighbors_table(self) -> list[tuple[int, ...]]:
        """Adjacency lists for every coil, built once and cached."""
        cached = getattr(self, "_neighbors_table", None)
        if cached is None:
            cached = [self.neighbor_ids(cid) for cid in range(self._coil_count)]
            self._neighbors_table = cached
        return cached

    def moves_table(self) -> list[tuple[int, ...]]:
        """Per-coil move options including staying put, sorted by ID."""
        cached = getattr(self, "_moves_table", None)
        if cached is None:
            cached = [
                tuple(sorted((cid, *nbrs)))
                for cid, nbrs in enumerate(self.neighbors_table())
            ]
            self._moves_table = cached
        return cached

    # ------------------------------------------------------------------
    # serialization

    def to_dict(self) -> dict:
        return {
            "modules": [
                {
                    "id": pl.module_id,
                    "rows": pl.rows,
                    "cols": pl.cols,
                    "origin_mm": list(pl.origin_mm),
                }
                for pl in self._modules.values()
            ],
            "pitch_mm": self.pitch_mm,
            "profile": self.profile.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CoilGrid":
        try:
            placements = [
                ModulePlacement(m["id"], m["rows"], m["cols"], tuple(m["origin_mm"]))
                for m in data["modules"]
            ]
            pitch = data["pitch_mm"]
            profile = HardwareProfile.from_dict(data["profile"])
        except (KeyError, TypeError) as exc:
            raise GridError(f"malformed grid description: {exc}") from exc
        return cls(placements, pitch, profile)

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "CoilGrid":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise GridError(f"grid file is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "CoilGrid":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def build_grid(
    rows: int,
    cols: int,
    board_size_mm: float,
    profile: HardwareProfile = DEFAULT_PROFILE,
) -> CoilGrid:
    """Single-module grid; the pitch is the board width divided by the column count."""
    if rows < 2 or cols < 2:
        raise GridError(f"grid needs at least 2x2 coils per layer, got {rows}x{cols}")
    if board_size_mm <= 0:
        raise GridError(f"board size must be positive, got {board_size_mm}")
    pitch = board_size_mm / cols
    return CoilGrid([ModulePlacement("m0", rows, cols)], pitch, profile)


def tile_grids(
    placements: Iterable[ModulePlacement],
    pitch_mm: float,
    profile: HardwareProfile = DEFAULT_PROFILE,
) -> CoilGrid:
    """Merge axis-aligned modules sharing one pitch into a single grid.

    Placements must not overlap; edge-adjacent modules become seam-continuous
    (the adjacency graph connects across the shared edge).
    """
    return CoilGrid(placements, pitch_mm, profile)
