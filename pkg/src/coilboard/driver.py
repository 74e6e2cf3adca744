"""Multiplexed matrix driving: row-exclusive drive frames, scan schedules,
shift-register bitstreams, and I/O pin arithmetic.

A coil at (row, col) conducts when its row line is HIGH and its column line is
LOW (the per-coil diode blocks every other combination).  Only one row may be
HIGH in any frame; a set of coils spanning several rows becomes several frames
scanned in sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

from .errors import DriveError, NotFoundError
from .geometry import CoilAddress, CoilGrid, Layer


class Level(str, Enum):
    HIGH = "HIGH"
    LOW = "LOW"


@dataclass(frozen=True)
class DrivePattern:
    """Electrical state of one module layer's row and column lines."""

    module_id: str
    layer: Layer
    row_levels: tuple[Level, ...]
    col_levels: tuple[Level, ...]

    def __post_init__(self) -> None:
        high_rows = sum(1 for lv in self.row_levels if lv is Level.HIGH)
        if high_rows > 1:
            raise DriveError(f"row exclusivity violated: {high_rows} rows HIGH")

    @property
    def active_row(self) -> int | None:
        for r, lv in enumerate(self.row_levels):
            if lv is Level.HIGH:
                return r
        return None

    def energized(self) -> frozenset[tuple[int, int]]:
        """(row, col) pairs that conduct under this pattern."""
        r = self.active_row
        if r is None:
            return frozenset()
        return frozenset(
            (r, c) for c, lv in enumerate(self.col_levels) if lv is Level.LOW
        )

    def row_mask(self) -> int:
        """Bit r set iff row r is HIGH (bit 0 = row 0)."""
        mask = 0
        for r, lv in enumerate(self.row_levels):
            if lv is Level.HIGH:
                mask |= 1 << r
        return mask

    def col_mask(self) -> int:
        """Bit c set iff column c is LOW, i.e. selected (bit 0 = column 0)."""
        mask = 0
        for c, lv in enumerate(self.col_levels):
            if lv is Level.LOW:
                mask |= 1 << c
        return mask


@dataclass(frozen=True)
class FrameSchedule:
    """Ordered drive frames with dwell times; cycles until superseded."""

    frames: tuple[tuple[DrivePattern, float], ...]
    cycle: bool = True

    @property
    def cycle_ms(self) -> float:
        return sum(dwell for _, dwell in self.frames)

    def energized_ids(self, grid: CoilGrid) -> frozenset[int]:
        """Union of coil IDs energized over one full cycle."""
        out = set()
        for pattern, _ in self.frames:
            for row, col in pattern.energized():
                out.add(grid.coil_id(CoilAddress(pattern.module_id, pattern.layer, row, col)))
        return frozenset(out)


def encode_frame(
    grid: CoilGrid,
    module_id: str,
    layer: Layer,
    coils: Iterable[tuple[int, int]],
) -> DrivePattern:
    """Encode coils of one row into a drive pattern.

    The target row goes HIGH and its target columns LOW; everything else idles
    (rows LOW, columns HIGH).  An empty set encodes the idle pattern.
    """
    placement = grid.modules.get(module_id)
    if placement is None:
        raise NotFoundError(f"unknown module {module_id!r}")
    rows, cols = placement.rows, placement.cols
    coils = set(coils)
    for r, c in coils:
        if not (0 <= r < rows and 0 <= c < cols):
            raise DriveError(f"coil ({r},{c}) outside module {module_id!r}")
    target_rows = {r for r, _ in coils}
    if len(target_rows) > 1:
        raise DriveError(
            f"coils span rows {sorted(target_rows)}; split them into one frame per row"
        )
    row_levels = [Level.LOW] * rows
    col_levels = [Level.HIGH] * cols
    if coils:
        row = target_rows.pop()
        row_levels[row] = Level.HIGH
        for _, c in coils:
            col_levels[c] = Level.LOW
    return DrivePattern(module_id, layer, tuple(row_levels), tuple(col_levels))


def schedule_frames(
    grid: CoilGrid,
    targets: Iterable[CoilAddress | int],
    dwell_ms: float,
) -> FrameSchedule:
    """Compile a target coil set into one frame per occupied (module, layer, row).

    Frames are ordered by module, layer, then row, so the decoded union of the
    schedule equals the target set exactly and iteration is deterministic.
    """
    lo, hi = grid.profile.scan_period_ms
    if not (lo <= dwell_ms <= hi):
        raise DriveError(f"dwell {dwell_ms} ms outside the scan band [{lo}, {hi}] ms")
    groups: dict[tuple[str, Layer, int], set[tuple[int, int]]] = {}
    for target in targets:
        addr = grid.addr_of(target) if isinstance(target, int) else target
        grid.coil_id(addr)  # validates
        key = (addr.module_id, addr.layer, addr.row)
        groups.setdefault(key, set()).add((addr.row, addr.col))
    module_order = {mid: i for i, mid in enumerate(grid.modules)}
    layer_order = {Layer.TOP: 0, Layer.BOTTOM: 1}
    frames = []
    for module_id, layer, _row in sorted(
        groups, key=lambda k: (module_order[k[0]], layer_order[k[1]], k[2])
    ):
        pattern = encode_frame(grid, module_id, layer, groups[(module_id, layer, _row)])
        frames.append((pattern, float(dwell_ms)))
    return FrameSchedule(tuple(frames), cycle=True)


def dump_frames(schedule: FrameSchedule) -> str:
    """One line per frame: `module layer row_mask col_mask dwell_ms`.

    Masks are hex; bit 0 is row/column 0, a set row bit means HIGH, a set
    column bit means LOW (selected).
    """
    lines = []
    for pattern, dwell in schedule.frames:
        lines.append(
            f"{pattern.module_id} {pattern.layer.value} "
            f"0x{pattern.row_mask():x} 0x{pattern.col_mask():x} {dwell:g}"
        )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Daisy-chained shift registers

REGISTER_BITS = 8
CHAIN_PIN_COUNT = 3  # serial data, shift clock, latch


@dataclass(frozen=True)
class ShiftChainImage:
    """Bit image for one full chain refresh, in shift order.

    bits[0] is clocked out first and ends up in the farthest register's MSB.
    A gate bit of 1 drives its line LOW, 0 drives it HIGH (the half-bridge
    inverts: a low gate turns the P-channel side on).
    """

    bits: tuple[int, ...]
    register_count: int
    latch_after: int

    def __post_init__(self) -> None:
        if len(self.bits) != REGISTER_BITS * self.register_count:
            raise DriveError(
                f"image has {len(self.bits)} bits for {self.register_count} registers"
            )
        if self.latch_after != len(self.bits):
            raise DriveError("exactly one latch per full image is required")
        if any(b not in (0, 1) for b in self.bits):
            raise DriveError("bits must be 0 or 1")

    def to_hex(self) -> str:
        value = 0
        for b in self.bits:
            value = (value << 1) | b
        return f"{value:0{len(self.bits) // 4}x}"

    @classmethod
    def from_hex(cls, text: str, register_count: int) -> "ShiftChainImage":
        nbits = REGISTER_BITS * register_count
        if len(text) != nbits // 4:
            raise DriveError(
                f"hex image of {len(text)} digits does not fit {register_count} registers"
            )
        value = int(text, 16)
        bits = tuple((value >> (nbits - 1 - i)) & 1 for i in range(nbits))
        return cls(bits, register_count, nbits)


LineKey = tuple[str, int]  # ("row"|"col", index)
Slot = tuple[int, int]  # (register, bit) with register 0 nearest the controller


@dataclass(frozen=True)
class ChainLayout:
    """Maps each row/column line's half-bridge to two register slots.

    Every line consumes one slot per transistor gate (P then N).  Register 0
    sits nearest the controller and transmission is MSB first, so the first
    bit shifted lands in the farthest register.
    """

    module_id: str
    layer: Layer
    rows: int
    cols: int
    slots: Mapping[LineKey, tuple[Slot, Slot]]
    register_count: int

    def __post_init__(self) -> None:
        seen: dict[Slot, LineKey] = {}
        for line, (p_slot, n_slot) in self.slots.items():
            for slot in (p_slot, n_slot):
                reg, bit = slot
                if not (0 <= reg < self.register_count and 0 <= bit < REGISTER_BITS):
                    raise DriveError(f"slot {slot} outside the chain for line {line}")
                if slot in seen:
                    raise DriveError(f"slot collision at {slot}: {seen[slot]} vs {line}")
                seen[slot] = line
        for kind, count in (("row", self.rows), ("col", self.cols)):
            for i in range(count):
                if (kind, i) not in self.slots:
                    raise DriveError(f"chain layout is missing line ({kind!r}, {i})")

    def shift_position(self, slot: Slot) -> int:
        """Index into the shift-order bit vector for a (register, bit) slot."""
        reg, bit = slot
        return (self.register_count - 1 - reg) * REGISTER_BITS + (REGISTER_BITS - 1 - bit)


def default_chain_layout(grid: CoilGrid, module_id: str, layer: Layer) -> ChainLayout:
    """Pack lines in row-then-column order, two consecutive slots per line."""
    placement = grid.modules.get(module_id)
    if placement is None:
        raise NotFoundError(f"unknown module {module_id!r}")
    rows, cols = placement.rows, placement.cols
    register_count = math.ceil(2 * (rows + cols) / REGISTER_BITS)
    slots: dict[LineKey, tuple[Slot, Slot]] = {}
    cursor = 0
    for kind, count in (("row", rows), ("col", cols)):
        for i in range(count):
            p_slot = (cursor // REGISTER_BITS, cursor % REGISTER_BITS)
            n_slot = ((cursor + 1) // REGISTER_BITS, (cursor + 1) % REGISTER_BITS)
            slots[(kind, i)] = (p_slot, n_slot)
            cursor += 2
    return ChainLayout(module_id, layer, rows, cols, slots, register_count)


def serialize_to_shift_chain(pattern: DrivePattern, layout: ChainLayout) -> ShiftChainImage:
    """Render a drive pattern as the chain's full bit image.

    Both gate slots of a line carry the same bit: 0 when the line is HIGH,
    1 when LOW.  Unmapped filler slots idle at 0.
    """
    if len(pattern.row_levels) != layout.rows or len(pattern.col_levels) != layout.cols:
        raise DriveError(
            f"pattern is {len(pattern.row_levels)}x{len(pattern.col_levels)} lines, "
            f"layout expects {layout.rows}x{layout.cols}"
        )
    nbits = REGISTER_BITS * layout.register_count
    bits = [0] * nbits
    for kind, levels in (("row", pattern.row_levels), ("col", pattern.col_levels)):
        for i, level in enumerate(levels):
            gate = 0 if level is Level.HIGH else 1
            for slot in layout.slots[(kind, i)]:
                bits[layout.shift_position(slot)] = gate
    return ShiftChainImage(tuple(bits), layout.register_count, nbits)


def deserialize_shift_chain(image: ShiftChainImage, layout: ChainLayout) -> DrivePattern:
    """Invert serialize_to_shift_chain; both gate bits of a line must agree."""
    if image.register_count != layout.register_count:
        raise DriveError(
            f"image spans {image.register_count} registers, layout {layout.register_count}"
        )
    levels: dict[LineKey, Level] = {}
    for line, (p_slot, n_slot) in layout.slots.items():
        p_bit = image.bits[layout.shift_position(p_slot)]
        n_bit = image.bits[layout.shift_position(n_slot)]
        if p_bit != n_bit:
            raise DriveError(f"gate bits disagree on line {line}; image is corrupt")
        levels[line] = Level.HIGH if p_bit == 0 else Level.LOW
    return DrivePattern(
        layout.module_id,
        layout.layer,
        tuple(levels[("row", r)] for r in range(layout.rows)),
        tuple(levels[("col", c)] for c in range(layout.cols)),
    )


def io_pin_count(rows: int, cols: int, use_shift_chain: bool) -> int:
    """Controller pins needed to drive a rows x cols matrix.

    Direct drive needs one pin per line; a daisy chain always needs three
    (data, clock, latch) regardless of size.
    """
    if rows < 1 or cols < 1:
        raise DriveError(f"matrix needs at least one row and column, got {rows}x{cols}")
    return CHAIN_PIN_COUNT if use_shift_chain else rows + cols
