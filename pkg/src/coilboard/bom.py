"""Parametric bill-of-materials estimates for tiled coil boards.

Counts scale per 16x16 module: 32 half-bridge MOSFETs, 128 multiplexing
diodes, 4 daisy-chained shift registers, and one PCB panel, plus a single
microcontroller per board.  Pricing is two-tier: one-off prices for small
builds and volume prices from ten modules up.  Unit prices are kept as exact
fractions so the volume line items come out in whole dollars.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import GridError, NotFoundError

MODULE_DIM = 16
BULK_MODULE_THRESHOLD = 10

# Per-module part counts for the reference module design.
PARTS_PER_MODULE: dict[str, int] = {
    "mosfet": 32,
    "diode": 128,
    "shift_register": 4,
    "pcb": 1,
}


@dataclass(frozen=True)
class PriceTier:
    """USD unit price at one-off quantity and at volume."""

    small_usd: Fraction
    bulk_usd: Fraction


# Volume prices are the per-module cost of a 100-module production run;
# one-off prices reflect small-order distributor pricing.
DEFAULT_PRICE_TABLE: dict[str, PriceTier] = {
    "mosfet": PriceTier(Fraction(3, 10), Fraction(1, 25)),
    "diode": PriceTier(Fraction(1, 50), Fraction(147, 12800)),
    "shift_register": PriceTier(Fraction(1, 2), Fraction(1, 20)),
    "pcb": PriceTier(Fraction(10), Fraction(2)),
    "microcontroller": PriceTier(Fraction(15), Fraction(15)),
}


@dataclass(frozen=True)
class BomLine:
    part: str
    count: float
    unit_cost_usd: float
    subtotal_usd: float


@dataclass(frozen=True)
class BomEstimate:
    line_items: dict[str, BomLine]
    total_usd: float
    module_count: float
    extrapolated: bool

    def as_dict(self) -> dict:
        return {
            "line_items": {
                name: {
                    "count": line.count,
                    "unit_cost_usd": line.unit_cost_usd,
                    "subtotal_usd": line.subtotal_usd,
                }
                for name, line in self.line_items.items()
            },
            "total_usd": self.total_usd,
            "module_count": self.module_count,
            "extrapolated": self.extrapolated,
        }


def estimate_bom(
    rows: int,
    cols: int,
    price_table: dict[str, PriceTier] | None = None,
) -> BomEstimate:
    """Itemized parts cost for a rows x cols coil board (per layer).

    Dimensions that are whole multiples of the 16-coil module give calibrated
    estimates; anything smaller or fractional is scaled linearly from the
    module data and flagged as extrapolated.
    """
    if rows < 1 or cols < 1:
        raise GridError(f"board needs positive dimensions, got {rows}x{cols}")
    prices = DEFAULT_PRICE_TABLE if price_table is None else price_table
    for part in list(PARTS_PER_MODULE) + ["microcontroller"]:
        if part not in prices:
            raise NotFoundError(f"price table has no entry for part {part!r}")

    exact = rows % MODULE_DIM == 0 and cols % MODULE_DIM == 0
    modules = Fraction(rows * cols, MODULE_DIM * MODULE_DIM)
    whole_modules = int(modules) if exact else modules
    tier = "bulk_usd" if modules >= BULK_MODULE_THRESHOLD else "small_usd"

    lines: dict[str, BomLine] = {}
    total = Fraction(0)
    for part, per_module in PARTS_PER_MODULE.items():
        count = modules * per_module
        if part != "pcb" and count != int(count):
            count = Fraction(math.ceil(count))  # discrete parts round up
        unit = getattr(prices[part], tier)
        subtotal = count * unit
        total += subtotal
        lines[part] = BomLine(part, _num(count), float(unit), _cents(subtotal))
    mcu_unit = getattr(prices["microcontroller"], tier)
    total += mcu_unit
    lines["microcontroller"] = BomLine("microcontroller", 1, float(mcu_unit), _cents(mcu_unit))

    return BomEstimate(lines, _cents(total), _num(whole_modules), not exact)


def _num(value: Fraction | int) -> float | int:
    if isinstance(value, int):
        return value
    return int(value) if value.denominator == 1 else float(value)


def _cents(value: Fraction) -> float:
    return float(round(value, 2))
