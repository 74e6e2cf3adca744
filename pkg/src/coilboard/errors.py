"""Exception types shared across the package."""


class CoilboardError(Exception):
    """Base class for all coilboard errors."""


class GridError(CoilboardError):
    """Invalid board geometry, profile values, or module tiling."""


class NotFoundError(CoilboardError):
    """Unknown coil ID, marker ID, or content name."""


class DriveError(CoilboardError):
    """Violation of the multiplexed drive contract (row sharing, dwell range, chain layout)."""


class SeparationError(CoilboardError):
    """Marker placement or target set breaks the minimum separation constraint."""


class SimulationError(CoilboardError):
    """Invalid simulator input (off-board position, bad scenario)."""


class PlanningError(CoilboardError):
    """Infeasible or malformed motion-planning request."""


class ContentError(CoilboardError):
    """Invalid authored content (configuration, binding, sequence, graphic import)."""
