"""coilboard: a coil-matrix tactile marker display in software.

Models a two-layer electromagnetic coil board that moves passive magnetic
markers over static tactile graphics: lattice geometry, multiplexed drive
scheduling and shift-register serialization, magnet capture simulation,
collision-free multi-marker motion planning, and an HTTP control service
for authoring and commanding marker configurations.
"""

from .bom import BomEstimate, BomLine, PriceTier, estimate_bom
from .driver import (
    ChainLayout,
    DrivePattern,
    FrameSchedule,
    Level,
    ShiftChainImage,
    default_chain_layout,
    deserialize_shift_chain,
    dump_frames,
    encode_frame,
    io_pin_count,
    schedule_frames,
    serialize_to_shift_chain,
)
from .errors import (
    CoilboardError,
    ContentError,
    DriveError,
    GridError,
    NotFoundError,
    PlanningError,
    SeparationError,
    SimulationError,
)
from .executor import FrameLogExecutor, SimExecutor
from .geometry import (
    DEFAULT_PROFILE,
    CoilAddress,
    CoilGrid,
    HardwareProfile,
    Layer,
    ModulePlacement,
    build_grid,
    tile_grids,
)
from .planner import (
    MotionPlan,
    PlanStatus,
    compile_plan,
    park_all,
    plan_multi,
    plan_path,
)
from .simulation import Marker, MarkerState, SimEvent, SimParams, SimState

__version__ = "0.1.0"
