from .backend import available_backends, default_backend
from .world import (
    Action,
    Kind,
    PlacementError,
    StepOutcome,
    Vehicle,
    World,
    WorldConfig,
    backend_of,
    new_world,
    write_frames,
    AMBIENT_SPEED_MPH,
    BODY_L,
    BODY_W,
    CELL,
    EGO_SPEED_MPH,
    EGO_Y,
    LANES,
    LANE_W,
    LENGTH,
    ROWS,
    VEHICLE_COUNT,
)

__all__ = [
    "Action",
    "Kind",
    "PlacementError",
    "StepOutcome",
    "Vehicle",
    "World",
    "WorldConfig",
    "available_backends",
    "backend_of",
    "default_backend",
    "new_world",
    "write_frames",
    "AMBIENT_SPEED_MPH",
    "BODY_L",
    "BODY_W",
    "CELL",
    "EGO_SPEED_MPH",
    "EGO_Y",
    "LANES",
    "LANE_W",
    "LENGTH",
    "ROWS",
    "VEHICLE_COUNT",
]
