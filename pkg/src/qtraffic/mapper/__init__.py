from ._backend import BACKEND
from .core import (
    DEFAULT_HORIZON,
    DEFAULT_MOVE_COST,
    DEFAULT_SIGMA,
    DEFAULT_TAU,
    Architecture,
    InfeasibleError,
    LookaheadWeights,
    MappedProgram,
    Residency,
    lookahead_weights,
    map_circuit,
    partition_slice,
    schedule_assignment,
)
from .teleport import Move, TeleportEvent, teleport_schedule

__all__ = [
    "BACKEND",
    "DEFAULT_HORIZON",
    "DEFAULT_MOVE_COST",
    "DEFAULT_SIGMA",
    "DEFAULT_TAU",
    "Architecture",
    "InfeasibleError",
    "LookaheadWeights",
    "MappedProgram",
    "Move",
    "Residency",
    "TeleportEvent",
    "lookahead_weights",
    "map_circuit",
    "partition_slice",
    "schedule_assignment",
    "teleport_schedule",
]
