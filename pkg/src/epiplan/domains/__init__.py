from .common import (
    COMM_ACTIONS,
    CommModel,
    CommModelError,
    GenerationError,
    GroundTruth,
    Scenario,
    apply_comm_model,
)
from .gridworld import GridworldConfig, gridworld
from .bw4t import BW4TConfig, bw4t
