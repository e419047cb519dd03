"""The 97-way discrete movement command space."""

import math
from typing import NamedTuple

NUM_DIRECTIONS = 16
NUM_SPEEDS = 3
NUM_MOVES = 1 + NUM_DIRECTIONS * NUM_SPEEDS * 2
STILL = 0
DIRECTION_STEP_DEG = 360.0 / NUM_DIRECTIONS

# slow, medium, fast (map units per second)
DEFAULT_SPEEDS = (90.0, 130.0, 250.0)
STILL_THRESHOLD = 5.0


class MoveCommand(NamedTuple):
    """Decoded command; ``direction``/``speed``/``jump`` are None for still."""

    index: int
    direction: int | None
    speed: int | None
    jump: int | None

    @property
    def is_still(self):
        return self.index == STILL


def encode_move(direction=None, speed=None, jump=0):
    """Index of a command; call with no arguments for still."""
    if direction is None:
        return STILL
    if not (0 <= direction < NUM_DIRECTIONS and 0 <= speed < NUM_SPEEDS and jump in (0, 1)):
        raise ValueError(f"invalid move components k={direction} s={speed} j={jump}")
    return 1 + direction + NUM_DIRECTIONS * speed + NUM_DIRECTIONS * NUM_SPEEDS * jump


def decode_move(index):
    if not 0 <= index < NUM_MOVES:
        raise ValueError(f"move index {index} outside 0..{NUM_MOVES - 1}")
    if index == STILL:
        return MoveCommand(STILL, None, None, None)
    r = index - 1
    return MoveCommand(index, r % NUM_DIRECTIONS, (r // NUM_DIRECTIONS) % NUM_SPEEDS, r // (NUM_DIRECTIONS * NUM_SPEEDS))


def direction_angle_deg(direction):
    return DIRECTION_STEP_DEG * direction


# Unit vectors for the 16 directions, computed once.
DIRECTION_VECTORS = tuple(
    (math.cos(math.radians(direction_angle_deg(k))), math.sin(math.radians(direction_angle_deg(k))))
    for k in range(NUM_DIRECTIONS)
)


def command_velocity(index, speeds=DEFAULT_SPEEDS):
    """Steady-state horizontal velocity (vx, vy) of a command."""
    if index == STILL:
        return 0.0, 0.0
    cmd = decode_move(index)
    ux, uy = DIRECTION_VECTORS[cmd.direction]
    s = speeds[cmd.speed]
    return s * ux, s * uy


def nearest_direction(angle_deg):
    return int(round(angle_deg / DIRECTION_STEP_DEG)) % NUM_DIRECTIONS
