"""Player, map, event, and action records."""

from __future__ import annotations

import math
from dataclasses import dataclass

OFFENSE = "offense"
DEFENSE = "defense"
TEAMS = (OFFENSE, DEFENSE)

SHOOT = "shoot"
HURT = "hurt"
ELIMINATION = "elimination"
EVENT_TYPES = (SHOOT, HURT, ELIMINATION)


@dataclass(slots=True)
class PlayerState:
    id: int
    team: str
    x: float
    y: float
    z: float = 0.0
    vx: float = 0.0
    vy: float = 0.0
    vz: float = 0.0
    yaw: float = 0.0
    pitch: float = 0.0
    health: int = 100
    armor: int = 100
    next_fire_time: float = 0.0

    @property
    def alive(self):
        return self.health > 0

    @property
    def position(self):
        return (self.x, self.y, self.z)

    @property
    def velocity(self):
        return (self.vx, self.vy, self.vz)

    @property
    def view(self):
        return (self.yaw, self.pitch)

    @property
    def speed_xy(self):
        return math.hypot(self.vx, self.vy)

    @property
    def airborne(self):
        return self.z > 0.0 or self.vz > 0.0

    def copy(self):
        return PlayerState(
            self.id, self.team, self.x, self.y, self.z, self.vx, self.vy, self.vz,
            self.yaw, self.pitch, self.health, self.armor, self.next_fire_time,
        )


@dataclass(slots=True)
class MapState:
    bombsite: str
    seconds_to_explosion: float


@dataclass(slots=True)
class GameEvent:
    src: int
    type: str
    tick: int
    tgt: int | None = None
    # Tick at which the shooter acquired ``tgt`` as its aim target (shoot events only).
    acquired: int | None = None

    def to_dict(self):
        d = {"src": self.src, "type": self.type, "tick": self.tick}
        if self.tgt is not None:
            d["tgt"] = self.tgt
        if self.acquired is not None:
            d["acq"] = self.acquired
        return d

    @classmethod
    def from_dict(cls, d):
        if d["type"] not in EVENT_TYPES:
            raise ValueError(f"unknown event type {d['type']!r}")
        if d["type"] != SHOOT and d.get("tgt") is None:
            raise ValueError(f"{d['type']} event without a target")
        return cls(int(d["src"]), d["type"], int(d["tick"]), d.get("tgt"), d.get("acq"))


@dataclass(slots=True)
class ActionCommand:
    move: int = 0
    du: tuple = (0.0, 0.0)
    fire: bool = False
    aim_target: int | None = None
    aim_acquired: int | None = None


def wrap_angle(deg):
    """Wrap to (-180, 180]."""
    a = math.fmod(deg + 180.0, 360.0)
    if a <= 0.0:
        a += 360.0
    return a - 180.0
