"""Initial-condition sampling for Retakes rounds."""

from __future__ import annotations

from dataclasses import dataclass

from .geometry import MapGeometry
from .state import DEFENSE, OFFENSE, PlayerState

MAX_OFFENSE = 4
MAX_DEFENSE = 3
# Offense ids occupy model slots 0..4, defense ids slots 5..9.
DEFENSE_SLOT0 = 5
SPAWN_JITTER = 40.0


@dataclass
class InitialConditions:
    bombsite: str
    players: list  # (id, team, x, y, yaw)
    armor: int = 100

    def build_players(self):
        return [PlayerState(pid, team, x, y, yaw=yaw, armor=self.armor) for pid, team, x, y, yaw in self.players]

    def to_dict(self):
        return {"bombsite": self.bombsite, "players": [list(p) for p in self.players], "armor": self.armor}


def _jittered(geometry, rng, base, tries=50):
    bx, by = base
    for _ in range(tries):
        x = bx + rng.uniform(-SPAWN_JITTER, SPAWN_JITTER)
        y = by + rng.uniform(-SPAWN_JITTER, SPAWN_JITTER)
        if not geometry.point_blocked(x, y):
            return round(x, 2), round(y, 2)
    return float(bx), float(by)


def sample_initial_conditions(geometry: MapGeometry, rng, offense_range=(1, MAX_OFFENSE), defense_range=(1, MAX_DEFENSE)):
    """Draw team sizes, bombsite and spawns; one defender always starts at the bomb."""
    n_off = int(rng.integers(offense_range[0], offense_range[1] + 1))
    n_def = int(rng.integers(defense_range[0], defense_range[1] + 1))
    site = "A" if rng.random() < 0.5 else "B"
    players = []
    off_spawns = list(geometry.spawns[OFFENSE])
    picks = rng.permutation(len(off_spawns))[:n_off]
    for slot, k in enumerate(picks):
        x, y = _jittered(geometry, rng, off_spawns[int(k)])
        players.append((slot, OFFENSE, x, y, 90.0))
    bx, by = geometry.bombs[site]
    x, y = _jittered(geometry, rng, (bx, by))
    players.append((DEFENSE_SLOT0, DEFENSE, x, y, -90.0))
    def_spawns = list(geometry.spawns[DEFENSE])
    picks = rng.permutation(len(def_spawns))[: n_def - 1]
    for i, k in enumerate(picks, start=1):
        x, y = _jittered(geometry, rng, def_spawns[int(k)])
        players.append((DEFENSE_SLOT0 + i, DEFENSE, x, y, -90.0))
    return InitialConditions(site, players)
