"""Player tokens: the per-player feature vectors the movement model reads.

Layout of a base token (width 15)::

    0:3   position, x and y divided by map extent, z / 100
    3:7   alive, team (1 = defense), bombsite (1 = B), seconds_to_explosion / 40
    7:12  visibility bit for each of the 5 enemy slots
    12    distance to bomb / map diagonal
    13    distance to nearest living teammate / map diagonal (1 when alone)
    14    seconds since any enemy was last visible, capped at 10, / 10

The history variant appends ``3 * depth`` columns holding the normalized
positions of earlier policy steps.
"""

from __future__ import annotations

import math
from collections import deque

import numpy as np

from .. import kernels
from ..world.moves import DEFAULT_SPEEDS, STILL, STILL_THRESHOLD, encode_move, nearest_direction
from ..world.state import DEFENSE, OFFENSE

NUM_SLOTS = 10
SLOTS_PER_TEAM = 5
BASE_WIDTH = 15
POS = slice(0, 3)
ALIVE, TEAM, SITE, TIME_LEFT = 3, 4, 5, 6
VIS = slice(7, 12)
BOMB_DIST, MATE_DIST, SINCE_SEEN = 12, 13, 14
Z_SCALE = 100.0
ROUND_TIME = 40.0
SEEN_CAP = 10.0
# Policy steps are two 16 Hz snapshots apart.
HISTORY_STRIDE = 2


def token_width(history_depth=0):
    return BASE_WIDTH + 3 * history_depth


def slot_of(pid):
    if not 0 <= pid < NUM_SLOTS:
        raise ValueError(f"player id {pid} is not a token slot 0..{NUM_SLOTS - 1}")
    return pid


def normalization(geometry):
    """Constants used to scale features; stored with every sample pack and checkpoint."""
    x0, y0, x1, y1 = geometry.bounds
    return {
        "origin": [x0, y0],
        "extent": [x1 - x0, y1 - y0],
        "diagonal": geometry.diagonal,
        "z_scale": Z_SCALE,
        "round_time": ROUND_TIME,
        "seen_cap": SEEN_CAP,
    }


def infer_move_command(vx, vy, vz=0.0, speeds=DEFAULT_SPEEDS):
    """Quantize a logged velocity to the nearest of the 97 movement commands."""
    sp = math.hypot(vx, vy)
    if sp < STILL_THRESHOLD:
        return STILL
    k = nearest_direction(math.degrees(math.atan2(vy, vx)))
    s = min(range(len(speeds)), key=lambda i: abs(speeds[i] - sp))
    return encode_move(k, s, 1 if vz > 0.0 else 0)


class FeatureTracker:
    """Builds tokens snapshot by snapshot for one round.

    Call ``observe`` at every 16 Hz snapshot in order; it carries the
    last-seen clock and the position history between calls.
    """

    def __init__(self, geometry, bombsite, history_depth=0):
        self.geometry = geometry
        self.bombsite = bombsite
        self.bomb = geometry.bombs[bombsite]
        self.history_depth = history_depth
        norm = normalization(geometry)
        self._origin = np.array(norm["origin"])
        self._extent = np.array(norm["extent"])
        self._diag = norm["diagonal"]
        self._last_seen = {}
        self._history = deque(maxlen=history_depth * HISTORY_STRIDE + 1)

    def observe(self, players, seconds_to_explosion, now):
        """Tokens (10, width) float32 and alive mask (10,) for one snapshot."""
        tokens = np.zeros((NUM_SLOTS, token_width(self.history_depth)), dtype=np.float32)
        alive = np.zeros(NUM_SLOTS, dtype=bool)
        live = [p for p in players if p.alive]
        positions = np.zeros((NUM_SLOTS, 3))
        if live:
            xy = np.array([(p.x, p.y) for p in live], dtype=np.float64)
            vis = kernels.visibility_matrix(xy, self.geometry.wall_array)
        bx, by = self.bomb
        for a, p in enumerate(live):
            s = slot_of(p.id)
            alive[s] = True
            row = tokens[s]
            pos = ((p.x - self._origin[0]) / self._extent[0], (p.y - self._origin[1]) / self._extent[1], p.z / Z_SCALE)
            positions[s] = pos
            row[POS] = pos
            row[ALIVE] = 1.0
            row[TEAM] = 1.0 if p.team == DEFENSE else 0.0
            row[SITE] = 1.0 if self.bombsite == "B" else 0.0
            row[TIME_LEFT] = seconds_to_explosion / ROUND_TIME
            saw_enemy = False
            mate = math.inf
            for b, q in enumerate(live):
                if q.team != p.team:
                    if vis[a, b]:
                        row[VIS.start + slot_of(q.id) % SLOTS_PER_TEAM] = 1.0
                        saw_enemy = True
                elif b != a:
                    mate = min(mate, math.hypot(q.x - p.x, q.y - p.y))
            if saw_enemy:
                self._last_seen[p.id] = now
            row[BOMB_DIST] = math.hypot(p.x - bx, p.y - by) / self._diag
            row[MATE_DIST] = 1.0 if mate == math.inf else mate / self._diag
            since = now - self._last_seen.get(p.id, -math.inf)
            row[SINCE_SEEN] = min(since, SEEN_CAP) / SEEN_CAP
        if self.history_depth:
            self._history.append(positions)
            for k in range(1, self.history_depth + 1):
                idx = max(len(self._history) - 1 - k * HISTORY_STRIDE, 0)
                past = self._history[idx]
                cols = slice(BASE_WIDTH + 3 * (k - 1), BASE_WIDTH + 3 * k)
                tokens[alive, cols] = past[alive]
        return tokens, alive


def team_slots(team):
    return range(0, SLOTS_PER_TEAM) if team == OFFENSE else range(SLOTS_PER_TEAM, NUM_SLOTS)
