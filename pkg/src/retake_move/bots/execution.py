"""Rule-based aim and fire control shared by every bot kind."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..world.geometry import PLAYER_HALF_WIDTH
from ..world.state import wrap_angle

# Burst lengths by distance band (near, mid, far) and the band edges in map units.
BURST_TABLE = (6, 3, 1)
BAND_EDGES = (500.0, 1000.0)


def burst_length(distance):
    if distance < BAND_EDGES[0]:
        return BURST_TABLE[0]
    if distance < BAND_EDGES[1]:
        return BURST_TABLE[1]
    return BURST_TABLE[2]


@dataclass
class AimState:
    target: int | None = None
    acquired: int | None = None
    last_seen: tuple | None = None
    occupancy: np.ndarray | None = None
    yaw_rate: float = 0.0
    pitch_rate: float = 0.0
    shots_left: int = 0
    pause_until: float = 0.0


def spring_damper_step(angle_err, rate, dt, stiffness, damping, max_step):
    """Semi-implicit Euler: update the rate from the error, then the angle from the new rate."""
    rate = rate + (stiffness * angle_err - damping * rate) * dt
    step = rate * dt
    if step > max_step:
        step, rate = max_step, max_step / dt
    elif step < -max_step:
        step, rate = -max_step, -max_step / dt
    return step, rate


def diffusion_matrix(neighbors, alpha):
    """Column-stochastic matrix: each cell keeps 1 - alpha and spreads alpha evenly to its neighbours."""
    n = len(neighbors)
    m = np.zeros((n, n))
    for i, nb in enumerate(neighbors):
        if not nb:
            m[i, i] = 1.0
            continue
        m[i, i] = 1.0 - alpha
        for j in nb:
            m[j, i] += alpha / len(nb)
    return m


class ExecutionModule:
    """Per-tick view and trigger control for a set of players."""

    def __init__(self, geometry, world_config, stiffness=400.0, diffusion=0.02, burst_pause=0.35):
        self.map = geometry
        self.cfg = world_config
        self.stiffness = stiffness
        self.damping = 2.0 * math.sqrt(stiffness)  # critical
        self.burst_pause = burst_pause
        centers, neighbors = geometry.coarse_cells
        self.centers = centers
        self.diffuse = diffusion_matrix(neighbors, diffusion)
        self.states = {}

    def reset(self, pids):
        n = len(self.centers)
        self.states = {pid: AimState(occupancy=np.full(n, 1.0 / n)) for pid in pids}

    # ------------------------------------------------------------ occupancy
    def update_occupancy(self, st, x, y):
        occ = self.diffuse @ st.occupancy
        seen = kernels.points_visible(np.array([[x, y]]), self.centers, self.map.wall_array)[0].astype(bool)
        occ[seen] = 0.0
        total = occ.sum()
        if total <= 0.0:
            occ = (~seen).astype(np.float64)
            if not occ.any():
                occ[:] = 1.0
            total = occ.sum()
        st.occupancy = occ / total

    def bump_occupancy(self, st, x, y):
        """The cell where a target was last seen becomes the most likely one."""
        occ = st.occupancy.copy()
        cell = self.map.coarse_cell_of(x, y)
        occ[cell] = occ.max() + 1.0
        st.occupancy = occ / occ.sum()

    # ------------------------------------------------------------ per tick
    def act(self, world, pid):
        """(du, fire, aim_target, aim_acquired) for one alive player."""
        p = world.players[pid]
        st = self.states[pid]
        enemies = world.visible_enemies(pid)
        if st.target is not None:
            tgt = world.players[st.target]
            if not tgt.alive or all(q.id != tgt.id for q in enemies):
                dropped = tgt.alive
                st.target = st.acquired = None
                self.update_occupancy(st, p.x, p.y)
                if dropped and st.last_seen is not None:
                    self.bump_occupancy(st, *st.last_seen)
            else:
                self.update_occupancy(st, p.x, p.y)
        else:
            self.update_occupancy(st, p.x, p.y)
        if st.target is None and enemies:
            nearest = min(enemies, key=lambda q: (q.x - p.x) ** 2 + (q.y - p.y) ** 2)
            st.target, st.acquired = nearest.id, world.tick
            st.shots_left = 0
        if st.target is not None:
            tgt = world.players[st.target]
            st.last_seen = (tgt.x, tgt.y)
            ax, ay = tgt.x, tgt.y
        else:
            ax, ay = self.centers[int(np.argmax(st.occupancy))]
        du = self.aim(st, p, ax, ay)
        fire = self.fire_decision(world, p, st, enemies, du)
        return du, fire, st.target, st.acquired

    def aim(self, st, p, ax, ay):
        dt = self.cfg.dt
        lim = self.cfg.max_turn_deg
        if (ax - p.x) ** 2 + (ay - p.y) ** 2 < 1e-6:
            yaw_err = 0.0
        else:
            yaw_err = wrap_angle(math.degrees(math.atan2(ay - p.y, ax - p.x)) - p.yaw)
        dyaw, st.yaw_rate = spring_damper_step(yaw_err, st.yaw_rate, dt, self.stiffness, self.damping, lim)
        dpitch, st.pitch_rate = spring_damper_step(-p.pitch, st.pitch_rate, dt, self.stiffness, self.damping, lim)
        return (dyaw, dpitch)

    def crosshair_enemy(self, p, yaw, enemies):
        """Nearest visible enemy whose box the crosshair ray hits before any wall, with its range."""
        rad = math.radians(yaw)
        dx, dy = math.cos(rad), math.sin(rad)
        wall_t = kernels.ray_wall_distance(p.x, p.y, dx, dy, self.map.wall_array, self.cfg.max_range)
        h = PLAYER_HALF_WIDTH
        best, best_t = None, wall_t
        for q in enemies:
            t = kernels.ray_aabb(p.x, p.y, dx, dy, q.x - h, q.y - h, q.x + h, q.y + h, self.cfg.max_range)
            if 0.0 <= t < best_t:
                best, best_t = q, t
        return best, best_t

    def fire_decision(self, world, p, st, enemies, du=(0.0, 0.0)):
        """Trigger when the post-turn crosshair is on an enemy box and the burst controller allows it."""
        if not enemies:
            st.shots_left = 0
            return False
        now = (world.tick + 1) * self.cfg.dt
        if now + 1e-9 < p.next_fire_time or now + 1e-9 < st.pause_until:
            return False
        lim = self.cfg.max_turn_deg
        yaw = wrap_angle(p.yaw + min(max(du[0], -lim), lim))
        hit, t = self.crosshair_enemy(p, yaw, enemies)
        if hit is None:
            st.shots_left = 0
            return False
        if st.shots_left <= 0:
            st.shots_left = burst_length(t)
        st.shots_left -= 1
        if st.shots_left == 0:
            st.pause_until = now + self.burst_pause
        return True
