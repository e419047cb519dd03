"""Deterministic tick-based Retakes simulator."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import kernels
from .geometry import PLAYER_HALF_WIDTH, MapGeometry
from .moves import DEFAULT_SPEEDS, DIRECTION_VECTORS, STILL, decode_move
from .state import (
    DEFENSE,
    ELIMINATION,
    HURT,
    OFFENSE,
    SHOOT,
    ActionCommand,
    GameEvent,
    MapState,
    PlayerState,
    wrap_angle,
)

EXPLOSION = "explosion"
DEFUSED = "defused"
OFFENSE_ELIMINATED = "offense_eliminated"
DEFENSE_ELIMINATED = "defense_eliminated"
OUTCOMES = (EXPLOSION, DEFUSED, OFFENSE_ELIMINATED, DEFENSE_ELIMINATED)


@dataclass(frozen=True)
class WorldConfig:
    tick_rate: int = 128
    log_every: int = 8  # 16 Hz snapshots
    policy_every: int = 16  # 125 ms movement decisions
    round_time: float = 40.0
    speeds: tuple = DEFAULT_SPEEDS
    velocity_time_constant: float = 0.015
    jump_speed: float = 270.0
    gravity: float = 800.0
    jump_clearance: float = 18.0
    max_turn_deg: float = 8.0  # per tick
    damage: int = 25
    armor_ratio: float = 0.5
    fire_cooldown: float = 0.1
    spread_base_deg: float = 0.3
    spread_move_deg: float = 2.0
    max_range: float = 4000.0
    defuse_radius: float = 100.0
    defuse_time: float = 5.0

    @property
    def dt(self):
        return 1.0 / self.tick_rate

    @property
    def run_speed(self):
        return self.speeds[-1]


class World:
    """One round of play.  Players are indexed by id; ids are the model's slots."""

    def __init__(self, geometry: MapGeometry, players, bombsite, seed=0, config: WorldConfig | None = None):
        self.map = geometry
        self.config = config or WorldConfig()
        self.players = {p.id: p for p in sorted(players, key=lambda p: p.id)}
        self.order = sorted(self.players)
        self.bombsite = bombsite
        self.bomb = geometry.bombs[bombsite]
        self.tick = 0
        self.defuse_progress = 0.0
        self.outcome = None
        self.rng = np.random.default_rng(seed)
        self._alpha = 1.0 - math.exp(-self.config.dt / self.config.velocity_time_constant)
        x0, y0, x1, y1 = geometry.bounds
        h = PLAYER_HALF_WIDTH
        self._box = (x0 + h, y0 + h, x1 - h, y1 - h)
        self._vis_tick = -1
        self._vis = None

    # ------------------------------------------------------------ state views
    @property
    def time(self):
        return self.tick * self.config.dt

    @property
    def seconds_to_explosion(self):
        return max(0.0, self.config.round_time - self.tick * self.config.dt)

    @property
    def map_state(self):
        return MapState(self.bombsite, self.seconds_to_explosion)

    @property
    def done(self):
        return self.outcome is not None

    def alive_players(self, team=None):
        return [p for i in self.order if (p := self.players[i]).alive and (team is None or p.team == team)]

    def visibility(self):
        """Cached (n, n) line-of-sight matrix over ``self.order`` for the current tick."""
        if self._vis_tick != self.tick:
            xy = np.array([(self.players[i].x, self.players[i].y) for i in self.order], dtype=np.float64)
            self._vis = kernels.visibility_matrix(xy, self.map.wall_array)
            self._vis_tick = self.tick
        return self._vis

    def visible_enemies(self, pid):
        vis = self.visibility()
        me = self.players[pid]
        row = self.order.index(pid)
        out = []
        for col, j in enumerate(self.order):
            q = self.players[j]
            if q.alive and q.team != me.team and vis[row, col]:
                out.append(q)
        return out

    # ------------------------------------------------------------ dynamics
    def step(self, actions):
        """Advance one tick.  ``actions`` maps player id to ActionCommand."""
        if self.done:
            raise RuntimeError("round already finished")
        for pid in actions:
            if pid not in self.players:
                raise KeyError(f"action for unknown player id {pid}")
        cfg = self.config
        dt = cfg.dt
        for pid in self.order:
            p = self.players[pid]
            if not p.alive:
                continue
            act = actions.get(pid)
            if act is None:
                act = ActionCommand()
            self._turn(p, act.du)
            self._move(p, act.move, dt)
        events = []
        now = (self.tick + 1) * dt
        for pid in self.order:
            p = self.players[pid]
            act = actions.get(pid)
            if act is None or not act.fire or not p.alive:
                continue
            if now + 1e-9 < p.next_fire_time:
                continue
            events.extend(self.resolve_fire(p, act.aim_target, act.aim_acquired))
        self.tick += 1
        self._update_defuse(dt)
        self._check_end()
        return events

    def _turn(self, p, du):
        lim = self.config.max_turn_deg
        dyaw = min(max(du[0], -lim), lim)
        dpitch = min(max(du[1], -lim), lim)
        p.yaw = wrap_angle(p.yaw + dyaw)
        p.pitch = min(max(p.pitch + dpitch, -89.0), 89.0)

    def _move(self, p, move, dt):
        cfg = self.config
        if move == STILL:
            tx = ty = 0.0
            jump = 0
        else:
            cmd = decode_move(move)
            ux, uy = DIRECTION_VECTORS[cmd.direction]
            s = cfg.speeds[cmd.speed]
            tx, ty = s * ux, s * uy
            jump = cmd.jump
        a = self._alpha
        p.vx += (tx - p.vx) * a
        p.vy += (ty - p.vy) * a
        if tx == 0.0 and ty == 0.0 and p.vx * p.vx + p.vy * p.vy < 0.25:
            p.vx = p.vy = 0.0
        if jump and p.z == 0.0 and p.vz == 0.0:
            p.vz = cfg.jump_speed
        if p.z > 0.0 or p.vz > 0.0:
            p.vz -= cfg.gravity * dt
            p.z += p.vz * dt
            if p.z <= 0.0:
                p.z = 0.0
                p.vz = 0.0
        if p.vx == 0.0 and p.vy == 0.0:
            return
        passable = self.map.jumpable_mask if p.z >= cfg.jump_clearance else _NO_PASS[len(self.map.walls)]
        nx, ny, hit_x, hit_y = kernels.sweep_move(
            p.x, p.y, p.vx * dt, p.vy * dt, self.map.inflated_walls, passable, *self._box
        )
        p.x, p.y = nx, ny
        if hit_x:
            p.vx = 0.0
        if hit_y:
            p.vy = 0.0

    def spread_deg(self, p):
        cfg = self.config
        return cfg.spread_base_deg + cfg.spread_move_deg * p.speed_xy / cfg.run_speed

    def resolve_fire(self, shooter, aim_target=None, aim_acquired=None):
        """Fire one hitscan shot along the shooter's view with movement-dependent spread."""
        cfg = self.config
        if not shooter.alive:
            return []
        tick = self.tick + 1
        shooter.next_fire_time = tick * cfg.dt + cfg.fire_cooldown
        events = [GameEvent(shooter.id, SHOOT, tick, aim_target, aim_acquired)]
        sigma = self.spread_deg(shooter)
        angle = shooter.yaw + (self.rng.normal(0.0, sigma) if sigma > 0.0 else 0.0)
        rad = math.radians(angle)
        dx, dy = math.cos(rad), math.sin(rad)
        wall_t = kernels.ray_wall_distance(shooter.x, shooter.y, dx, dy, self.map.wall_array, cfg.max_range)
        h = PLAYER_HALF_WIDTH
        victim, best = None, wall_t
        for pid in self.order:
            q = self.players[pid]
            if not q.alive or q.team == shooter.team:
                continue
            t = kernels.ray_aabb(shooter.x, shooter.y, dx, dy, q.x - h, q.y - h, q.x + h, q.y + h, cfg.max_range)
            if t >= 0.0 and t < best:
                victim, best = q, t
        if victim is not None:
            events.append(GameEvent(shooter.id, HURT, tick, victim.id))
            self.apply_damage(victim, cfg.damage)
            if not victim.alive:
                events.append(GameEvent(shooter.id, ELIMINATION, tick, victim.id))
        return events

    def apply_damage(self, victim, damage):
        absorbed = 0
        if victim.armor > 0:
            absorbed = min(int(damage * self.config.armor_ratio), victim.armor)
            victim.armor -= absorbed
        victim.health = max(0, victim.health - (damage - absorbed))
        if victim.health == 0:
            victim.vx = victim.vy = victim.vz = 0.0

    def _update_defuse(self, dt):
        r2 = self.config.defuse_radius ** 2
        bx, by = self.bomb
        for p in self.alive_players(OFFENSE):
            if (p.x - bx) ** 2 + (p.y - by) ** 2 <= r2:
                self.defuse_progress += dt
                return
        self.defuse_progress = 0.0

    def _check_end(self):
        if self.defuse_progress >= self.config.defuse_time - 1e-9:
            self.outcome = DEFUSED
        elif not self.alive_players(OFFENSE):
            self.outcome = OFFENSE_ELIMINATED
        elif not self.alive_players(DEFENSE):
            self.outcome = DEFENSE_ELIMINATED
        elif self.tick * self.config.dt >= self.config.round_time - 1e-12:
            self.outcome = EXPLOSION


class _NoPass(dict):
    def __missing__(self, n):
        arr = np.zeros(n, dtype=np.uint8)
        self[n] = arr
        return arr


_NO_PASS = _NoPass()


def visible(a: PlayerState, b: PlayerState, geometry: MapGeometry):
    """Line of sight between two players' eye points (horizontal plane)."""
    return geometry.line_of_sight(a.x, a.y, b.x, b.y)
