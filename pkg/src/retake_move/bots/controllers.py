"""Movement controllers.  Each one drives a fixed set of player ids and shares
the rule-based execution module for view and trigger control."""

from __future__ import annotations

import math

import numpy as np

from ..dataset.features import FeatureTracker
from ..world.moves import NUM_MOVES, STILL, decode_move, encode_move, nearest_direction
from ..world.state import DEFENSE, OFFENSE, ActionCommand
from .execution import ExecutionModule
from .navigation import PathFollower, PathPlanner, heading_command

SLOW, MEDIUM, FAST = 0, 1, 2
# Offense players this close to the bomb stop and defuse.
DEFUSE_STAND = 50.0

OFFENSE_ARCHETYPES = ("rusher", "flanker", "lurker")
DEFENSE_ARCHETYPES = ("anchor", "rotator")
ARCHETYPES = OFFENSE_ARCHETYPES + DEFENSE_ARCHETYPES


class Controller:
    """Base class: per-tick actions for ``pids`` with movement chosen by ``move_for``."""

    kind = "base"

    def __init__(self, geometry, world_config, pids, rng):
        self.map = geometry
        self.cfg = world_config
        self.pids = sorted(pids)
        self.rng = rng
        self.exec = ExecutionModule(geometry, world_config)
        self.moves = {}

    def reset(self, world):
        self.exec.reset(self.pids)
        self.moves = {pid: STILL for pid in self.pids}

    def act(self, world):
        """ActionCommands for this controller's alive players at the current tick."""
        policy_tick = world.tick % self.cfg.policy_every == 0
        self.before_tick(world, policy_tick)
        out = {}
        for pid in self.pids:
            p = world.players[pid]
            if not p.alive:
                continue
            if policy_tick or self.every_tick:
                self.moves[pid] = self.move_for(world, p, policy_tick)
            du, fire, tgt, acq = self.exec.act(world, pid)
            out[pid] = ActionCommand(self.moves[pid], du, fire, tgt, acq)
        return out

    every_tick = False

    def before_tick(self, world, policy_tick):
        pass

    def move_for(self, world, p, policy_tick):
        return STILL


class RandomWalkController(Controller):
    """Uniformly random commands that persist between policy steps with probability 0.75."""

    kind = "random_walk"

    def __init__(self, geometry, world_config, pids, rng, switch_prob=0.25):
        super().__init__(geometry, world_config, pids, rng)
        self.switch_prob = switch_prob

    def reset(self, world):
        super().reset(world)
        self.moves = {pid: int(self.rng.integers(NUM_MOVES)) for pid in self.pids}

    def move_for(self, world, p, policy_tick):
        if self.rng.random() < self.switch_prob:
            return int(self.rng.integers(NUM_MOVES))
        return self.moves[p.id]


class MLMoveController(Controller):
    """Learned movement: one model query per policy step for all controlled players, cached in between."""

    kind = "mlmove"

    def __init__(self, geometry, world_config, pids, rng, policy):
        super().__init__(geometry, world_config, pids, rng)
        self.policy = policy
        self.tracker = None
        self.tokens = None
        self.alive = None
        self.queries = 0

    def reset(self, world):
        super().reset(world)
        self.tracker = FeatureTracker(self.map, world.bombsite, self.policy.config.input_history)
        self.queries = 0

    def before_tick(self, world, policy_tick):
        if world.tick % self.cfg.log_every == 0:
            players = [world.players[i] for i in world.order]
            self.tokens, self.alive = self.tracker.observe(players, world.seconds_to_explosion, world.time)
        if not policy_tick:
            return
        mine = [pid for pid in self.pids if world.players[pid].alive]
        if not mine:
            return
        probs = self.policy.probabilities(self.tokens[None], self.alive[None])[0]
        self.queries += 1
        for pid in mine:
            dist = probs[pid, 0].astype(np.float64)
            cdf = np.cumsum(dist)
            u = self.rng.random() * cdf[-1]
            self.moves[pid] = int(min(np.searchsorted(cdf, u, side="right"), NUM_MOVES - 1))

    def move_for(self, world, p, policy_tick):
        return self.moves[p.id]


def _anchor_points(geometry, site):
    return {name: geometry.walkable_point_in(name) for name in geometry.anchors.get(site, [])}


class RuleMoveController(Controller):
    """Offense paths to the bomb and stops whenever an enemy is visible; defense holds the nearest anchor."""

    kind = "rulemove"
    every_tick = True

    def reset(self, world):
        super().reset(world)
        planner = PathPlanner(self.map)
        anchors = _anchor_points(self.map, world.bombsite)
        self.followers = {}
        for pid in self.pids:
            p = world.players[pid]
            if p.team == OFFENSE:
                goal = world.bomb
            else:
                goal = min(anchors.values(), key=lambda a: (a[0] - p.x) ** 2 + (a[1] - p.y) ** 2) if anchors else world.bomb
            self.followers[pid] = PathFollower(planner.points((p.x, p.y), goal))

    def move_for(self, world, p, policy_tick):
        if world.visible_enemies(p.id):
            return STILL
        if p.team == OFFENSE and math.hypot(p.x - world.bomb[0], p.y - world.bomb[1]) < DEFUSE_STAND:
            return STILL
        return self.followers[p.id].command(p.x, p.y, FAST)


class ScriptedExpertController(Controller):
    """Hand-written human-proxy policies used to synthesize training logs.

    Offense: rusher (fast, direct), flanker (distinct tactics routes per
    flanker), lurker (waits, then slow).  Defense: anchor (takes the first
    anchor region of the site, the high ground on A, and never leaves) and
    rotator (holds a region of a spread triple).  In combat offense players
    stand, strafe, or keep moving; defenders hold.
    """

    kind = "scripted_expert"

    def __init__(self, geometry, world_config, pids, rng, archetypes):
        super().__init__(geometry, world_config, pids, rng)
        self.archetypes = dict(archetypes)
        for pid, a in self.archetypes.items():
            if a not in ARCHETYPES:
                raise ValueError(f"unknown archetype {a!r}")
        self.planner = PathPlanner(geometry, cover_discount=0.3)

    def reset(self, world):
        super().reset(world)
        rng = self.rng
        site = world.bombsite
        routes = self.map.routes.get(site, {})
        route_names = sorted(routes)
        self.plan = {}
        used_routes = []
        # Defensive regions: anchors take the first listed region, rotators fill a spread triple.
        anchor_regions = list(self.map.anchors.get(site, []))
        triples = [t for t in self.map.spreads if all(r in anchor_regions for r in t)]
        triple = list(triples[int(rng.integers(len(triples)))]) if triples else list(anchor_regions)
        taken = set()
        for pid in self.pids:
            p = world.players[pid]
            arch = self.archetypes[pid]
            if p.team == OFFENSE:
                if arch == "flanker":
                    free = [r for r in route_names if r not in used_routes] or route_names
                    name = free[int(rng.integers(len(free)))]
                    used_routes.append(name)
                else:
                    name = route_names[int(rng.integers(len(route_names)))] if route_names else None
                via = [tuple(v) for v in routes.get(name, [])] + [world.bomb]
                speed = {"rusher": FAST, "flanker": FAST, "lurker": MEDIUM}[arch]
                wait = float(rng.uniform(1.0, 4.0)) if arch == "lurker" else 0.0
                self.plan[pid] = {
                    "follower": PathFollower(self.planner.route((p.x, p.y), via)),
                    "speed": speed,
                    "wait": wait,
                    "combat": None,
                    "strafe": 1,
                }
            else:
                if arch == "anchor" and anchor_regions and anchor_regions[0] not in taken:
                    region = anchor_regions[0]
                else:
                    pool = [r for r in triple if r not in taken] or [r for r in anchor_regions if r not in taken]
                    region = pool[0] if pool else (anchor_regions[0] if anchor_regions else None)
                taken.add(region)
                goal = self._hold_point(region, rng) if region else world.bomb
                self.plan[pid] = {
                    "follower": PathFollower(self.planner.points((p.x, p.y), goal), reach=12.0),
                    "region": region,
                    "speed": FAST,
                }

    def _hold_point(self, region_name, rng):
        """A random walkable nav-cell center inside the region, at least one cell from its edge."""
        region = self.map.region_index[region_name]
        grid = self.map.nav_grid
        x0, y0, x1, y1 = region.rect
        cands = []
        for r in range(grid.shape[0]):
            for c in range(grid.shape[1]):
                if not grid[r, c]:
                    continue
                px, py = self.map.nav_center(r, c)
                if x0 + 20 <= px <= x1 - 20 and y0 + 20 <= py <= y1 - 20:
                    cands.append((px, py))
        if not cands:
            return self.map.walkable_point_in(region_name)
        return cands[int(rng.integers(len(cands)))]

    def move_for(self, world, p, policy_tick):
        plan = self.plan[p.id]
        if p.team == DEFENSE:
            return self._defense_move(world, p, plan)
        return self._offense_move(world, p, plan)

    def _offense_move(self, world, p, plan):
        rng = self.rng
        bx, by = world.bomb
        if math.hypot(p.x - bx, p.y - by) < DEFUSE_STAND:
            return STILL
        if world.time < plan["wait"]:
            return STILL
        enemies = world.visible_enemies(p.id)
        if enemies:
            if plan["combat"] is None:
                u = rng.random()
                plan["combat"] = "still" if u < 0.5 else ("strafe" if u < 0.8 else "push")
                plan["strafe"] = 1 if rng.random() < 0.5 else -1
                plan["strafe_steps"] = 0
            mode = plan["combat"]
            if mode == "still":
                return STILL
            if mode == "strafe":
                q = min(enemies, key=lambda e: (e.x - p.x) ** 2 + (e.y - p.y) ** 2)
                plan["strafe_steps"] += 1
                if plan["strafe_steps"] % 4 == 0:
                    plan["strafe"] = -plan["strafe"]
                ang = math.degrees(math.atan2(q.y - p.y, q.x - p.x)) + 90.0 * plan["strafe"]
                return encode_move(nearest_direction(ang), MEDIUM, 0)
        else:
            plan["combat"] = None
        speed = plan["speed"]
        if speed == FAST and rng.random() < 0.1:
            speed = MEDIUM
        cmd = plan["follower"].command(p.x, p.y, speed)
        if cmd == STILL:
            return heading_command(p.x, p.y, bx, by, MEDIUM)
        return cmd

    def _defense_move(self, world, p, plan):
        follower = plan["follower"]
        region = plan["region"]
        if not follower.done:
            if world.visible_enemies(p.id) and region and self.map.region_index[region].contains(p.x, p.y):
                return STILL
            return follower.command(p.x, p.y, plan["speed"])
        # Holding: rare small steps that provably stay inside the region.
        if region and self.rng.random() < 0.1 and not world.visible_enemies(p.id):
            cmd = int(self.rng.integers(1, 17))  # slow, no jump
            k = decode_move(cmd).direction
            reach = self.cfg.speeds[SLOW] * self.cfg.policy_every * self.cfg.dt + 10.0
            ang = math.radians(22.5 * k)
            nx, ny = p.x + reach * math.cos(ang), p.y + reach * math.sin(ang)
            r = self.map.region_index[region]
            if r.contains(nx, ny) and not self.map.point_blocked(nx, ny):
                return cmd
        return STILL
