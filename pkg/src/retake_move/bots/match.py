"""Round runner: bots + simulator -> RoundLog."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..world.logs import RoundLog, Snapshot
from ..world.sim import World, WorldConfig
from ..world.spawn import InitialConditions, sample_initial_conditions
from ..world.state import DEFENSE, OFFENSE
from .controllers import (
    DEFENSE_ARCHETYPES,
    OFFENSE_ARCHETYPES,
    MLMoveController,
    RandomWalkController,
    RuleMoveController,
    ScriptedExpertController,
)

BOT_KINDS = ("mlmove", "rulemove", "scripted_expert", "random_walk")
DEFAULT_MIX = {"rusher": 1.0, "flanker": 2.0, "lurker": 1.0, "anchor": 1.0, "rotator": 2.0}


class BotConfigError(ValueError):
    pass


@dataclass
class BotConfig:
    kind: str
    checkpoint: str | None = None
    archetype_mix: dict = field(default_factory=lambda: dict(DEFAULT_MIX))
    # Fixed archetype per player id; overrides the mix.
    archetypes: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in BOT_KINDS:
            raise BotConfigError(f"unknown bot kind {self.kind!r}")
        if (self.kind == "mlmove") != (self.checkpoint is not None):
            raise BotConfigError("a checkpoint is required for mlmove and only for mlmove")

    @classmethod
    def from_dict(cls, d):
        if isinstance(d, str):
            d = {"kind": d}
        d = dict(d)
        if "archetypes" in d:
            d["archetypes"] = {int(k): v for k, v in d["archetypes"].items()}
        try:
            return cls(**d)
        except TypeError as exc:
            raise BotConfigError(str(exc)) from None


def round_seed(base_seed, iteration, round_index):
    """Seed sequence of one round; identical for every bot configuration (paired comparison)."""
    return np.random.SeedSequence([int(base_seed), int(iteration), int(round_index)])


def initial_conditions(geometry, seq):
    return sample_initial_conditions(geometry, np.random.default_rng(seq.spawn(1)[0]))


def assign_archetypes(ic: InitialConditions, mix, rng):
    """Draw an archetype per player from the team's share of the mix."""
    out = {}
    for team, names in ((OFFENSE, OFFENSE_ARCHETYPES), (DEFENSE, DEFENSE_ARCHETYPES)):
        w = np.array([float(mix.get(n, 0.0)) for n in names])
        if w.sum() <= 0:
            raise BotConfigError(f"archetype mix gives no weight to any {team} archetype")
        w = w / w.sum()
        for pid, t, *_ in ic.players:
            if t == team:
                out[pid] = names[int(rng.choice(len(names), p=w))]
    return out


def build_controllers(team_configs, geometry, world_config, ic, seq, policies):
    """One controller per team, or one shared controller when both teams use the same mlmove model."""
    pids = {OFFENSE: [p[0] for p in ic.players if p[1] == OFFENSE], DEFENSE: [p[0] for p in ic.players if p[1] == DEFENSE]}
    rngs = [np.random.default_rng(s) for s in seq.spawn(4)[1:]]
    off, dfn = team_configs[OFFENSE], team_configs[DEFENSE]
    if off.kind == dfn.kind == "mlmove" and off.checkpoint == dfn.checkpoint:
        return [MLMoveController(geometry, world_config, pids[OFFENSE] + pids[DEFENSE], rngs[0], policies[off.checkpoint])]
    out = []
    for k, team in enumerate((OFFENSE, DEFENSE)):
        cfg = team_configs[team]
        rng = rngs[k]
        ids = pids[team]
        if cfg.kind == "mlmove":
            out.append(MLMoveController(geometry, world_config, ids, rng, policies[cfg.checkpoint]))
        elif cfg.kind == "rulemove":
            out.append(RuleMoveController(geometry, world_config, ids, rng))
        elif cfg.kind == "random_walk":
            out.append(RandomWalkController(geometry, world_config, ids, rng))
        else:
            arch = assign_archetypes(ic, cfg.archetype_mix, rngs[2])
            arch.update(cfg.archetypes)
            out.append(ScriptedExpertController(geometry, world_config, ids, rng, {i: arch[i] for i in ids}))
    return out


def play_round(geometry, ic: InitialConditions, controllers, seed, round_id, world_config=None, labels=None):
    """Simulate one round to termination, logging a snapshot every ``log_every`` ticks plus the final state."""
    world_config = world_config or WorldConfig()
    world = World(geometry, ic.build_players(), ic.bombsite, seed=seed, config=world_config)
    for c in controllers:
        c.reset(world)
    labels = labels or {}
    log = RoundLog(
        round_id=round_id,
        map_name=geometry.name,
        bombsite=ic.bombsite,
        tick_rate_hz=world_config.tick_rate,
        players=[{"id": p[0], "team": p[1], "controller": labels.get(p[0], "")} for p in ic.players],
        log_rate_hz=world_config.tick_rate // world_config.log_every,
        seed=seed,
    )

    def snap(events):
        players = [world.players[i].copy() for i in world.order]
        log.snapshots.append(Snapshot(world.tick, players, world.seconds_to_explosion, events))

    snap([])
    pending = []
    while not world.done:
        actions = {}
        for c in controllers:
            actions.update(c.act(world))
        pending.extend(world.step(actions))
        if world.tick % world_config.log_every == 0 or world.done:
            snap(pending)
            pending = []
    log.outcome = world.outcome
    log.duration_s = world.time
    return log


def run_round(geometry, team_configs, base_seed, iteration, round_index, policies=None, world_config=None, prefix="r"):
    """Paired-seed round: spawns depend only on (base_seed, iteration, round_index)."""
    world_config = world_config or WorldConfig()
    seq = round_seed(base_seed, iteration, round_index)
    ic = initial_conditions(geometry, seq)
    controllers = build_controllers(team_configs, geometry, world_config, ic, seq, policies or {})
    labels = {}
    for c in controllers:
        for pid in c.pids:
            arch = getattr(c, "archetypes", {}).get(pid)
            labels[pid] = c.kind if arch is None else f"{c.kind}:{arch}"
    sim_seed = int(seq.generate_state(1)[0])
    return play_round(geometry, ic, controllers, sim_seed, f"{prefix}{iteration:02d}_{round_index:05d}", world_config, labels)
