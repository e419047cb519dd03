"""Tactical mistake and teamwork detectors over round logs."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..world.state import DEFENSE, HURT, OFFENSE

# Detectors step at the policy cadence (16 ticks at 128 Hz) by default.
DEFAULT_CADENCE_TICKS = 16
HOLD_SECONDS = 3.0
DAMAGE_WINDOW_S = 1.0


def cadence_snapshots(log, cadence_ticks=DEFAULT_CADENCE_TICKS):
    return [s for s in log.snapshots if s.tick % cadence_ticks == 0]


@dataclass
class MistakeCounts:
    high_ground: int = 0
    abandon: int = 0


def detect_round_mistakes(log, geometry, cadence_ticks=DEFAULT_CADENCE_TICKS):
    """Count leaving-high-ground (A) and abandoning-a-held-position (B) events in one round."""
    snaps = cadence_snapshots(log, cadence_ticks)
    high = geometry.regions_with("high_ground")
    defensive = geometry.regions_with("defensive")
    hurt_ticks = {}
    for e in log.events:
        if e.type == HURT and e.tgt is not None:
            hurt_ticks.setdefault(e.tgt, []).append(e.tick)
    window = int(round(DAMAGE_WINDOW_S * log.tick_rate_hz))
    hold_steps = HOLD_SECONDS * log.tick_rate_hz
    counts = MistakeCounts()
    # (player, region name) -> tick at which the current continuous stay began
    since = {}
    for a, b in zip(snaps, snaps[1:]):
        pa, pb = a.by_id(), b.by_id()
        offense_alive = any(p.alive and p.team == OFFENSE for p in a.players)
        for pid, p in pa.items():
            if p.team != DEFENSE or not p.alive:
                continue
            q = pb.get(pid)
            if q is None or not q.alive:
                continue
            # Mistake A
            if offense_alive and any(r.contains(p.x, p.y) for r in high) and not any(r.contains(q.x, q.y) for r in high):
                counts.high_ground += 1
            # Mistake B
            for r in defensive:
                key = (pid, r.name)
                if r.contains(p.x, p.y):
                    since.setdefault(key, a.tick)
                    if not r.contains(q.x, q.y):
                        held = a.tick - since.pop(key)
                        hurt = any(b.tick - window <= t <= b.tick for t in hurt_ticks.get(pid, ()))
                        if held >= hold_steps and not hurt:
                            counts.abandon += 1
                else:
                    since.pop(key, None)
    return counts


def detect_mistakes(logs, geometry, cadence_ticks=DEFAULT_CADENCE_TICKS):
    """Per-round counts plus the number of rounds with at least one mistake of each kind."""
    per_round = [detect_round_mistakes(log, geometry, cadence_ticks) for log in logs]
    return {
        "per_round": [{"round_id": log.round_id, "high_ground": c.high_ground, "abandon": c.abandon} for log, c in zip(logs, per_round)],
        "rounds_high_ground": sum(1 for c in per_round if c.high_ground),
        "rounds_abandon": sum(1 for c in per_round if c.abandon),
        "rounds": len(logs),
    }


def _config_name(regions):
    return "+".join(regions)


def tactics_configs(geometry):
    """(team, regions) pairs: flanks are offense formations, spreads are defense formations."""
    return [(OFFENSE, tuple(f)) for f in geometry.flanks] + [(DEFENSE, tuple(s)) for s in geometry.spreads]


def _occurs(regions, members):
    """True if distinct players can be assigned one to each listed region.

    ``members`` holds the region-name set of each alive teammate.
    """
    if len(members) < len(regions):
        return False
    for combo in itertools.permutations(members, len(regions)):
        if all(r in m for m, r in zip(combo, regions)):
            return True
    return False


def detect_round_teamwork(log, geometry, configs, cadence_ticks=DEFAULT_CADENCE_TICKS):
    """Set of configuration names occurring at least once in the round."""
    seen = set()
    for s in cadence_snapshots(log, cadence_ticks):
        members = {OFFENSE: [], DEFENSE: []}
        for p in s.players:
            if p.alive:
                members[p.team].append(geometry.region_of(p.x, p.y))
        for team, regions in configs:
            name = _config_name(regions)
            if name not in seen and _occurs(regions, members[team]):
                seen.add(name)
    return seen


def teamwork_counts(logs, geometry, cadence_ticks=DEFAULT_CADENCE_TICKS):
    configs = tactics_configs(geometry)
    if not configs:
        warnings.warn("map has no tactics configurations; teamwork section is empty", stacklevel=2)
        return {}
    counts = {_config_name(regions): 0 for _, regions in configs}
    for log in logs:
        for name in detect_round_teamwork(log, geometry, configs, cadence_ticks):
            counts[name] += 1
    return counts


@dataclass
class TeamworkComparison:
    ape: dict = field(default_factory=dict)
    excluded: list = field(default_factory=list)
    median: float = float("nan")
    iqr: float = float("nan")


def teamwork_ape(test_counts, ref_counts, test_rounds, ref_rounds):
    """Absolute percentage error per configuration; test counts are rescaled to the reference round count."""
    scale = ref_rounds / test_rounds if test_rounds else 0.0
    out = TeamworkComparison()
    for name, ref in ref_counts.items():
        if ref == 0:
            out.excluded.append(name)
            continue
        out.ape[name] = abs(test_counts.get(name, 0) * scale - ref) / ref
    if out.ape:
        vals = np.array(list(out.ape.values()))
        out.median = float(np.median(vals))
        out.iqr = float(np.percentile(vals, 75) - np.percentile(vals, 25))
    return out
