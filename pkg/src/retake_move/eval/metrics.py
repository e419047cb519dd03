"""Behavior distributions extracted from round logs."""

from __future__ import annotations

import numpy as np

from ..world.state import ELIMINATION, SHOOT
from .emd import Histogram1D, Histogram2D

OCCUPANCY_CELL = 50.0
SAMPLE_RATE_HZ = 16
LIFETIME_BIN_S = 2.0
ROUND_TIME = 40.0
MAX_SHOTS = 30


def sampled_snapshots(log, rate_hz=SAMPLE_RATE_HZ):
    step = max(1, log.tick_rate_hz // rate_hz)
    return [s for s in log.snapshots if s.tick % step == 0]


def occupancy(logs, geometry, team=None, cell=OCCUPANCY_CELL):
    """One count per alive player per 16 Hz snapshot; ``team`` None counts both teams."""
    h = Histogram2D.zeros(geometry.bounds, cell)
    for log in logs:
        for s in sampled_snapshots(log):
            for p in s.players:
                if p.alive and (team is None or p.team == team):
                    h.add(p.x, p.y)
    return h


def kill_locations(logs, geometry, cell=OCCUPANCY_CELL):
    """Shooter positions at elimination events (position in the snapshot carrying the event)."""
    h = Histogram2D.zeros(geometry.bounds, cell)
    for log in logs:
        for s in log.snapshots:
            pos = {p.id: (p.x, p.y) for p in s.players}
            for e in s.events:
                if e.type == ELIMINATION and e.src in pos:
                    h.add(*pos[e.src])
    return h


def lifetimes(logs, bin_s=LIFETIME_BIN_S, horizon=ROUND_TIME):
    """Death time of every player, or the round duration for survivors."""
    h = Histogram1D.uniform(0.0, horizon, int(round(horizon / bin_s)))
    for log in logs:
        death = {}
        for e in log.events:
            if e.type == ELIMINATION and e.tgt not in death:
                death[e.tgt] = e.tick / log.tick_rate_hz
        for p in log.players:
            h.add(death.get(p["id"], log.duration_s))
    return h


def shots_per_kill_values(log):
    """Shots the killer fired during the engagement that ended in each elimination.

    The engagement is the run of the killer's shoot events carrying the same
    (aim target, acquisition tick) as the killing shot.
    """
    counts = {}
    last = {}
    out = []
    for e in log.events:
        if e.type == SHOOT:
            key = (e.src, e.tgt, e.acquired)
            counts[key] = counts.get(key, 0) + 1
            last[e.src] = key
        elif e.type == ELIMINATION and e.src in last:
            out.append(counts[last[e.src]])
    return out


def shots_per_kill(logs, max_shots=MAX_SHOTS):
    """Integer bins 1..max_shots; longer engagements land in the last bin."""
    h = Histogram1D(np.arange(max_shots + 1, dtype=np.float64) + 0.5, np.zeros(max_shots))
    for log in logs:
        for v in shots_per_kill_values(log):
            h.add(min(v, max_shots))
    return h
