"""RoundLog records and their JSON-Lines file format.

Line 1 is a header object, then one object per logged snapshot
``{tick, players, map_state, events}``, and a final ``{outcome, duration_s}``.
Events that happened since the previous snapshot ride on the next snapshot.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .sim import OUTCOMES
from .state import GameEvent, PlayerState

_DECIMALS = 3


class LogFormatError(ValueError):
    """A round log file that cannot be parsed or violates its invariants."""


@dataclass
class Snapshot:
    tick: int
    players: list  # PlayerState, sorted by id
    seconds_to_explosion: float
    events: list = field(default_factory=list)

    def by_id(self):
        return {p.id: p for p in self.players}


@dataclass
class RoundLog:
    round_id: str
    map_name: str
    bombsite: str
    tick_rate_hz: int
    players: list  # [{"id", "team", "controller"}]
    snapshots: list = field(default_factory=list)
    outcome: str | None = None
    duration_s: float = 0.0
    log_rate_hz: int = 16
    seed: int | None = None

    @property
    def events(self):
        return [e for s in self.snapshots for e in s.events]

    def team_of(self):
        return {p["id"]: p["team"] for p in self.players}

    def validate(self):
        ticks = [s.tick for s in self.snapshots]
        if any(b <= a for a, b in zip(ticks, ticks[1:])):
            raise LogFormatError(f"{self.round_id}: snapshot ticks not strictly increasing")
        if self.outcome not in OUTCOMES:
            raise LogFormatError(f"{self.round_id}: bad outcome {self.outcome!r}")
        if self.duration_s > 40.0 + 1e-9:
            raise LogFormatError(f"{self.round_id}: duration {self.duration_s} exceeds 40 s")


def _r(v):
    return round(float(v), _DECIMALS)


def player_record(p: PlayerState):
    return {
        "id": p.id,
        "team": p.team,
        "p": [_r(p.x), _r(p.y), _r(p.z)],
        "v": [_r(p.vx), _r(p.vy), _r(p.vz)],
        "l": 1 if p.alive else 0,
        "vd": [_r(p.yaw), _r(p.pitch)],
        "h": int(p.health),
        "r": int(p.armor),
    }


def parse_player(d):
    p = PlayerState(
        id=int(d["id"]),
        team=d["team"],
        x=float(d["p"][0]),
        y=float(d["p"][1]),
        z=float(d["p"][2]),
        vx=float(d["v"][0]),
        vy=float(d["v"][1]),
        vz=float(d["v"][2]),
        yaw=float(d["vd"][0]),
        pitch=float(d["vd"][1]),
        health=int(d["h"]),
        armor=int(d["r"]),
    )
    if bool(d["l"]) != p.alive:
        raise LogFormatError(f"player {p.id}: alive flag disagrees with health")
    return p


def snapshot_line(snap: Snapshot, bombsite):
    return {
        "tick": snap.tick,
        "players": [player_record(p) for p in snap.players],
        "map_state": {"bombsite": bombsite, "x": _r(snap.seconds_to_explosion)},
        "events": [e.to_dict() for e in snap.events],
    }


def header_line(log: RoundLog):
    return {
        "round_id": log.round_id,
        "map": log.map_name,
        "bombsite": log.bombsite,
        "tick_rate_hz": log.tick_rate_hz,
        "log_rate_hz": log.log_rate_hz,
        "players": log.players,
        "seed": log.seed,
    }


def dumps(log: RoundLog):
    lines = [json.dumps(header_line(log), separators=(",", ":"))]
    for s in log.snapshots:
        lines.append(json.dumps(snapshot_line(s, log.bombsite), separators=(",", ":")))
    lines.append(json.dumps({"outcome": log.outcome, "duration_s": _r(log.duration_s)}, separators=(",", ":")))
    return "\n".join(lines) + "\n"


def write_log(log: RoundLog, path):
    Path(path).write_text(dumps(log))


def loads(text, name="<log>"):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 2:
        raise LogFormatError(f"{name}: too few lines")
    try:
        head = json.loads(lines[0])
        log = RoundLog(
            round_id=str(head["round_id"]),
            map_name=head["map"],
            bombsite=head["bombsite"],
            tick_rate_hz=int(head["tick_rate_hz"]),
            players=head["players"],
            log_rate_hz=int(head.get("log_rate_hz", 16)),
            seed=head.get("seed"),
        )
        for lineno, ln in enumerate(lines[1:-1], start=2):
            d = json.loads(ln)
            log.snapshots.append(
                Snapshot(
                    tick=int(d["tick"]),
                    players=sorted((parse_player(p) for p in d["players"]), key=lambda p: p.id),
                    seconds_to_explosion=float(d["map_state"]["x"]),
                    events=[GameEvent.from_dict(e) for e in d.get("events", [])],
                )
            )
        tail = json.loads(lines[-1])
        log.outcome = tail["outcome"]
        log.duration_s = float(tail["duration_s"])
    except LogFormatError:
        raise
    except (KeyError, ValueError, TypeError, IndexError) as exc:
        raise LogFormatError(f"{name}: {exc}") from None
    log.validate()
    return log


def read_log(path):
    path = Path(path)
    return loads(path.read_text(), name=str(path))


def log_paths(directory):
    return sorted(Path(directory).glob("*.jsonl"))


def read_logs(directory, errors=None):
    """Read every ``*.jsonl`` log; malformed ones are skipped and reported in ``errors``."""
    out = []
    for path in log_paths(directory):
        try:
            out.append(read_log(path))
        except LogFormatError as exc:
            if errors is None:
                raise
            errors.append(str(exc))
    return out
