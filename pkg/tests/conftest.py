import pytest

from retake_move.world import DEFENSE, OFFENSE, GameEvent, PlayerState, RoundLog, Snapshot, load_map


@pytest.fixture(scope="session")
def geometry():
    return load_map()


def player(pid, team, x, y, health=100):
    return PlayerState(pid, team, float(x), float(y), health=health)


def make_log(frames, round_id="t0", bombsite="A", outcome="defused"):
    """Round log from ``[(tick, [(pid, team, x, y[, health]), ...], [GameEvent, ...]), ...]``."""
    snaps = []
    teams = {}
    for tick, players, events in frames:
        ps = [player(*p) for p in players]
        for p in ps:
            teams[p.id] = p.team
        snaps.append(Snapshot(tick, sorted(ps, key=lambda p: p.id), max(0.0, 40.0 - tick / 128.0), list(events)))
    return RoundLog(
        round_id=round_id,
        map_name="desk_dust",
        bombsite=bombsite,
        tick_rate_hz=128,
        players=[{"id": i, "team": t, "controller": ""} for i, t in sorted(teams.items())],
        snapshots=snaps,
        outcome=outcome,
        duration_s=snaps[-1].tick / 128.0 if snaps else 0.0,
    )


def hurt(src, tgt, tick):
    return GameEvent(src, "hurt", tick, tgt)


# Fixed placements on the built-in map, chosen to sit in exactly the named regions.
SPOTS = {
    "a_perch": (1530.0, 1530.0),
    "a_boxes": (1330.0, 1330.0),
    "a_site_open": (1440.0, 1200.0),
    "a_long": (1450.0, 700.0),
    "mid": (800.0, 700.0),
    "spawn": (800.0, 150.0),
    "b_tunnel": (150.0, 700.0),
    "ct": (800.0, 1300.0),
}

__all__ = ["DEFENSE", "OFFENSE", "SPOTS", "hurt", "make_log", "player", "record"]


# Acceptance criteria record one line each here; they are printed after the run.
CRITERIA = {}


def record(number, ok, detail):
    CRITERIA[number] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        ok, detail = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
