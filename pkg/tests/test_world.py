import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import SPOTS
from retake_move.world import (
    NUM_MOVES,
    OUTCOMES,
    STILL,
    ActionCommand,
    LogFormatError,
    MapError,
    PlayerState,
    World,
    WorldConfig,
    command_velocity,
    decode_move,
    encode_move,
    parse_map,
    read_log,
    sample_initial_conditions,
    write_log,
)
from retake_move.world.logs import dumps, loads
from retake_move.world.moves import nearest_direction


def test_move_table_size_and_layout():
    assert NUM_MOVES == 97
    assert encode_move() == STILL
    assert encode_move(0, 0, 0) == 1
    assert encode_move(15, 2, 1) == 96
    assert encode_move(3, 1, 0) == 1 + 3 + 16


@given(st.integers(1, 96))
def test_move_encoding_round_trips(i):
    c = decode_move(i)
    assert encode_move(c.direction, c.speed, c.jump) == i


def test_move_velocities():
    assert command_velocity(STILL) == (0.0, 0.0)
    vx, vy = command_velocity(encode_move(4, 2, 0))  # 90 degrees, run speed
    assert vx == pytest.approx(0.0, abs=1e-9) and vy == pytest.approx(250.0)
    assert nearest_direction(-90.0) == 12


def test_region_lookup(geometry):
    assert geometry.region_of(*SPOTS["a_perch"]) == {"bombsite_a", "a_perch"}
    assert geometry.region_of(*SPOTS["mid"]) == {"mid"}
    assert geometry.in_label(*SPOTS["a_perch"], "high_ground")
    assert not geometry.in_label(*SPOTS["a_boxes"], "high_ground")


def test_map_validation_rejects_unknown_region_label(geometry):
    doc = json.loads(open(geometry_path()).read())
    doc["regions"][0]["labels"] = ["lava"]
    with pytest.raises(MapError):
        parse_map(doc)


def geometry_path():
    from retake_move.world import default_map_path

    return default_map_path()


def _duel(geometry, gap=200.0):
    a = PlayerState(0, "offense", 800.0, 700.0, yaw=90.0)
    b = PlayerState(5, "defense", 800.0, 700.0 + gap, yaw=-90.0)
    return World(geometry, [a, b], "A", seed=3)


def test_velocity_approaches_command(geometry):
    w = _duel(geometry)
    move = encode_move(0, 2, 0)  # +x at run speed
    for _ in range(32):  # 0.25 s, well past the velocity time constant
        w.step({0: ActionCommand(move=move)})
    p = w.players[0]
    assert p.vx == pytest.approx(250.0, rel=1e-3) and abs(p.vy) < 1e-9
    assert p.x > 800.0


def test_still_decays_to_zero(geometry):
    w = _duel(geometry)
    w.step({0: ActionCommand(move=encode_move(0, 2, 0))})
    for _ in range(128):
        w.step({})
    assert w.players[0].vx == 0.0


def test_walls_block_movement(geometry):
    w = _duel(geometry)
    for _ in range(128 * 10):
        if w.done:
            break
        w.step({0: ActionCommand(move=encode_move(8, 2, 0))})  # -x for ten seconds
    assert not geometry.point_blocked(w.players[0].x, w.players[0].y, inflate=False)


def test_jump_leaves_and_returns_to_ground(geometry):
    w = _duel(geometry)
    w.step({0: ActionCommand(move=encode_move(0, 0, 1))})
    assert w.players[0].vz > 0
    for _ in range(256):
        w.step({})
    assert w.players[0].z == 0.0 and w.players[0].vz == 0.0


def test_unknown_action_id_rejected(geometry):
    with pytest.raises(KeyError):
        _duel(geometry).step({42: ActionCommand()})


def test_round_ends_by_time(geometry):
    cfg = WorldConfig()
    a = PlayerState(0, "offense", SPOTS["spawn"][0], SPOTS["spawn"][1])
    b = PlayerState(5, "defense", SPOTS["b_tunnel"][0], SPOTS["b_tunnel"][1])
    w = World(geometry, [a, b], "A", seed=0, config=cfg)
    while not w.done:
        w.step({})
    assert w.outcome in OUTCOMES
    assert w.time <= cfg.round_time + 1e-9


def test_simulation_is_deterministic(geometry):
    def run():
        w = _duel(geometry, gap=120.0)
        ev = []
        for _ in range(400):
            if w.done:
                break
            ev += w.step({0: ActionCommand(fire=True, aim_target=5), 5: ActionCommand(fire=True, aim_target=0)})
        return [(e.src, e.type, e.tick, e.tgt) for e in ev], [(p.x, p.y, p.health) for p in w.players.values()]

    assert run() == run()


def test_initial_conditions_respect_team_sizes(geometry):
    rng = np.random.default_rng(0)
    for _ in range(50):
        ic = sample_initial_conditions(geometry, rng)
        teams = [p[1] for p in ic.players]
        assert 1 <= teams.count("offense") <= 4 and 1 <= teams.count("defense") <= 3
        bx, by = geometry.bombs[ic.bombsite]
        d0 = [p for p in ic.players if p[1] == "defense"][0]
        assert math.hypot(d0[2] - bx, d0[3] - by) <= 60


def _tiny_log(geometry):
    from retake_move.bots import BotConfig, run_round

    cfgs = {"offense": BotConfig("scripted_expert"), "defense": BotConfig("scripted_expert")}
    return run_round(geometry, cfgs, 11, 0, 0)


def test_log_round_trip(geometry, tmp_path):
    log = _tiny_log(geometry)
    path = tmp_path / "r.jsonl"
    write_log(log, path)
    back = read_log(path)
    assert dumps(back) == path.read_text()
    assert back.outcome == log.outcome
    assert [s.tick for s in back.snapshots] == [s.tick for s in log.snapshots]


def test_malformed_logs_are_rejected(geometry):
    text = dumps(_tiny_log(geometry))
    with pytest.raises(LogFormatError):
        loads(text.splitlines()[0])
    lines = text.splitlines()
    lines[1], lines[2] = lines[2], lines[1]
    with pytest.raises(LogFormatError):
        loads("\n".join(lines))
    with pytest.raises(LogFormatError):
        loads(text.replace('"outcome":"', '"outcome":"x'))
