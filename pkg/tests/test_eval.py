import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import DEFENSE, OFFENSE, SPOTS, hurt, make_log
from retake_move.eval import (
    EMDError,
    Histogram1D,
    Histogram2D,
    detect_mistakes,
    detect_round_mistakes,
    detect_round_teamwork,
    downsample,
    emd1,
    emd2,
    evaluate,
    heatmap_pixels,
    kill_locations,
    lifetimes,
    occupancy,
    shots_per_kill_values,
    summarize,
    tactics_configs,
    teamwork_ape,
    teamwork_counts,
)
from retake_move.world import GameEvent

linprog = pytest.importorskip("scipy.optimize").linprog


def linprog_emd(a, b):
    """Independent transport solve on the full grids (cell units)."""
    a = a / a.sum()
    b = b / b.sum()
    ia = np.argwhere(np.ones_like(a, dtype=bool))
    cost = np.sqrt(((ia[:, None, :] - ia[None, :, :]) ** 2).sum(-1)).ravel()
    n = a.size
    rows = np.zeros((2 * n, n * n))
    for i in range(n):
        rows[i, i * n : (i + 1) * n] = 1.0
        rows[n + i, i::n] = 1.0
    res = linprog(cost, A_eq=rows, b_eq=np.concatenate([a.ravel(), b.ravel()]), bounds=(0, None), method="highs")
    assert res.status == 0
    return res.fun


masses = arrays(np.float64, (4, 4), elements=st.floats(0, 5, allow_nan=False)).filter(lambda m: m.sum() > 0.5)


def test_emd_identity_is_zero():
    m = np.arange(16.0).reshape(4, 4) + 1
    assert emd2(m, m) == 0.0


def test_emd_point_masses_is_euclidean():
    a = np.zeros((10, 10))
    b = np.zeros((10, 10))
    a[1, 2] = 1
    b[7, 9] = 3
    assert emd2(a, b) == pytest.approx(math.hypot(6, 7), abs=1e-12)


def test_emd_single_row_matches_cdf_formula():
    rng = np.random.default_rng(0)
    a = rng.random((1, 20))
    b = rng.random((1, 20))
    closed = np.abs(np.cumsum(a / a.sum()) - np.cumsum(b / b.sum())).sum()
    assert abs(emd2(a, b) - closed) <= 1e-9


@settings(max_examples=25, deadline=None)
@given(masses, masses)
def test_emd_matches_linear_program(a, b):
    assert emd2(a, b) == pytest.approx(linprog_emd(a, b), abs=1e-7)


@settings(max_examples=40, deadline=None)
@given(masses, masses, masses)
def test_emd_is_a_metric(a, b, c):
    ab, ba = emd2(a, b), emd2(b, a)
    assert abs(ab - ba) <= 1e-9
    assert ab <= emd2(a, c) + emd2(c, b) + 1e-9
    assert ab >= 0


def test_emd_rejects_bad_inputs():
    with pytest.raises(EMDError):
        emd2(np.zeros((2, 2)), np.ones((2, 2)))
    with pytest.raises(EMDError):
        emd2(np.ones((2, 2)), np.ones((3, 2)))
    with pytest.raises(EMDError):
        emd2(np.array([[1.0, -1.0]]), np.ones((1, 2)))


def test_downsample_preserves_mass_and_caps_size():
    m = np.random.default_rng(1).random((32, 50))
    d = downsample(m, 24)
    assert max(d.shape) <= 24
    assert d.sum() == pytest.approx(m.sum())


def test_emd1_examples():
    a = Histogram1D.uniform(0, 4, 4)
    b = Histogram1D.uniform(0, 4, 4)
    a.add(0.5)
    b.add(3.5)
    assert emd1(a, b) == pytest.approx(3.0)
    assert emd1(a, a) == 0.0
    with pytest.raises(EMDError):
        emd1(a, Histogram1D.uniform(0, 8, 4))


def test_histogram_cells_clamp_to_grid():
    h = Histogram2D.zeros((0, 0, 100, 100), 50)
    h.add(-5, 250)
    h.add(99, 0)
    assert h.masses[1, 0] == 1 and h.masses[0, 1] == 1


def test_occupancy_counts_alive_players_at_16hz(geometry):
    log = make_log([(t, [(0, OFFENSE, 100, 100), (5, DEFENSE, 900, 900, 100 if t < 16 else 0)], []) for t in (0, 8, 16, 24)])
    occ = occupancy([log], geometry)
    assert occ.total == 6  # four snapshots for the attacker, two for the defender
    assert occupancy([log], geometry, team=DEFENSE).total == 2


def test_kill_locations_and_lifetimes(geometry):
    kill = GameEvent(0, "elimination", 256, 5)
    log = make_log([(0, [(0, OFFENSE, 100, 100), (5, DEFENSE, 900, 900)], []), (256, [(0, OFFENSE, 120, 110), (5, DEFENSE, 900, 900, 0)], [kill])])
    k = kill_locations([log], geometry)
    assert k.total == 1 and k.masses[k.cell_of(120, 110)] == 1
    life = lifetimes([log])
    assert life.total == 2
    # The defender died at 2 s and the attacker survived the 2 s round.
    assert life.masses[1] == 2


def test_shots_per_kill_counts_one_engagement():
    ev = [GameEvent(0, "shoot", t, 5, 10) for t in (11, 12, 13)]
    ev.insert(0, GameEvent(0, "shoot", 5, 6, 4))
    ev.append(GameEvent(0, "elimination", 13, 5))
    log = make_log([(0, [(0, OFFENSE, 0, 0), (5, DEFENSE, 1, 1)], []), (16, [(0, OFFENSE, 0, 0), (5, DEFENSE, 1, 1, 0)], ev)])
    assert shots_per_kill_values(log) == [3]


def test_summarize_fixture():
    s = summarize([1, 2, 3, 4, 5])
    assert s["median"] == 3 and s["iqr"] == 2 and not s["low_confidence"]
    one = summarize([7.0, float("nan")])
    assert one["iqr"] == 0 and one["low_confidence"]


# ---------------------------------------------------------------- detectors


def _defender_path(positions, offense_alive=True, events=()):
    frames = []
    for i, pos in enumerate(positions):
        t = 16 * i
        off = (0, OFFENSE, *SPOTS["spawn"], 100 if offense_alive else 0)
        frames.append((t, [off, (5, DEFENSE, *pos)], [e for e in events if e.tick <= t and e.tick > t - 16]))
    return make_log(frames)


def test_leaving_high_ground_counts_once(geometry):
    path = [SPOTS["a_perch"]] * 4 + [SPOTS["a_site_open"]] * 3
    c = detect_round_mistakes(_defender_path(path), geometry)
    assert (c.high_ground, c.abandon) == (1, 0)


def test_leaving_high_ground_after_offense_is_dead_is_not_counted(geometry):
    path = [SPOTS["a_perch"]] * 4 + [SPOTS["a_site_open"]]
    assert detect_round_mistakes(_defender_path(path, offense_alive=False), geometry).high_ground == 0


def test_abandoning_a_held_spot_counts(geometry):
    held = [SPOTS["a_boxes"]] * 25  # 24 steps = 3 s
    c = detect_round_mistakes(_defender_path(held + [SPOTS["a_site_open"]]), geometry)
    assert (c.high_ground, c.abandon) == (0, 1)


def test_short_hold_is_not_abandoning(geometry):
    held = [SPOTS["a_boxes"]] * 24
    assert detect_round_mistakes(_defender_path(held + [SPOTS["a_site_open"]]), geometry).abandon == 0


def test_forced_exit_after_damage_is_not_abandoning(geometry):
    held = [SPOTS["a_boxes"]] * 30
    leave_tick = 16 * 30
    log = _defender_path(held + [SPOTS["a_site_open"]], events=[hurt(0, 5, leave_tick - 40)])
    assert detect_round_mistakes(log, geometry).abandon == 0


def test_detectors_replay_deterministically(geometry):
    path = [SPOTS["a_perch"]] * 30 + [SPOTS["a_site_open"]]
    log = _defender_path(path)
    runs = [detect_mistakes([log, log], geometry) for _ in range(3)]
    assert runs[0] == runs[1] == runs[2]
    assert runs[0]["rounds_high_ground"] == 2 and runs[0]["rounds_abandon"] == 2


def test_flank_pair_detected_once(geometry):
    frames = [(16 * i, [(0, OFFENSE, *SPOTS["a_long"]), (1, OFFENSE, *SPOTS["mid"]), (5, DEFENSE, *SPOTS["ct"])], []) for i in range(5)]
    log = make_log(frames)
    seen = detect_round_teamwork(log, geometry, tactics_configs(geometry))
    assert seen == {"a_long+mid"}
    counts = teamwork_counts([log], geometry)
    assert sum(counts.values()) == 1 and counts["a_long+mid"] == 1


def test_flank_needs_two_distinct_players(geometry):
    frames = [(0, [(0, OFFENSE, *SPOTS["a_long"]), (5, DEFENSE, *SPOTS["mid"])], [])]
    assert detect_round_teamwork(make_log(frames), geometry, tactics_configs(geometry)) == set()


def test_defenders_do_not_form_flanks(geometry):
    frames = [(0, [(0, OFFENSE, *SPOTS["spawn"]), (5, DEFENSE, *SPOTS["a_long"]), (6, DEFENSE, *SPOTS["mid"])], [])]
    assert detect_round_teamwork(make_log(frames), geometry, tactics_configs(geometry)) == set()


def test_teamwork_ape_scales_and_excludes():
    out = teamwork_ape({"x": 5, "y": 1}, {"x": 20, "y": 0}, test_rounds=50, ref_rounds=200)
    assert out.ape == {"x": 0.0}
    assert out.excluded == ["y"]
    assert out.median == 0.0


# ---------------------------------------------------------------- report


def test_evaluate_identical_logs_gives_zero_distances(geometry):
    frames = [(16 * i, [(0, OFFENSE, 200 + 20 * i, 200), (5, DEFENSE, 1300, 1300)], []) for i in range(6)]
    frames[-1][2].append(GameEvent(0, "elimination", 80, 5))
    logs = [make_log(frames)]
    rep = evaluate([logs, logs], logs, geometry)
    m = rep.summary
    assert m["occupancy_mean"]["median"] == 0.0
    assert m["lifetimes"]["median"] == 0.0
    assert m["occupancy_mean"]["iterations"] == 2


def test_heatmap_pixels_range():
    h = Histogram2D(np.array([[0.0, 1.0], [10.0, 100.0]]), 1.0)
    px = heatmap_pixels(h.masses)
    assert px.dtype == np.uint8 and px.max() == 255 and px.min() == 0
