import numpy as np
import pytest

from conftest import DEFENSE, OFFENSE, make_log
from retake_move.dataset import (
    HORIZON_STEPS,
    NO_LABEL,
    PackError,
    SampleSet,
    augment_positions,
    build_samples,
    curate,
    infer_move_command,
    load_dataset,
    normalization,
    read_pack,
    split_rounds,
    split_samples,
    write_manifest,
    write_pack,
)
from retake_move.world import STILL, encode_move


def _walk_log(n=12, round_id="w0", defender_dies_at=None):
    frames = []
    for i in range(n):
        t = 8 * i
        dh = 0 if defender_dies_at is not None and i >= defender_dies_at else 100
        frames.append((t, [(0, OFFENSE, 200 + 2 * i, 200), (5, DEFENSE, 1300, 1300, dh)], []))
    log = make_log(frames, round_id=round_id)
    for i, s in enumerate(log.snapshots):
        s.players[0].vx = 250.0 if i % 2 == 0 else 0.0
    return log


def test_infer_move_command():
    assert infer_move_command(0.0, 0.0) == STILL
    assert infer_move_command(250.0, 0.0) == encode_move(0, 2, 0)
    assert infer_move_command(0.0, -90.0) == encode_move(12, 0, 0)
    assert infer_move_command(0.0, 130.0, vz=10.0) == encode_move(4, 1, 1)


def test_curation_stops_when_a_team_is_wiped():
    rounds, cov = curate([_walk_log(12, defender_dies_at=7)])
    assert len(rounds[0].snapshots) == 7
    assert cov.snapshots_kept == 7 and cov.defense_alive[1] == 7


def test_labels_use_the_three_horizons(geometry):
    rounds, _ = curate([_walk_log(12)])
    s = build_samples(rounds, geometry)
    assert len(s) == 12 - HORIZON_STEPS[-1]
    run, still = encode_move(0, 2, 0), STILL
    # sample 0: horizons at snapshots 0, 2 and 4 all move; sample 1: 1, 3, 5 are still
    assert list(s.labels[0, 0]) == [run, run, run]
    assert list(s.labels[1, 0]) == [still, still, still]
    assert s.alive[0, 0] and s.alive[0, 5] and not s.alive[0, 1]
    assert (s.labels[:, 1] == NO_LABEL).all()


def test_round_split_is_atomic_and_seeded():
    ids = [f"r{i:02d}" for i in range(10)]
    a = split_rounds(ids, 0.8, seed=3)
    assert len(a.train_rounds) == 8 and len(a.test_rounds) == 2
    assert not set(a.train_rounds) & set(a.test_rounds)
    assert a == split_rounds(list(reversed(ids)), 0.8, seed=3)


def test_split_samples_by_round(geometry):
    rounds, _ = curate([_walk_log(12, "a"), _walk_log(10, "b")])
    s = build_samples(rounds, geometry)
    tr, te = split_samples(s, split_rounds(["a", "b"], 0.5, seed=0))
    assert len(tr) + len(te) == len(s)
    assert len({int(i) for i in tr.round_index}) == 1


def test_pack_round_trip(geometry, tmp_path):
    rounds, cov = curate([_walk_log(12, "a"), _walk_log(9, "b")])
    s = build_samples(rounds, geometry)
    write_pack(tmp_path / "s.mlds", s)
    write_manifest(tmp_path / "m.json", s, split_rounds(s.round_ids), normalization(geometry), cov)
    back, manifest = load_dataset(tmp_path / "s.mlds", tmp_path / "m.json")
    for name in ("tokens", "labels", "alive", "round_index"):
        np.testing.assert_array_equal(getattr(back, name), getattr(s, name))
    assert back.round_ids == ["a", "b"] and manifest["samples"] == len(s)


def test_pack_errors(geometry, tmp_path):
    s = SampleSet.empty(15)
    p = tmp_path / "s.mlds"
    write_pack(p, s)
    raw = p.read_bytes()
    (tmp_path / "magic").write_bytes(b"XXXX" + raw[4:])
    (tmp_path / "short").write_bytes(raw[:5])
    (tmp_path / "extra").write_bytes(raw + b"\0")
    for name in ("magic", "short", "extra"):
        with pytest.raises(PackError):
            read_pack(tmp_path / name)


def test_augmentation_only_moves_alive_positions():
    rng = np.random.default_rng(0)
    tokens = rng.random((4, 10, 15)).astype(np.float32)
    alive = rng.random((4, 10)) < 0.5
    out = augment_positions(tokens, alive, np.random.default_rng(1), (1600.0, 1600.0))
    np.testing.assert_array_equal(out[..., 2:], tokens[..., 2:])
    np.testing.assert_array_equal(out[~alive], tokens[~alive])
    assert (out[alive][:, :2] != tokens[alive][:, :2]).any()
    np.testing.assert_array_equal(augment_positions(tokens, alive, rng, (1600.0, 1600.0), std=0.0), tokens)
