import math

import numpy as np
import pytest
from threadpoolctl import threadpool_limits

from retake_move.dataset import SampleSet
from retake_move.model import (
    CheckpointError,
    ConfigError,
    ModelConfig,
    MovePolicy,
    TrainConfig,
    load,
    policy_loss,
    preset,
    save,
    train,
)
from retake_move.model.checkpoint import dumps, loads


def random_batch(rng, n, width=15, p_alive=0.7):
    tokens = rng.uniform(-1, 1, (n, 10, width)).astype(np.float32)
    alive = rng.random((n, 10)) < p_alive
    alive[np.arange(n), rng.integers(0, 10, n)] = True
    return tokens, alive


def randomized(cfg, seed=0):
    """A policy whose head is not zero, so outputs depend on the inputs."""
    pol = MovePolicy(cfg, seed=seed)
    rng = np.random.default_rng(seed + 100)
    pol.params["head.w"].data[:] = rng.normal(0, 0.2, pol.params["head.w"].shape)
    return pol


def test_fresh_policy_is_uniform():
    rng = np.random.default_rng(0)
    tokens, alive = random_batch(rng, 8)
    pol = MovePolicy(preset("desk"), seed=1)
    labels = rng.integers(0, 97, (8, 10, 3))
    loss = policy_loss(pol.forward(tokens, alive), labels, alive).item()
    assert abs(loss - math.log(97)) <= 1e-4


def test_config_validation():
    with pytest.raises(ConfigError):
        ModelConfig(embed_dim=62)
    with pytest.raises(ConfigError):
        ModelConfig(variant="other")
    with pytest.raises(ConfigError):
        preset("huge")
    assert preset("desk").num_layers == 2 and preset("default").embed_dim == 256


def test_history_variant_widens_tokens():
    cfg = preset("desk", variant="history", history_depth=2)
    assert cfg.token_width > 15
    rng = np.random.default_rng(1)
    tokens, alive = random_batch(rng, 2, width=cfg.token_width)
    assert MovePolicy(cfg).forward(tokens, alive).shape == (2, 10, 3, 97)


def test_forward_rejects_bad_inputs():
    pol = MovePolicy(preset("desk"))
    rng = np.random.default_rng(0)
    tokens, alive = random_batch(rng, 2)
    with pytest.raises(ValueError):
        pol.forward(tokens[:, :, :14], alive)
    alive[:] = False
    with pytest.raises(ValueError):
        pol.forward(tokens, alive)


def test_slot_permutation_equivariance():
    pol = randomized(preset("desk"), 3)
    rng = np.random.default_rng(2)
    tokens, alive = random_batch(rng, 16)
    perm = rng.permutation(10)
    with threadpool_limits(1):
        a = pol.probabilities(tokens, alive)
        b = pol.probabilities(tokens[:, perm], alive[:, perm])
    np.testing.assert_array_equal(a[:, perm][alive[:, perm]], b[alive[:, perm]])


def test_dead_players_do_not_influence_the_living():
    pol = randomized(preset("desk"), 4)
    rng = np.random.default_rng(3)
    tokens, alive = random_batch(rng, 16)
    other = tokens.copy()
    other[~alive] = rng.uniform(-1, 1, other[~alive].shape)
    with threadpool_limits(1):
        np.testing.assert_array_equal(pol.probabilities(tokens, alive)[alive], pol.probabilities(other, alive)[alive])


def test_no_attention_variant_isolates_players():
    pol = randomized(preset("desk", variant="no_attn"), 5)
    rng = np.random.default_rng(4)
    tokens, alive = random_batch(rng, 4, p_alive=1.0)
    other = tokens.copy()
    other[:, 1:] = rng.uniform(-1, 1, other[:, 1:].shape)
    with threadpool_limits(1):
        np.testing.assert_array_equal(pol.probabilities(tokens, alive)[:, 0], pol.probabilities(other, alive)[:, 0])


def test_checkpoint_round_trip(tmp_path):
    pol = randomized(preset("desk"), 6)
    save(tmp_path / "m.mlmv", pol, {"note": "x"})
    back, meta = load(tmp_path / "m.mlmv")
    assert meta == {"note": "x"} and back.config == pol.config
    for k, v in pol.params.items():
        np.testing.assert_array_equal(back.params[k].data, v.data)
    assert dumps(back, meta) == (tmp_path / "m.mlmv").read_bytes()


def test_checkpoint_errors(tmp_path):
    raw = dumps(MovePolicy(preset("desk")))
    for bad in (b"XXXX" + raw[4:], raw[:-3], raw + b"\0", raw[:4] + b"\x09\x00" + raw[6:]):
        with pytest.raises(CheckpointError):
            loads(bad)
    with pytest.raises(CheckpointError):
        load(tmp_path / "missing.mlmv")


def test_training_lowers_loss_and_is_reproducible():
    rng = np.random.default_rng(0)
    tokens, alive = random_batch(rng, 64)
    # Learnable labels: the move depends on the sign of the first feature.
    labels = np.where(tokens[..., :1] > 0, 5, 40).repeat(3, axis=-1).astype(np.int16)
    s = SampleSet(tokens, labels, alive, np.zeros(64, np.uint32), ["r"])
    cfg = preset("desk", embed_dim=16, num_layers=1, mlp_hidden=32)
    tc = TrainConfig(epochs=3, batch_size=16, learning_rate=3e-3, augment_std=0.0)
    with threadpool_limits(1):
        _, m1 = train(s, s, cfg, tc)
        _, m2 = train(s, s, cfg, tc)
    assert m1[-1].test_loss < math.log(97) - 1.0
    assert [m.test_loss for m in m1] == [m.test_loss for m in m2]
