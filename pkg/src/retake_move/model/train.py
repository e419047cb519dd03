"""Imitation training loop."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass

import numpy as np

from ..dataset.curate import SampleSet, augment_positions
from ..numerics import AdamState, NumericError, adam_step, backward, no_grad
from .config import ModelConfig, TrainConfig
from .policy import MovePolicy, policy_loss


class TrainingError(RuntimeError):
    """Empty data or a diverged run."""


@dataclass
class EpochMetrics:
    epoch: int
    train_loss: float
    test_loss: float
    wall_time: float


def evaluate_loss(policy: MovePolicy, samples: SampleSet, batch_size=2048):
    """Alive-and-horizon weighted mean cross-entropy over a sample set (nan when empty)."""
    if len(samples) == 0:
        return math.nan
    total, count = 0.0, 0
    with no_grad():
        for start in range(0, len(samples), batch_size):
            sl = slice(start, start + batch_size)
            alive = samples.alive[sl]
            n = int(alive.sum()) * samples.labels.shape[-1]
            loss = policy_loss(policy.forward(samples.tokens[sl], alive), samples.labels[sl], alive)
            total += loss.item() * n
            count += n
    return total / count


def train(train_set: SampleSet, test_set: SampleSet, model_config: ModelConfig, train_config: TrainConfig, log=None):
    """Train from a fresh seeded initialization; returns (policy, per-epoch metrics)."""
    if len(train_set) == 0:
        raise TrainingError("training split is empty")
    if train_set.width != model_config.token_width:
        raise TrainingError(f"token width {train_set.width} does not match model input {model_config.token_width}")
    cfg = train_config
    policy = MovePolicy(model_config, seed=cfg.seed)
    params = policy.parameters()
    state = AdamState(learning_rate=cfg.learning_rate)
    rng = np.random.default_rng(cfg.seed)
    extent = model_config.position_scale
    metrics = []
    t0 = time.perf_counter()
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(train_set))
        total, count = 0.0, 0
        for start in range(0, len(order), cfg.batch_size):
            idx = np.sort(order[start : start + cfg.batch_size])
            alive = train_set.alive[idx]
            tokens = augment_positions(train_set.tokens[idx], alive, rng, extent, cfg.augment_std)
            for p in params:
                p.zero_grad()
            try:
                loss = policy_loss(policy.forward(tokens, alive), train_set.labels[idx], alive)
                backward(loss)
            except NumericError as exc:
                raise TrainingError(f"epoch {epoch}, batch at {start}: {exc}") from None
            value = loss.item()
            if not math.isfinite(value):
                raise TrainingError(f"epoch {epoch}: non-finite loss")
            adam_step(params, state)
            n = int(alive.sum())
            total += value * n
            count += n
        test_loss = evaluate_loss(policy, test_set, cfg.eval_batch_size)
        m = EpochMetrics(epoch, total / count, test_loss, time.perf_counter() - t0)
        metrics.append(m)
        if log is not None:
            log(f"epoch {epoch}: train {m.train_loss:.4f} test {m.test_loss:.4f} ({m.wall_time:.1f}s)")
    return policy, metrics


def write_metrics(path, metrics):
    """Loss curve only; wall-clock times go to ``write_timing`` so reruns compare bitwise."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "train_loss", "test_loss"])
        for m in metrics:
            w.writerow([m.epoch, repr(m.train_loss), repr(m.test_loss)])


def write_timing(path, metrics):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "wall_time"])
        for m in metrics:
            w.writerow([m.epoch, f"{m.wall_time:.3f}"])
