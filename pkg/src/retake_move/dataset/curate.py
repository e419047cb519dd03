"""Curation: round logs to 16 Hz labeled samples, splits and augmentation."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from ..world.logs import LogFormatError, read_log
from ..world.state import DEFENSE, OFFENSE
from .features import NUM_SLOTS, POS, FeatureTracker, infer_move_command, token_width

SAMPLE_RATE_HZ = 16
HORIZON_STEPS = (0, 2, 4)  # 0, +125 ms, +250 ms at 16 Hz
NO_LABEL = -1


@dataclass
class CuratedRound:
    round_id: str
    bombsite: str
    tick_rate_hz: int
    snapshots: list


@dataclass
class Coverage:
    rounds_read: int = 0
    rounds_kept: int = 0
    rejected: list = field(default_factory=list)
    snapshots_kept: int = 0
    offense_alive: Counter = field(default_factory=Counter)
    defense_alive: Counter = field(default_factory=Counter)

    def to_dict(self):
        return {
            "rounds_read": self.rounds_read,
            "rounds_kept": self.rounds_kept,
            "rounds_rejected": len(self.rejected),
            "rejected": self.rejected,
            "snapshots_kept": self.snapshots_kept,
            "offense_alive_hist": {str(k): v for k, v in sorted(self.offense_alive.items())},
            "defense_alive_hist": {str(k): v for k, v in sorted(self.defense_alive.items())},
        }


def curate_round(log):
    """Keep the 16 Hz snapshots at which both teams still have a living player."""
    if log.tick_rate_hz % SAMPLE_RATE_HZ:
        raise LogFormatError(f"{log.round_id}: tick rate {log.tick_rate_hz} is not a multiple of 16")
    step = log.tick_rate_hz // SAMPLE_RATE_HZ
    kept = []
    for snap in log.snapshots:
        if snap.tick % step:
            continue
        off = sum(1 for p in snap.players if p.alive and p.team == OFFENSE)
        dfn = sum(1 for p in snap.players if p.alive and p.team == DEFENSE)
        if off == 0 or dfn == 0:
            # A team wiped out ends the usable part of the round.
            break
        kept.append(snap)
    return CuratedRound(log.round_id, log.bombsite, log.tick_rate_hz, kept)


def curate(logs, coverage=None):
    coverage = coverage if coverage is not None else Coverage()
    out = []
    for log in logs:
        coverage.rounds_read += 1
        cr = curate_round(log)
        coverage.rounds_kept += 1
        coverage.snapshots_kept += len(cr.snapshots)
        for snap in cr.snapshots:
            coverage.offense_alive[sum(1 for p in snap.players if p.alive and p.team == OFFENSE)] += 1
            coverage.defense_alive[sum(1 for p in snap.players if p.alive and p.team == DEFENSE)] += 1
        out.append(cr)
    return out, coverage


def curate_paths(paths):
    """Read and curate log files; malformed files are rejected and listed in the coverage report."""
    coverage = Coverage()
    logs = []
    for path in paths:
        try:
            logs.append(read_log(path))
        except LogFormatError as exc:
            coverage.rounds_read += 1
            coverage.rejected.append(str(exc))
    rounds, coverage = curate(logs, coverage)
    return rounds, coverage


@dataclass
class SampleSet:
    tokens: np.ndarray  # (N, 10, W) float32
    labels: np.ndarray  # (N, 10, 3) int16, NO_LABEL where absent
    alive: np.ndarray  # (N, 10) bool
    round_index: np.ndarray  # (N,) uint32 into round_ids
    round_ids: list

    def __len__(self):
        return len(self.tokens)

    @property
    def width(self):
        return self.tokens.shape[-1]

    def subset(self, mask_or_index):
        return SampleSet(
            self.tokens[mask_or_index],
            self.labels[mask_or_index],
            self.alive[mask_or_index],
            self.round_index[mask_or_index],
            self.round_ids,
        )

    @classmethod
    def empty(cls, width, round_ids=()):
        return cls(
            np.zeros((0, NUM_SLOTS, width), np.float32),
            np.zeros((0, NUM_SLOTS, len(HORIZON_STEPS)), np.int16),
            np.zeros((0, NUM_SLOTS), bool),
            np.zeros(0, np.uint32),
            list(round_ids),
        )


def round_samples(cr, geometry, history_depth=0):
    """Tokens, labels and alive masks for every snapshot with all horizon labels in range."""
    tracker = FeatureTracker(geometry, cr.bombsite, history_depth)
    snaps = cr.snapshots
    step = cr.tick_rate_hz // SAMPLE_RATE_HZ
    dt = 1.0 / cr.tick_rate_hz
    feats = [tracker.observe(s.players, s.seconds_to_explosion, s.tick * dt) for s in snaps]
    moves = []
    for s in snaps:
        m = np.full(NUM_SLOTS, NO_LABEL, dtype=np.int16)
        for p in s.players:
            # Players who die before a later horizon carry zero velocity, i.e. still.
            m[p.id] = infer_move_command(p.vx, p.vy, p.vz)
        moves.append(m)
    tokens, labels, alive = [], [], []
    last = HORIZON_STEPS[-1]
    for i in range(len(snaps) - last):
        if snaps[i + last].tick - snaps[i].tick != last * step:
            continue
        tok, al = feats[i]
        lab = np.stack([moves[i + h] for h in HORIZON_STEPS], axis=1)
        lab[~al] = NO_LABEL
        tokens.append(tok)
        labels.append(lab)
        alive.append(al)
    return tokens, labels, alive


def build_samples(rounds, geometry, history_depth=0):
    width = token_width(history_depth)
    ids = [cr.round_id for cr in rounds]
    tok, lab, al, idx = [], [], [], []
    for r, cr in enumerate(rounds):
        t, l, a = round_samples(cr, geometry, history_depth)
        tok += t
        lab += l
        al += a
        idx += [r] * len(t)
    if not tok:
        return SampleSet.empty(width, ids)
    return SampleSet(
        np.stack(tok).astype(np.float32),
        np.stack(lab).astype(np.int16),
        np.stack(al),
        np.asarray(idx, dtype=np.uint32),
        ids,
    )


@dataclass
class DatasetSplit:
    train_rounds: list
    test_rounds: list


def split_rounds(round_ids, ratio=0.8, seed=0):
    """Round-atomic seeded split; each side is returned in sorted order."""
    ids = sorted(set(round_ids))
    rng = np.random.default_rng(seed)
    order = [ids[i] for i in rng.permutation(len(ids))]
    n_train = int(round(ratio * len(ids)))
    if len(ids) >= 2:
        n_train = min(max(n_train, 1), len(ids) - 1)
    return DatasetSplit(sorted(order[:n_train]), sorted(order[n_train:]))


def split_samples(samples: SampleSet, split: DatasetSplit):
    train_set = set(split.train_rounds)
    test_set = set(split.test_rounds)
    rid = np.array(samples.round_ids, dtype=object)
    per_sample = rid[samples.round_index] if len(samples) else np.array([], dtype=object)
    train_mask = np.array([r in train_set for r in per_sample], dtype=bool)
    test_mask = np.array([r in test_set for r in per_sample], dtype=bool)
    return samples.subset(train_mask), samples.subset(test_mask)


def augment_positions(tokens, alive, rng, extent, std=20.0):
    """Add N(0, std^2) map-unit noise to the x/y position features of alive players."""
    out = tokens.copy()
    if std == 0.0:
        return out
    noise = rng.normal(0.0, std, size=tokens.shape[:-1] + (2,))
    scaled = noise / np.asarray(extent, dtype=np.float64)
    xy = out[..., POS.start : POS.start + 2].astype(np.float64) + scaled
    out[..., POS.start : POS.start + 2] = np.where(alive[..., None], xy, out[..., POS.start : POS.start + 2])
    return out
