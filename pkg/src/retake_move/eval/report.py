"""Per-iteration metrics against a reference log set, summaries, and file exports."""

from __future__ import annotations

import csv
import json
import math
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..world.state import DEFENSE, OFFENSE
from . import detectors, metrics
from .emd import EMDError, emd1, emd2

# Table-1 style rows, in output order.
METRICS = (
    "occupancy_offense",
    "occupancy_defense",
    "occupancy_mean",
    "kill_locations",
    "lifetimes",
    "shots_per_kill",
    "rounds_high_ground",
    "rounds_abandon",
    "teamwork_ape",
)


def summarize(values):
    """Median and IQR (P75 - P25, linear interpolation) over iterations, ignoring NaNs."""
    v = np.asarray([x for x in values if not math.isnan(x)], dtype=np.float64)
    if v.size == 0:
        return {"median": float("nan"), "iqr": float("nan"), "iterations": 0, "low_confidence": True}
    p25, p50, p75 = np.percentile(v, [25, 50, 75])
    return {"median": float(p50), "iqr": float(p75 - p25), "iterations": int(v.size), "low_confidence": bool(v.size < 2)}


def _safe(fn, a, b, flags, name):
    try:
        return fn(a, b)
    except EMDError as exc:
        flags.append(f"{name}: {exc}")
        return float("nan")


@dataclass
class ReferenceStats:
    """Distributions of the reference logs, computed once and reused across iterations."""

    rounds: int
    occupancy: dict
    kills: object
    lifetimes: object
    shots: object
    teamwork: dict
    mistakes: dict

    @classmethod
    def from_logs(cls, logs, geometry, cadence_ticks=detectors.DEFAULT_CADENCE_TICKS):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            tw = detectors.teamwork_counts(logs, geometry, cadence_ticks)
        return cls(
            rounds=len(logs),
            occupancy={t: metrics.occupancy(logs, geometry, t) for t in (OFFENSE, DEFENSE)},
            kills=metrics.kill_locations(logs, geometry),
            lifetimes=metrics.lifetimes(logs),
            shots=metrics.shots_per_kill(logs),
            teamwork=tw,
            mistakes=detectors.detect_mistakes(logs, geometry, cadence_ticks),
        )


def evaluate_iteration(logs, ref: ReferenceStats, geometry, cadence_ticks=detectors.DEFAULT_CADENCE_TICKS):
    """All metrics for one iteration's logs; EMDs that cannot be computed are NaN and flagged."""
    flags = []
    row = {}
    for team in (OFFENSE, DEFENSE):
        occ = metrics.occupancy(logs, geometry, team)
        row[f"occupancy_{team}"] = _safe(emd2, occ, ref.occupancy[team], flags, f"occupancy_{team}")
    row["occupancy_mean"] = 0.5 * (row["occupancy_offense"] + row["occupancy_defense"])
    row["kill_locations"] = _safe(emd2, metrics.kill_locations(logs, geometry), ref.kills, flags, "kill_locations")
    row["lifetimes"] = _safe(emd1, metrics.lifetimes(logs), ref.lifetimes, flags, "lifetimes")
    row["shots_per_kill"] = _safe(emd1, metrics.shots_per_kill(logs), ref.shots, flags, "shots_per_kill")
    m = detectors.detect_mistakes(logs, geometry, cadence_ticks)
    row["rounds_high_ground"] = float(m["rounds_high_ground"])
    row["rounds_abandon"] = float(m["rounds_abandon"])
    counts = {}
    if ref.teamwork:
        counts = detectors.teamwork_counts(logs, geometry, cadence_ticks)
        cmp = detectors.teamwork_ape(counts, ref.teamwork, len(logs), ref.rounds)
        row["teamwork_ape"] = cmp.median
        for name in cmp.excluded:
            flags.append(f"teamwork {name}: reference count is 0, excluded")
        ape = cmp.ape
    else:
        row["teamwork_ape"] = float("nan")
        ape = {}
    return {"rounds": len(logs), "metrics": row, "teamwork_counts": counts, "teamwork_ape": ape, "flags": flags}


@dataclass
class EvalReport:
    label: str
    iterations: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    teamwork: dict = field(default_factory=dict)
    reference: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def to_dict(self):
        return {
            "label": self.label,
            "iteration_count": len(self.iterations),
            "summary": self.summary,
            "teamwork": self.teamwork,
            "reference": self.reference,
            "iterations": self.iterations,
            "warnings": self.warnings,
        }


def evaluate(iteration_logs, ref_logs, geometry, label="test", cadence_ticks=detectors.DEFAULT_CADENCE_TICKS, ref=None):
    """Compare each iteration's logs to the reference and summarize across iterations."""
    if not ref_logs and ref is None:
        raise ValueError("reference log set is empty")
    ref = ref or ReferenceStats.from_logs(ref_logs, geometry, cadence_ticks)
    report = EvalReport(label)
    if not ref.teamwork:
        report.warnings.append("map has no tactics configurations; teamwork section omitted")
    for logs in iteration_logs:
        report.iterations.append(evaluate_iteration(logs, ref, geometry, cadence_ticks))
    for name in METRICS:
        report.summary[name] = summarize([it["metrics"][name] for it in report.iterations])
    for cfg, ref_count in ref.teamwork.items():
        report.teamwork[cfg] = {
            "reference": ref_count,
            "count": summarize([float(it["teamwork_counts"].get(cfg, 0)) for it in report.iterations]),
            "ape": summarize([it["teamwork_ape"][cfg] for it in report.iterations if cfg in it["teamwork_ape"]]),
        }
    report.reference = {
        "rounds": ref.rounds,
        "rounds_high_ground": ref.mistakes["rounds_high_ground"],
        "rounds_abandon": ref.mistakes["rounds_abandon"],
    }
    if len(report.iterations) == 1:
        report.warnings.append("single iteration: IQR is 0 by construction (low confidence)")
    return report


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def write_report_json(path, reports):
    with open(path, "w") as f:
        json.dump(_json_safe([r.to_dict() for r in reports]), f, indent=1, sort_keys=True)
        f.write("\n")


def write_metrics_table(path, reports):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["config", "metric", "median", "iqr", "iterations", "low_confidence"])
        for r in reports:
            for name in METRICS:
                s = r.summary[name]
                w.writerow([r.label, name, repr(s["median"]), repr(s["iqr"]), s["iterations"], int(s["low_confidence"])])


def write_teamwork_table(path, reports):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["config", "tactic", "reference_rounds", "count_median", "ape_median", "ape_iqr"])
        for r in reports:
            for cfg, t in r.teamwork.items():
                w.writerow([r.label, cfg, t["reference"], repr(t["count"]["median"]), repr(t["ape"]["median"]), repr(t["ape"]["iqr"])])


def heatmap_pixels(masses):
    """Log-scaled 8-bit image of a count grid, top row = largest y."""
    m = np.log1p(np.asarray(masses, dtype=np.float64))
    top = m.max()
    img = np.zeros(m.shape, dtype=np.uint8) if top <= 0 else np.round(255.0 * m / top).astype(np.uint8)
    return img[::-1]


def write_pgm(path, masses):
    img = heatmap_pixels(masses)
    rows, cols = img.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        f.write(img.tobytes())


def write_grid_csv(path, masses):
    np.savetxt(path, np.asarray(masses), delimiter=",", fmt="%.17g")


def write_heatmaps(directory, label, logs, geometry):
    """Occupancy per team plus kill locations, each as PGM and CSV."""
    os.makedirs(directory, exist_ok=True)
    grids = {f"occupancy_{t}": metrics.occupancy(logs, geometry, t).masses for t in (OFFENSE, DEFENSE)}
    grids["kill_locations"] = metrics.kill_locations(logs, geometry).masses
    written = []
    for name, masses in grids.items():
        stem = os.path.join(directory, f"{label}_{name}")
        write_pgm(stem + ".pgm", masses)
        write_grid_csv(stem + ".csv", masses)
        written += [stem + ".pgm", stem + ".csv"]
    return written
