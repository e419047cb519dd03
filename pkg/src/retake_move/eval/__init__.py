"""Behavior-similarity metrics, detectors, and reports."""

from .detectors import (
    DEFAULT_CADENCE_TICKS,
    TeamworkComparison,
    detect_mistakes,
    detect_round_mistakes,
    detect_round_teamwork,
    tactics_configs,
    teamwork_ape,
    teamwork_counts,
)
from .emd import MAX_GRID, EMDError, Histogram1D, Histogram2D, downsample, emd1, emd2, transport_cost
from .metrics import kill_locations, lifetimes, occupancy, shots_per_kill, shots_per_kill_values
from .report import (
    METRICS,
    EvalReport,
    ReferenceStats,
    evaluate,
    evaluate_iteration,
    heatmap_pixels,
    summarize,
    write_heatmaps,
    write_metrics_table,
    write_pgm,
    write_report_json,
    write_teamwork_table,
)
