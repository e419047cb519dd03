"""Round logs to labeled training samples."""

from .curate import (
    HORIZON_STEPS,
    NO_LABEL,
    Coverage,
    CuratedRound,
    DatasetSplit,
    SampleSet,
    augment_positions,
    build_samples,
    curate,
    curate_paths,
    curate_round,
    split_rounds,
    split_samples,
)
from .features import BASE_WIDTH, NUM_SLOTS, FeatureTracker, infer_move_command, normalization, token_width
from .pack import PackError, load_dataset, read_manifest, read_pack, write_manifest, write_pack

__all__ = [
    "BASE_WIDTH", "Coverage", "CuratedRound", "DatasetSplit", "FeatureTracker", "HORIZON_STEPS", "NO_LABEL",
    "NUM_SLOTS", "PackError", "SampleSet", "augment_positions", "build_samples", "curate", "curate_paths",
    "curate_round", "infer_move_command", "load_dataset", "normalization", "read_manifest", "read_pack",
    "split_rounds", "split_samples", "token_width", "write_manifest", "write_pack",
]
