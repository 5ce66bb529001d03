"""Benchmark metrics, split protocols and reports."""

from .metrics import (DEFAULT_W, Discrepancy, Match, interaction_distance, match_interactions, path_length,
                      resample, success_counts, success_rate, trajectory_discrepancy)
from .report import EvalReport, SceneScore, aggregate, score_scene
from .splits import PROTOCOLS, SplitManifest, build_splits

__all__ = [
    "DEFAULT_W", "Discrepancy", "EvalReport", "Match", "PROTOCOLS", "SceneScore", "SplitManifest", "aggregate",
    "build_splits", "interaction_distance", "match_interactions", "path_length", "resample", "score_scene",
    "success_counts", "success_rate", "trajectory_discrepancy",
]
