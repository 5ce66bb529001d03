"""Procedural generation of verified scenes and datasets."""

from .dataset import (DatasetManifest, PlanEntry, default_plan, generate_dataset, plan_from_json, scene_seed,
                      splitmix64)
from .generator import DEFAULT_RETRY_BUDGET, GenSpec, sample_scene, verify

__all__ = [
    "DEFAULT_RETRY_BUDGET", "DatasetManifest", "GenSpec", "PlanEntry", "default_plan", "generate_dataset",
    "plan_from_json", "sample_scene", "scene_seed", "splitmix64", "verify",
]
