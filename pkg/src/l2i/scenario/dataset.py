"""Balanced dataset plans, parallel generation and the l2i-manifest/1 file."""

from __future__ import annotations

import json
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from ..errors import FormatVersionError, InfeasibleSceneError
from ..road import KINDS, VARIANTS, build_variant
from ..script import save_script
from .generator import DEFAULT_RETRY_BUDGET, GenSpec, sample_scene

FORMAT = "l2i-manifest/1"
MASK64 = (1 << 64) - 1
DEFAULT_COUNTS = (1, 2, 3, 4, 5)
DEFAULT_SEEDS_PER_BUCKET = 20


def splitmix64(x: int) -> int:
    """One step of the SplitMix64 generator (Steele, Lea and Flood)."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def scene_seed(plan_seed: int, bucket: str, k: int) -> int:
    """Per-scene seed: plan seed, then the bucket key's CRC-32, then the index, each folded through splitmix64."""
    s = splitmix64(plan_seed & MASK64)
    s = splitmix64(s ^ zlib.crc32(bucket.encode()))
    return splitmix64(s ^ k)


def bucket_key(kind, variant, count):
    return f"{kind}/{variant}/n{count}"


@dataclass(frozen=True)
class PlanEntry:
    scene_id: str
    spec: GenSpec


def default_plan(seeds_per_bucket=DEFAULT_SEEDS_PER_BUCKET, plan_seed=0, kinds=KINDS, variants=("a", "b"),
                 counts=DEFAULT_COUNTS, retry_budget=DEFAULT_RETRY_BUDGET, targets=None):
    """Topology x variant x obstacle-count buckets with equal scene counts."""
    out = []
    for kind in kinds:
        for variant in variants:
            for n in counts:
                key = bucket_key(kind, variant, n)
                for k in range(seeds_per_bucket):
                    spec = GenSpec(kind, variant, n, scene_seed(plan_seed, key, k), targets, retry_budget)
                    out.append(PlanEntry(f"{kind}-{variant}-n{n}-{k:03d}", spec))
    return out


def plan_from_json(doc):
    """Plan document: {"seed": int, "buckets": [{"kind", "variant", "obstacle_count", "scenes", ...}]}."""
    seed = int(doc.get("seed", 0))
    out = []
    for b in doc["buckets"]:
        kind, variant, n = b["kind"], b["variant"], int(b["obstacle_count"])
        targets = tuple(b["targets"]) if b.get("targets") else None
        budget = int(b.get("retry_budget", DEFAULT_RETRY_BUDGET))
        key = bucket_key(kind, variant, n)
        for k in range(int(b["scenes"])):
            out.append(PlanEntry(f"{kind}-{variant}-n{n}-{k:03d}",
                                 GenSpec(kind, variant, n, scene_seed(seed, key, k), targets, budget)))
    return out


@dataclass
class DatasetManifest:
    buckets: list
    scenes: list
    shortfalls: list = field(default_factory=list)

    @property
    def status(self):
        return "partial" if self.shortfalls else "complete"

    def to_json(self) -> str:
        doc = {"format": FORMAT, "status": self.status, "buckets": self.buckets, "scenes": self.scenes,
               "shortfalls": self.shortfalls}
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        if doc.get("format") != FORMAT:
            raise FormatVersionError(f"expected {FORMAT}, found {doc.get('format')!r}")
        return cls(doc["buckets"], doc["scenes"], doc.get("shortfalls", []))


_TOPOS = {}


def _topology(kind, variant):
    key = (kind, variant)
    if key not in _TOPOS:
        _TOPOS[key] = build_variant(kind, variant)
    return _TOPOS[key]


def _run(entry: PlanEntry):
    spec = entry.spec
    try:
        script = sample_scene(spec, _topology(spec.kind, spec.variant))
    except InfeasibleSceneError as exc:
        return entry, None, [str(exc)] + list(exc.reasons)
    return entry, save_script(script), script


def _doubled(kind, lane_count):
    return lane_count > VARIANTS[kind]["a"]["lane_count"]


def generate_dataset(plan, out_dir, jobs=1) -> DatasetManifest:
    """Sample every plan entry and write scenes/<id>.json plus manifest.json.

    Scenes are sampled concurrently when jobs > 1; results are collected
    in plan order, so the output tree does not depend on scheduling.
    """
    os.makedirs(os.path.join(out_dir, "scenes"), exist_ok=True)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run, plan, chunksize=4))
    else:
        results = [_run(e) for e in plan]
    buckets = {}
    scenes, shortfalls = [], []
    for entry, data, extra in results:
        spec = entry.spec
        key = bucket_key(spec.kind, spec.variant, spec.obstacle_count)
        b = buckets.setdefault(key, {"kind": spec.kind, "variant": spec.variant,
                                     "obstacle_count": spec.obstacle_count, "requested": 0, "generated": 0})
        b["requested"] += 1
        if data is None:
            shortfalls.append({"bucket": key, "scene": entry.scene_id, "seed": spec.seed, "reasons": extra})
            continue
        b["generated"] += 1
        rel = f"scenes/{entry.scene_id}.json"
        with open(os.path.join(out_dir, rel), "wb") as fh:
            fh.write(data)
        lane_count = _topology(spec.kind, spec.variant).lane_count
        scenes.append({"id": entry.scene_id, "file": rel, "kind": spec.kind, "variant": spec.variant,
                       "lane_count": lane_count, "doubled": _doubled(spec.kind, lane_count),
                       "obstacle_count": spec.obstacle_count, "goal": extra.goal,
                       "types": [g.type for g in extra.gt_interactions], "seed": spec.seed})
    table = []
    for key, b in buckets.items():
        table.append(dict(b, bucket=key, shortfall=b["requested"] - b["generated"]))
    manifest = DatasetManifest(table, scenes, shortfalls)
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        fh.write(manifest.to_json())
    return manifest
