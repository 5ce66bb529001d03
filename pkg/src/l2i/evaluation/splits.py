"""Benchmark split protocols over a dataset manifest."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

from ..errors import FormatVersionError, SplitShortfallError

FORMAT = "l2i-split/1"
PROTOCOLS = ("motion_translation", "obstacle_count", "topology_generalization")
INTERACTION_TYPES = ("bypass", "overtake", "yield")


@dataclass
class SplitManifest:
    protocol: str
    parameters: dict
    train: list
    test: list
    counts: dict = field(default_factory=dict)

    def to_json(self) -> str:
        doc = {"format": FORMAT, "protocol": self.protocol, "parameters": self.parameters,
               "counts": self.counts, "train": self.train, "test": self.test}
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        if doc.get("format") != FORMAT:
            raise FormatVersionError(f"expected {FORMAT}, found {doc.get('format')!r}")
        return cls(doc["protocol"], doc["parameters"], doc["train"], doc["test"], doc.get("counts", {}))


def _type_counts(scenes, ids):
    want = set(ids)
    out = {t: 0 for t in INTERACTION_TYPES}
    for s in scenes:
        if s["id"] in want:
            for t in set(s["types"]):
                out[t] += 1
    return out


def _motion(scenes, seed):
    if len(scenes) < 2:
        raise SplitShortfallError("motion_translation needs at least two scenes")
    order = sorted(scenes, key=lambda s: s["id"])
    random.Random(seed).shuffle(order)
    # greedy stratification: keep every type, and the halves, balanced
    half = len(order) // 2
    train, test = [], []
    tc = {t: 0 for t in INTERACTION_TYPES}
    sc = {t: 0 for t in INTERACTION_TYPES}
    for s in sorted(order, key=lambda s: -len(set(s["types"]))):
        types = set(s["types"])
        if len(train) >= len(order) - half:
            side = "test"
        elif len(test) >= half:
            side = "train"
        else:
            gain = sum(tc[t] - sc[t] for t in types)
            side = "test" if gain > 0 or (gain == 0 and len(train) > len(test)) else "train"
        if side == "train":
            train.append(s["id"])
            for t in types:
                tc[t] += 1
        else:
            test.append(s["id"])
            for t in types:
                sc[t] += 1
    return sorted(train), sorted(test)


def _obstacle_count(scenes, k):
    if k not in (1, 2, 3, 4):
        raise SplitShortfallError(f"obstacle_count needs k in 1..4, got {k}")
    train = sorted(s["id"] for s in scenes if s["obstacle_count"] <= k)
    test = sorted(s["id"] for s in scenes if s["obstacle_count"] > k)
    if not train or not test:
        raise SplitShortfallError(f"obstacle_count k={k}: dataset lacks scenes on one side of the threshold")
    return train, test


def _topology(scenes):
    base = sorted(s["id"] for s in scenes if not s.get("doubled"))
    doubled = sorted(s["id"] for s in scenes if s.get("doubled"))
    if not base or not doubled:
        raise SplitShortfallError("topology_generalization needs both base-lane and doubled-lane variants")
    return base, doubled


def build_splits(scenes, protocol, params=None, seed=0) -> SplitManifest:
    """Deterministic train/test partition of manifest scene records."""
    params = dict(params or {})
    if protocol == "motion_translation":
        train, test = _motion(scenes, seed)
        params.setdefault("seed", seed)
    elif protocol == "obstacle_count":
        train, test = _obstacle_count(scenes, int(params.setdefault("k", 1)))
    elif protocol == "topology_generalization":
        train, test = _topology(scenes)
    else:
        raise SplitShortfallError(f"unknown protocol {protocol!r}; expected one of {', '.join(PROTOCOLS)}")
    counts = {"train": len(train), "test": len(test),
              "train_types": _type_counts(scenes, train), "test_types": _type_counts(scenes, test)}
    return SplitManifest(protocol, params, train, test, counts)
