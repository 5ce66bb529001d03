"""Per-scene scoring and the l2i-eval/1 report."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import FormatVersionError
from .metrics import DEFAULT_W, interaction_distance, success_counts, trajectory_discrepancy

FORMAT = "l2i-eval/1"


@dataclass
class SceneScore:
    scene_id: str
    T: float | None
    D: float | None
    matched: int
    successes: int
    gt_total: int
    R: float | None
    details: list = field(default_factory=list)


def score_scene(scene_id, gen_trajs, gen_events, gen_safety, gt_trajs, gt_interactions, W=DEFAULT_W,
                penalize_missing=True, with_T=True) -> SceneScore:
    details = []
    T = None
    if with_T:
        disc = trajectory_discrepancy(gen_trajs, gt_trajs, W, penalize_missing)
        T = disc.T
        details += [{"object": i, "kind": "missing", "penalized": penalize_missing} for i in disc.missing]
        details += [{"object": i, "kind": "extra"} for i in disc.extra]
    D, matched = interaction_distance(gen_events, gt_interactions)
    ok, total, matches = success_counts(gen_events, gt_interactions, gen_safety)
    for m in matches:
        rec = {"object": m.obstacle, "kind": "interaction", "type": m.type, "matched": m.matched, "voided": m.voided}
        if m.sq_error is not None:
            rec["sq_error"] = m.sq_error
        if m.reason:
            rec["reason"] = m.reason
        details.append(rec)
    for ev in gen_safety:
        if ev.kind in ("collision", "off_road"):
            details.append({"object": list(ev.objects), "kind": ev.kind, "t": ev.t})
    return SceneScore(scene_id, T, D, matched, ok, total, ok / total if total else None, details)


def aggregate(scores):
    Ts = [s.T for s in scores if s.T is not None]
    Ds = [s.D for s in scores if s.D is not None]
    Rs = [s.R for s in scores if s.R is not None]
    gt_total = sum(s.gt_total for s in scores)
    succ = sum(s.successes for s in scores)
    return {
        "scenes": len(scores),
        "T": float(np.mean(Ts)) if Ts else None,
        "D": float(np.mean(Ds)) if Ds else None,
        "matched": sum(s.matched for s in scores),
        "successes": succ,
        "gt_total": gt_total,
        "R": succ / gt_total if gt_total else None,
        "R_scene_mean": float(np.mean(Rs)) if Rs else None,
    }


@dataclass
class EvalReport:
    scenes: list
    config: dict = field(default_factory=dict)

    @property
    def aggregate(self):
        return aggregate(self.scenes)

    def to_json(self) -> str:
        doc = {"format": FORMAT, "config": self.config, "aggregate": self.aggregate,
               "scenes": [asdict(s) for s in sorted(self.scenes, key=lambda s: s.scene_id)]}
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        if doc.get("format") != FORMAT:
            raise FormatVersionError(f"expected {FORMAT}, found {doc.get('format')!r}")
        return cls([SceneScore(**s) for s in doc["scenes"]], doc.get("config", {}))

    def summary_table(self) -> str:
        agg = self.aggregate

        def f(x, spec=".4f"):
            return "n/a" if x is None else format(x, spec)
        lines = [f"{'scene':<28} {'T':>12} {'D':>12} {'R':>6}"]
        for s in sorted(self.scenes, key=lambda s: s.scene_id):
            lines.append(f"{s.scene_id:<28} {f(s.T):>12} {f(s.D):>12} {f(s.R, '.2f'):>6}")
        lines.append(f"{'aggregate':<28} {f(agg['T']):>12} {f(agg['D']):>12} {f(agg['R'], '.2f'):>6}")
        lines.append(f"interactions reproduced: {agg['successes']}/{agg['gt_total']}")
        return "\n".join(lines)
