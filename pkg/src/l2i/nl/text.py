"""Template descriptions of motion programs, paraphrasing and parsing.

Every sentence kind has a bank of skeletons; index 0 is the canonical
wording. A skeleton doubles as a grammar rule: its slots become regex
groups, so any bank wording parses back to the same slot values.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from ..errors import DescriptionError
from ..motion import ChangeLane, Cruise, MotionProgram, StartPose, Stop

FORMAT = "l2i-nl/1"
SNAP_TOL = 0.05

_NUM = r"\d+(?:\.\d+)?"
_SIGNED = r"-?\d+(?:\.\d+)?"
_LANE = r"r\d+_-?\d+"
SLOT_PATTERNS = {
    "obj": r"\d+",
    "x": _SIGNED, "y": _SIGNED,
    "d": _NUM, "v0": _NUM, "a": _NUM, "t": _NUM,
    "dir": r"left|right",
    "lane": _LANE,
    "route": rf"{_LANE}(?:, {_LANE})*",
}


@lru_cache(maxsize=1)
def bank():
    data = json.loads(resources.files("l2i.nl").joinpath("data/templates.json").read_text(encoding="utf-8"))
    if data.get("format") != FORMAT:
        raise DescriptionError(f"template bank has format {data.get('format')!r}, expected {FORMAT!r}")
    return data


def _compile(skeleton, classes):
    out, pos = [], 0
    for m in re.finditer(r"\{(\w+)\}", skeleton):
        out.append(re.escape(skeleton[pos:m.start()]))
        name = m.group(1)
        pat = "|".join(re.escape(c) for c in classes.values()) if name == "cls" else SLOT_PATTERNS[name]
        out.append(f"(?P<{name}>{pat})")
        pos = m.end()
    out.append(re.escape(skeleton[pos:]))
    return re.compile("".join(out))


@lru_cache(maxsize=1)
def _grammar():
    b = bank()
    rules = []
    for kind, skels in b["sentences"].items():
        for v, sk in enumerate(skels):
            rules.append((kind, v, _compile(sk, b["classes"])))
    leads = [re.compile(re.escape(lead).replace(re.escape("{body}"), "(?P<body>.+)")) for lead in b["summary"]["lead"]]
    return rules, leads


def fmt1(x) -> str:
    s = f"{float(x):.1f}"
    return "0.0" if s == "-0.0" else s


# ------------------------------------------------------------------ describe

@dataclass(frozen=True)
class Sentence:
    text: str
    object_index: int
    instruction_index: int | None  # None for the start sentence


@dataclass(frozen=True)
class Paragraph:
    object_index: int
    sentences: tuple

    @property
    def text(self):
        return " ".join(s.text for s in self.sentences)


@dataclass(frozen=True)
class DetailedDescription:
    paragraphs: tuple

    @property
    def text(self):
        return "\n\n".join(p.text for p in self.paragraphs)


def _render(kind, slots, variant=0):
    return bank()["sentences"][kind][variant].format(**slots)


def _instruction_sentence(ins, base):
    if isinstance(ins, Stop):
        if ins.permanent:
            return "stop_permanent", dict(base)
        return "stop_timed", dict(base, t=fmt1(ins.duration))
    dec = ins.accelerated_velocity < 0 and fmt1(-ins.accelerated_velocity) != "0.0"
    slots = dict(base, d=fmt1(ins.distance), v0=fmt1(ins.initial_velocity), a=fmt1(abs(ins.accelerated_velocity)))
    if isinstance(ins, ChangeLane):
        return ("change_dec" if dec else "change_acc"), dict(slots, dir=ins.direction)
    return ("cruise_dec" if dec else "cruise_acc"), slots


def describe_program(prog):
    classes = bank()["classes"]
    base = {"obj": str(prog.object_index), "cls": classes[prog.object_class]}
    route = prog.route or (prog.start.lane_id,)
    sents = [Sentence(_render("start", dict(base, x=fmt1(prog.start.x), y=fmt1(prog.start.y),
                                            lane=prog.start.lane_id, route=", ".join(route))),
                      prog.object_index, None)]
    for k, ins in enumerate(prog.instructions):
        kind, slots = _instruction_sentence(ins, base)
        sents.append(Sentence(_render(kind, slots), prog.object_index, k))
    return Paragraph(prog.object_index, tuple(sents))


def describe_detailed(programs, script=None) -> DetailedDescription:
    """One paragraph per object (ego first), one sentence per instruction."""
    progs = sorted(programs, key=lambda p: p.object_index)
    if script is not None:
        classes = {o.index: o.cls for o in script.objects}
        for p in progs:
            if classes.get(p.object_index, p.object_class) != p.object_class:
                raise DescriptionError(f"object {p.object_index} class disagrees with the script")
    return DetailedDescription(tuple(describe_program(p) for p in progs))


# ------------------------------------------------------------------- summary

@dataclass(frozen=True)
class Clause:
    obstacle: int
    cls: str
    type: str
    lanes_changed: int


@dataclass(frozen=True)
class InteractionSummary:
    goal: str
    goal_phrase: str
    lanes_changed: int
    clauses: tuple = ()

    @property
    def text(self):
        s = bank()["summary"]
        lanes = s["lanes"].get(str(self.lanes_changed), s["lanes"]["n"]).format(n=self.lanes_changed)
        parts = [self.goal_phrase, lanes]
        parts += [s["clauses"][c.type].format(cls=bank()["classes"][c.cls], obj=c.obstacle) for c in self.clauses]
        body = ", ".join(parts[:-1]) + ", and " + parts[-1]
        return s["lead"][0].format(body=body)


def summarize(script, gt_interactions=None, topology=None, ego_program=None) -> InteractionSummary:
    """Goal phrase plus one clause per ground-truth interaction."""
    if not script.obstacles:
        raise DescriptionError("scripts require at least one obstacle")
    gts = script.gt_interactions if gt_interactions is None else gt_interactions
    if ego_program is None:
        if topology is None:
            raise DescriptionError("summarize needs the topology or the compiled ego program")
        from ..compiler import compile_object
        ego = script.object(0)
        ego_program = compile_object(ego, script.trajectories[0], topology)
    changes = sum(isinstance(i, ChangeLane) for i in ego_program.instructions)
    clauses = tuple(Clause(g.obstacle, script.object(g.obstacle).cls, g.type, changes)
                    for g in sorted(gts, key=lambda g: g.obstacle))
    return InteractionSummary(script.goal, bank()["summary"]["goals"][script.goal], changes, clauses)


# ---------------------------------------------------------------- paraphrase

_SPLIT = re.compile(r"(?<=\.)\s+")


def split_sentences(text):
    return [s for s in _SPLIT.split(text.strip()) if s]


def _match(sentence):
    rules, leads = _grammar()
    for kind, v, rx in rules:
        m = rx.fullmatch(sentence)
        if m:
            return kind, v, m.groupdict()
    for v, rx in enumerate(leads):
        m = rx.fullmatch(sentence)
        if m:
            return "summary", v, m.groupdict()
    return None


def _variant_choices(seed, n_sentences):
    # sentence 0 uses variant `seed` directly; later sentences draw offsets
    rng = random.Random(seed)
    return [0] + [rng.randrange(1 << 16) for _ in range(n_sentences - 1)]


def paraphrase(text: str, seed: int) -> str:
    """Seeded rewording from the closed bank; seed 0 is the identity."""
    if seed == 0:
        return text
    b = bank()
    paras = text.strip().split("\n\n")
    total = sum(len(split_sentences(p)) for p in paras)
    offsets = iter(_variant_choices(seed, total))
    out = []
    for para in paras:
        sents = []
        for s in split_sentences(para):
            hit = _match(s)
            off = next(offsets)
            if hit is None:
                sents.append(s)
                continue
            kind, _, slots = hit
            if kind == "summary":
                leads = b["summary"]["lead"]
                sents.append(leads[(seed + off) % len(leads)].format(**slots))
            else:
                skels = b["sentences"][kind]
                sents.append(skels[(seed + off) % len(skels)].format(**slots))
        out.append(" ".join(sents))
    return "\n\n".join(out)


# --------------------------------------------------------------------- parse

@dataclass
class ParsedDescription:
    programs: list = field(default_factory=list)
    summary_only: bool = False
    summary: list = field(default_factory=list)

    @property
    def mode(self):
        return "summary-only" if self.summary_only else "detailed"


def _snap_accelerations(ins):
    """Recover exact accelerations from speed continuity when the text allows it."""
    out = list(ins)
    for k, cur in enumerate(out):
        if isinstance(cur, Stop):
            continue
        nxt = out[k + 1] if k + 1 < len(out) else None
        v1 = 0.0 if nxt is None or isinstance(nxt, Stop) else nxt.initial_velocity
        a = (v1 * v1 - cur.initial_velocity ** 2) / (2.0 * cur.distance)
        if abs(a - cur.accelerated_velocity) <= SNAP_TOL + 1e-9:
            if isinstance(cur, Cruise):
                out[k] = Cruise(cur.distance, cur.initial_velocity, a)
            else:
                out[k] = ChangeLane(cur.direction, cur.distance, cur.initial_velocity, a)
    return tuple(out)


def parse_description(text: str) -> ParsedDescription:
    """Recover motion programs from a (possibly paraphrased) description."""
    inverse = {v: k for k, v in bank()["classes"].items()}
    objs = {}
    order = []
    summary = []
    for i, s in enumerate(split_sentences(text)):
        hit = _match(s)
        if hit is None:
            raise DescriptionError(f"unrecognized sentence {s[:60]!r}", sentence=i)
        kind, _, g = hit
        if kind == "summary":
            summary.append(s)
            continue
        idx, cls = int(g["obj"]), inverse[g["cls"]]
        o = objs.get(idx)
        if kind == "start":
            if o is not None:
                raise DescriptionError(f"object {idx} has two start sentences", sentence=i)
            route = tuple(g["route"].split(", "))
            objs[idx] = o = {"cls": cls, "start": StartPose(float(g["x"]), float(g["y"]), g["lane"]),
                             "route": route, "ins": [], "closed": False}
            order.append(idx)
            continue
        if o is None:
            raise DescriptionError(f"object {idx} moves before its start sentence", sentence=i)
        if o["cls"] != cls:
            raise DescriptionError(f"object {idx} is called both {bank()['classes'][o['cls']]} and {g['cls']}",
                                   sentence=i)
        if o["closed"]:
            raise DescriptionError(f"object {idx} moves after its permanent stop", sentence=i)
        if kind == "stop_permanent":
            o["ins"].append(Stop(permanent=True))
            o["closed"] = True
        elif kind == "stop_timed":
            o["ins"].append(Stop(duration=float(g["t"])))
        else:
            a = float(g["a"]) * (-1.0 if kind.endswith("_dec") else 1.0)
            d, v0 = float(g["d"]), float(g["v0"])
            if d <= 0:
                raise DescriptionError(f"object {idx} has a non-positive distance", sentence=i)
            if kind.startswith("change"):
                o["ins"].append(ChangeLane(g["dir"], d, v0, a))
            else:
                o["ins"].append(Cruise(d, v0, a))
    progs = []
    for idx in sorted(order):
        ins = _snap_accelerations(objs[idx]["ins"])
        for k, x in enumerate(ins):
            if not isinstance(x, Stop) and x.initial_velocity + x.final_velocity <= 0:
                raise DescriptionError(f"object {idx}, instruction {k} never moves")
        progs.append(MotionProgram(idx, objs[idx]["cls"], objs[idx]["start"], ins, objs[idx]["route"]))
    return ParsedDescription(progs, summary_only=not progs and bool(summary), summary=summary)


def scene_text(programs, script, topology=None, ego_program=None) -> str:
    """Detailed paragraphs followed by the interaction summary."""
    desc = describe_detailed(programs, script)
    ego = ego_program or next((p for p in programs if p.object_index == 0), None)
    return desc.text + "\n\n" + summarize(script, topology=topology, ego_program=ego).text
