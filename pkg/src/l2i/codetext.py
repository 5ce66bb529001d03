"""Planned-code text: a small Python-like rendering of motion programs.

    # l2i-code/1
    obj0 = Object(index=0, class="ego_car", at=(10.0, -1.75), lane="r0_-1", route=("r0_-1",))
    obj0.Cruise(direction="forward", distance=25.0, initial_velocity=0.0, accelerated_velocity=2.0)
    obj0.ChangeLane(direction="left", distance=30.0, initial_velocity=10.0, accelerated_velocity=0.0)
    obj0.Stop(permanent=true)
"""

from __future__ import annotations

import re

from .errors import CodeSemanticError, CodeSyntaxError, FormatVersionError
from .motion import ChangeLane, Cruise, MotionProgram, StartPose, Stop

FORMAT = "l2i-code/1"
FUNCTIONS = ("Cruise", "ChangeLane", "Stop")

_TOKEN = re.compile(r"""
    (?P<ws>[ \t]+)
  | (?P<comment>\#.*)
  | (?P<number>-?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?)
  | (?P<string>"[^"\\]*")
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[=(),.])
""", re.VERBOSE)


def _fmt(x) -> str:
    x = float(x)
    if x == 0:
        x = 0.0
    return repr(x)


def _emit_ins(name, ins):
    if isinstance(ins, Cruise):
        return (f'{name}.Cruise(direction="forward", distance={_fmt(ins.distance)}, '
                f"initial_velocity={_fmt(ins.initial_velocity)}, "
                f"accelerated_velocity={_fmt(ins.accelerated_velocity)})")
    if isinstance(ins, ChangeLane):
        return (f'{name}.ChangeLane(direction="{ins.direction}", distance={_fmt(ins.distance)}, '
                f"initial_velocity={_fmt(ins.initial_velocity)}, accelerated_velocity={_fmt(ins.accelerated_velocity)})")
    if ins.permanent:
        return f"{name}.Stop(permanent=true)"
    return f"{name}.Stop(duration={_fmt(ins.duration)})"


def emit_code(programs) -> str:
    lines = [f"# {FORMAT}"]
    for p in sorted(programs, key=lambda p: p.object_index):
        name = f"obj{p.object_index}"
        route = ", ".join(f'"{r}"' for r in p.route) + ("," if len(p.route) == 1 else "")
        head = (f'{name} = Object(index={p.object_index}, class="{p.object_class}", '
                f'at=({_fmt(p.start.x)}, {_fmt(p.start.y)}), lane="{p.start.lane_id}"')
        if p.route:
            head += f", route=({route})"
        lines.append(head + ")")
        lines.extend(_emit_ins(name, ins) for ins in p.instructions)
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------ parsing

class _Line:
    def __init__(self, text, lineno):
        self.lineno = lineno
        self.toks = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m:
                raise CodeSyntaxError(f"unexpected character {text[pos]!r}", lineno, pos + 1)
            kind = m.lastgroup
            if kind not in ("ws", "comment"):
                self.toks.append((kind, m.group(), pos + 1))
            pos = m.end()
        self.toks.append(("end", "", len(text) + 1))
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, kind=None, value=None, what=None):
        tok = self.toks[self.i]
        if (kind and tok[0] != kind) or (value is not None and tok[1] != value):
            want = what or (repr(value) if value is not None else kind)
            got = tok[1] if tok[0] != "end" else "end of line"
            raise CodeSyntaxError(f"expected {want}, found {got!r}", self.lineno, tok[2])
        self.i += 1
        return tok

    def value(self):
        kind, text, col = self.peek()
        if kind == "number":
            self.i += 1
            return float(text), col
        if kind == "string":
            self.i += 1
            return text[1:-1], col
        if kind == "name" and text in ("true", "false", "True", "False"):
            self.i += 1
            return text in ("true", "True"), col
        if kind == "op" and text == "(":
            self.i += 1
            items = []
            while self.peek()[1] != ")":
                items.append(self.value()[0])
                if self.peek()[1] == ",":
                    self.i += 1
                else:
                    break
            self.take("op", ")")
            return tuple(items), col
        raise CodeSyntaxError(f"expected a value, found {text or 'end of line'!r}", self.lineno, col)

    def kwargs(self):
        self.take("op", "(")
        out = {}
        while self.peek()[1] != ")":
            _, key, col = self.take("name", what="argument name")
            self.take("op", "=")
            if key in out:
                raise CodeSyntaxError(f"duplicate argument '{key}'", self.lineno, col)
            out[key] = self.value()
            if self.peek()[1] == ",":
                self.i += 1
            else:
                break
        self.take("op", ")")
        self.take("end", what="end of line")
        return out


_SIGS = {
    "Cruise": ({"distance", "initial_velocity", "accelerated_velocity"}, {"direction"}),
    "ChangeLane": ({"direction", "distance", "initial_velocity", "accelerated_velocity"}, set()),
    "Stop": (set(), {"duration", "permanent"}),
    "Object": ({"index", "class", "at", "lane"}, {"route", "heading"}),
}


def _check_args(fn, args, line):
    req, opt = _SIGS[fn]
    for k, (_, col) in args.items():
        if k not in req | opt:
            raise CodeSyntaxError(f"unknown argument '{k}' for {fn}", line.lineno, col)
    missing = sorted(req - set(args))
    if missing:
        raise CodeSyntaxError(f"{fn} is missing argument '{missing[0]}'", line.lineno, line.peek()[2])
    return {k: v for k, (v, _) in args.items()}


def _num_arg(a, key, fn, line):
    v = a[key]
    if isinstance(v, bool) or not isinstance(v, float):
        raise CodeSyntaxError(f"{fn} argument '{key}' must be a number", line.lineno, 1)
    return v


def _instruction(fn, a, line, where):
    """Build an instruction and apply semantic checks."""
    if fn == "Stop":
        perm = a.get("permanent", False)
        dur = a.get("duration")
        if not isinstance(perm, bool):
            raise CodeSyntaxError("Stop argument 'permanent' must be true or false", line.lineno, 1)
        if dur is not None:
            dur = _num_arg(a, "duration", fn, line)
        if perm == (dur is not None):
            raise CodeSemanticError("Stop needs exactly one of duration>0 or permanent=true", line.lineno, where)
        if dur is not None and dur <= 0:
            raise CodeSemanticError("Stop duration must be positive", line.lineno, where)
        return Stop(duration=dur, permanent=perm)
    d = _num_arg(a, "distance", fn, line)
    v0 = _num_arg(a, "initial_velocity", fn, line)
    acc = _num_arg(a, "accelerated_velocity", fn, line)
    if d <= 0:
        raise CodeSemanticError(f"{fn} distance must be positive", line.lineno, where)
    if v0 < 0:
        raise CodeSemanticError(f"{fn} initial_velocity must be non-negative", line.lineno, where)
    sq = v0 * v0 + 2 * acc * d
    if sq < -1e-9:
        raise CodeSemanticError(f"{fn} would drive the speed negative", line.lineno, where)
    if v0 + max(sq, 0.0) ** 0.5 <= 0:
        raise CodeSemanticError(f"{fn} never moves (zero speed throughout)", line.lineno, where)
    if fn == "Cruise":
        direction = a.get("direction", "forward")
        if direction != "forward":
            raise CodeSemanticError("Cruise direction must be 'forward'", line.lineno, where)
        return Cruise(d, v0, acc)
    if a["direction"] not in ("left", "right"):
        raise CodeSemanticError("ChangeLane direction must be 'left' or 'right'", line.lineno, where)
    return ChangeLane(a["direction"], d, v0, acc)


def parse_code(text: str):
    """Parse planned-code text into MotionPrograms (ordered by index)."""
    lines = text.splitlines()
    first = next((ln.strip() for ln in lines if ln.strip()), "")
    if first != f"# {FORMAT}":
        raise FormatVersionError(f"expected header '# {FORMAT}', found {first[:40]!r}")
    objs = {}
    order = []
    for lineno, raw in enumerate(lines, start=1):
        line = _Line(raw, lineno)
        if line.peek()[0] == "end":
            continue
        _, name, col = line.take("name", what="object name")
        if line.peek()[1] == "=":
            line.take("op", "=")
            _, fn, fcol = line.take("name", what="Object")
            if fn != "Object":
                raise CodeSyntaxError(f"unknown function '{fn}'", lineno, fcol)
            a = _check_args("Object", line.kwargs(), line)
            idx = a["index"]
            if isinstance(idx, bool) or not isinstance(idx, float) or idx != int(idx) or idx < 0:
                raise CodeSyntaxError("Object index must be a non-negative integer", lineno, col)
            idx = int(idx)
            if name != f"obj{idx}":
                raise CodeSemanticError(f"object variable '{name}' does not match index {idx}", lineno)
            if name in objs:
                raise CodeSemanticError(f"object '{name}' declared twice", lineno)
            at = a["at"]
            if not (isinstance(at, tuple) and len(at) == 2 and all(isinstance(c, float) for c in at)):
                raise CodeSyntaxError("Object 'at' must be a pair of numbers", lineno, col)
            route = a.get("route", ())
            if not isinstance(route, tuple) or not all(isinstance(r, str) for r in route):
                raise CodeSyntaxError("Object 'route' must be a tuple of lane ids", lineno, col)
            heading = a.get("heading")
            objs[name] = {"index": idx, "class": a["class"], "start": StartPose(at[0], at[1], a["lane"], heading),
                          "route": route, "ins": [], "closed": False}
            order.append(name)
            continue
        if name not in objs:
            raise CodeSemanticError(f"'{name}' is used before its Object declaration", lineno)
        line.take("op", ".")
        _, fn, fcol = line.take("name", what="function name")
        if fn not in FUNCTIONS:
            raise CodeSyntaxError(f"unknown function '{fn}'", lineno, fcol)
        o = objs[name]
        where = len(o["ins"])
        if o["closed"]:
            raise CodeSemanticError(f"instruction after a permanent Stop for {name}", lineno, where)
        ins = _instruction(fn, _check_args(fn, line.kwargs(), line), line, where)
        o["ins"].append(ins)
        o["closed"] = isinstance(ins, Stop) and ins.permanent
    return [MotionProgram(o["index"], o["class"], o["start"], tuple(o["ins"]), tuple(o["route"]))
            for o in sorted((objs[n] for n in order), key=lambda o: o["index"])]
