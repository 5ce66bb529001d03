"""Motion program types: Cruise, ChangeLane and Stop instructions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class Cruise:
    distance: float
    initial_velocity: float
    accelerated_velocity: float
    direction: str = "forward"

    name = "Cruise"

    @property
    def final_velocity(self) -> float:
        return final_speed(self.initial_velocity, self.accelerated_velocity, self.distance)


@dataclass(frozen=True)
class ChangeLane:
    direction: str  # "left" or "right"
    distance: float
    initial_velocity: float
    accelerated_velocity: float

    name = "ChangeLane"

    @property
    def final_velocity(self) -> float:
        return final_speed(self.initial_velocity, self.accelerated_velocity, self.distance)


@dataclass(frozen=True)
class Stop:
    duration: float | None = None
    permanent: bool = False

    name = "Stop"

    @property
    def final_velocity(self) -> float:
        return 0.0


Instruction = Cruise | ChangeLane | Stop


@dataclass(frozen=True)
class StartPose:
    x: float
    y: float
    lane_id: str
    heading: float | None = None


@dataclass(frozen=True)
class MotionProgram:
    object_index: int
    object_class: str
    start: StartPose
    instructions: tuple = ()
    route: tuple[str, ...] = field(default=())


def final_speed(v0, a, d):
    sq = v0 * v0 + 2.0 * a * d
    return math.sqrt(sq) if sq > 0 else 0.0


def segment_duration(v0, a, d):
    """Time to cover d from v0 under constant acceleration a."""
    v1 = final_speed(v0, a, d)
    if v0 + v1 <= 0:
        return math.inf
    return 2.0 * d / (v0 + v1)


def instruction_duration(ins) -> float:
    if isinstance(ins, Stop):
        return 0.0 if ins.permanent else float(ins.duration)
    return segment_duration(ins.initial_velocity, ins.accelerated_velocity, ins.distance)


def program_end_time(prog: MotionProgram) -> float:
    return sum(instruction_duration(i) for i in prog.instructions)


def continuity_gaps(prog: MotionProgram):
    """Pairs (index, gap) where the next instruction's initial speed breaks continuity."""
    out = []
    prev = 0.0
    for k, ins in enumerate(prog.instructions):
        if not isinstance(ins, Stop):
            gap = abs(ins.initial_velocity - prev)
            if gap > 1e-9:
                out.append((k, gap))
        prev = ins.final_velocity
    return out


def _close(a, b, tol):
    if a is None or b is None:
        return a is b
    return abs(a - b) <= tol


def instructions_equal(a, b, tol=1e-6) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, Stop):
        return a.permanent == b.permanent and (a.permanent or _close(a.duration, b.duration, tol))
    return (a.direction == b.direction and _close(a.distance, b.distance, tol)
            and _close(a.initial_velocity, b.initial_velocity, tol)
            and _close(a.accelerated_velocity, b.accelerated_velocity, tol))


def programs_equal(a: MotionProgram, b: MotionProgram, tol=1e-6, check_route=True) -> bool:
    if (a.object_index, a.object_class, a.start.lane_id) != (b.object_index, b.object_class, b.start.lane_id):
        return False
    if not (_close(a.start.x, b.start.x, tol) and _close(a.start.y, b.start.y, tol)):
        return False
    if check_route and tuple(a.route) != tuple(b.route):
        return False
    if len(a.instructions) != len(b.instructions):
        return False
    return all(instructions_equal(x, y, tol) for x, y in zip(a.instructions, b.instructions))


def program_sets_equal(a, b, tol=1e-6, check_route=True) -> bool:
    if len(a) != len(b):
        return False
    a = sorted(a, key=lambda p: p.object_index)
    b = sorted(b, key=lambda p: p.object_index)
    return all(programs_equal(x, y, tol, check_route) for x, y in zip(a, b))
