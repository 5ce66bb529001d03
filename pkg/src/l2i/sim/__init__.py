"""Simulation of motion programs and the listeners that judge the result."""

from .footprint import corners, overlap
from .kinematics import DT_DEFAULT, Trajectory, simulate, time_grid
from .listeners import (InteractionEvent, SafetyEvent, check_collision, check_off_road, detect_interactions,
                        listen)
from .trajdump import dump_trajectories, load_trajectories

__all__ = [
    "DT_DEFAULT", "InteractionEvent", "SafetyEvent", "Trajectory", "check_collision", "check_off_road",
    "corners", "detect_interactions", "dump_trajectories", "listen", "load_trajectories", "overlap", "simulate",
    "time_grid",
]
