from .builders import KINDS, SCALE_BOUNDS, VARIANTS, build_topology, build_variant, builtin_refs
from .frenet import FrenetPose, from_frenet, to_frenet
from .topology import Geometry, Lane, Road, RoadTopology, check_invariants
from .xodr import emit_topology_file, parse_topology_file

__all__ = [
    "KINDS", "SCALE_BOUNDS", "VARIANTS", "build_topology", "build_variant", "builtin_refs",
    "FrenetPose", "from_frenet", "to_frenet", "Geometry", "Lane", "Road", "RoadTopology",
    "check_invariants", "emit_topology_file", "parse_topology_file",
]
