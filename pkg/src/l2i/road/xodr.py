"""Reader/writer for the supported XODR subset ("l2i-xodr/1").

Supported: roads with line/arc plan views, one constant-width lane section
(uniform width per road, optional constant lane offset), road links, and
junction connection records. Anything else is rejected.
"""

from __future__ import annotations

import xml.parsers.expat
from dataclasses import dataclass, field
from xml.sax.saxutils import quoteattr

from ..errors import FormatVersionError, TopologyFileError, UnsupportedPrimitiveError
from .topology import Connection, Geometry, Junction, Road, RoadLink, realize

FORMAT = "l2i-xodr/1"
UNSUPPORTED_PRIMITIVES = {"spiral", "poly3", "paramPoly3"}

# allowed children per element
SCHEMA = {
    None: {"OpenDRIVE"},
    "OpenDRIVE": {"header", "road", "junction"},
    "header": set(),
    "road": {"link", "planView", "lanes"},
    "link": {"predecessor", "successor"},
    "predecessor": set(),
    "successor": set(),
    "planView": {"geometry"},
    "geometry": {"line", "arc"},
    "line": set(),
    "arc": set(),
    "lanes": {"laneOffset", "laneSection"},
    "laneOffset": set(),
    "laneSection": {"left", "center", "right"},
    "left": {"lane"},
    "center": {"lane"},
    "right": {"lane"},
    "lane": {"width"},
    "width": set(),
    "junction": {"connection"},
    "connection": {"laneLink"},
    "laneLink": set(),
}


@dataclass
class _Node:
    tag: str
    attrs: dict
    offset: int
    children: list = field(default_factory=list)

    def req(self, name, conv=str):
        if name not in self.attrs:
            raise TopologyFileError(f"<{self.tag}> missing attribute '{name}'", self.offset)
        try:
            return conv(self.attrs[name])
        except ValueError:
            raise TopologyFileError(f"<{self.tag}> bad value for '{name}': {self.attrs[name]!r}",
                                    self.offset) from None

    def kids(self, tag):
        return [c for c in self.children if c.tag == tag]


def _tree(data: bytes) -> _Node:
    parser = xml.parsers.expat.ParserCreate()
    root = _Node("", {}, 0)
    stack = [root]

    def start(tag, attrs):
        offset = parser.CurrentByteIndex
        parent = stack[-1].tag or None
        if tag in UNSUPPORTED_PRIMITIVES:
            raise UnsupportedPrimitiveError(f"unsupported: {tag}", offset)
        if tag not in SCHEMA.get(parent, set()):
            raise TopologyFileError(f"unknown element <{tag}> inside <{parent or 'document'}>", offset)
        node = _Node(tag, dict(attrs), offset)
        stack[-1].children.append(node)
        stack.append(node)

    def end(tag):
        stack.pop()

    def chars(text):
        if text.strip():
            raise TopologyFileError("unexpected text content", parser.CurrentByteIndex)

    parser.StartElementHandler = start
    parser.EndElementHandler = end
    parser.CharacterDataHandler = chars
    try:
        parser.Parse(data, True)
    except xml.parsers.expat.ExpatError as exc:
        raise TopologyFileError(f"malformed markup: {xml.parsers.expat.errors.messages[exc.code]}",
                                parser.ErrorByteIndex) from None
    if not root.children:
        raise TopologyFileError("empty document", 0)
    return root.children[0]


def _link(node):
    if node is None:
        return None
    return RoadLink(node.req("elementType"), node.req("elementId", int), node.attrs.get("contactPoint"))


def _parse_road(node) -> Road:
    rid = node.req("id", int)
    geoms = []
    pv = node.kids("planView")
    if len(pv) != 1:
        raise TopologyFileError(f"road {rid}: expected one <planView>", node.offset)
    for g in pv[0].kids("geometry"):
        if len(g.children) != 1:
            raise TopologyFileError("geometry needs exactly one primitive", g.offset)
        prim = g.children[0]
        curv = 0.0 if prim.tag == "line" else prim.req("curvature", float)
        if prim.tag == "arc" and curv == 0.0:
            raise TopologyFileError("arc with zero curvature", prim.offset)
        geoms.append(Geometry(g.req("s", float), g.req("x", float), g.req("y", float),
                              g.req("hdg", float), g.req("length", float), curv))
    if not geoms:
        raise TopologyFileError(f"road {rid}: empty planView", node.offset)
    lanes = node.kids("lanes")
    if len(lanes) != 1:
        raise TopologyFileError(f"road {rid}: expected one <lanes>", node.offset)
    offset = 0.0
    for lo in lanes[0].kids("laneOffset"):
        if any(float(lo.attrs.get(k, "0")) != 0.0 for k in ("b", "c", "d")):
            raise UnsupportedPrimitiveError("unsupported: non-constant laneOffset", lo.offset)
        offset = lo.req("a", float)
    sections = lanes[0].kids("laneSection")
    if len(sections) != 1:
        raise UnsupportedPrimitiveError("unsupported: multiple laneSection", lanes[0].offset)
    sec = sections[0]
    widths = set()
    counts = {}
    for side in ("left", "right"):
        ids = []
        for part in sec.kids(side):
            for ln in part.kids("lane"):
                ids.append(ln.req("id", int))
                ws = ln.kids("width")
                if len(ws) != 1:
                    raise UnsupportedPrimitiveError("unsupported: lane width records != 1", ln.offset)
                w = ws[0]
                if any(float(w.attrs.get(k, "0")) != 0.0 for k in ("b", "c", "d")):
                    raise UnsupportedPrimitiveError("unsupported: non-constant width", w.offset)
                widths.add(w.req("a", float))
        n = len(ids)
        expect = list(range(1, n + 1)) if side == "left" else [-k for k in range(1, n + 1)]
        if sorted(ids, key=abs) != expect:
            raise TopologyFileError(f"road {rid}: {side} lane ids must be consecutive", sec.offset)
        counts[side] = n
    if len(widths) != 1:
        raise UnsupportedPrimitiveError("unsupported: mixed lane widths on one road", sec.offset)
    links = node.kids("link")
    pred = succ = None
    if links:
        p = links[0].kids("predecessor")
        s = links[0].kids("successor")
        pred = _link(p[0]) if p else None
        succ = _link(s[0]) if s else None
    return Road(rid, tuple(geoms), widths.pop(), counts["right"], counts["left"], offset,
                int(node.attrs.get("junction", "-1")), pred, succ, node.attrs.get("name", ""))


def parse_topology_file(data: bytes):
    if isinstance(data, str):
        data = data.encode("utf-8")
    root = _tree(data)
    if root.tag != "OpenDRIVE":
        raise TopologyFileError("root element must be <OpenDRIVE>", root.offset)
    headers = root.kids("header")
    if len(headers) != 1:
        raise TopologyFileError("expected exactly one <header>", root.offset)
    h = headers[0]
    version = h.attrs.get("version")
    if version != FORMAT:
        raise FormatVersionError(f"topology file version {version!r}, expected {FORMAT!r}")
    params = dict(lane_count=h.req("laneCount", int), lane_width=h.req("laneWidth", float),
                  scale=h.req("scale", float), variant_seed=h.req("variantSeed", int))
    roads = [_parse_road(r) for r in root.kids("road")]
    junctions = []
    for j in root.kids("junction"):
        conns = []
        for c in j.kids("connection"):
            links = tuple((ll.req("from", int), ll.req("to", int)) for ll in c.kids("laneLink"))
            conns.append(Connection(c.req("id", int), c.req("incomingRoad", int),
                                    c.req("connectingRoad", int), c.req("contactPoint"), links))
        junctions.append(Junction(j.req("id", int), tuple(conns), j.attrs.get("name", "")))
    try:
        return realize(h.req("kind"), h.req("variant"), roads, junctions, params)
    except ValueError as exc:
        raise TopologyFileError(str(exc), root.offset) from None


def _f(x: float) -> str:
    return repr(float(x))


def emit_topology_file(topo) -> bytes:
    p = topo.params
    out = ['<?xml version="1.0" encoding="UTF-8"?>', "<OpenDRIVE>"]
    out.append(
        f'  <header version="{FORMAT}" kind={quoteattr(topo.kind)} variant={quoteattr(topo.variant_id)}'
        f' laneCount="{p["lane_count"]}" laneWidth="{_f(p["lane_width"])}" scale="{_f(p["scale"])}"'
        f' variantSeed="{p["variant_seed"]}"/>'
    )
    for r in topo.roads:
        out.append(f'  <road id="{r.id}" name={quoteattr(r.name)} length="{_f(r.length)}" junction="{r.junction}">')
        if r.predecessor or r.successor:
            out.append("    <link>")
            for tag, lk in (("predecessor", r.predecessor), ("successor", r.successor)):
                if lk:
                    cp = f' contactPoint="{lk.contact_point}"' if lk.contact_point else ""
                    out.append(f'      <{tag} elementType="{lk.element_type}" elementId="{lk.element_id}"{cp}/>')
            out.append("    </link>")
        out.append("    <planView>")
        for g in r.geometries:
            prim = "<line/>" if g.kind == "line" else f'<arc curvature="{_f(g.curvature)}"/>'
            out.append(f'      <geometry s="{_f(g.s)}" x="{_f(g.x)}" y="{_f(g.y)}" hdg="{_f(g.hdg)}"'
                       f' length="{_f(g.length)}">{prim}</geometry>')
        out.append("    </planView>")
        out.append("    <lanes>")
        if r.lane_offset:
            out.append(f'      <laneOffset s="0.0" a="{_f(r.lane_offset)}" b="0.0" c="0.0" d="0.0"/>')
        out.append('      <laneSection s="0.0">')
        width = f'<width sOffset="0.0" a="{_f(r.lane_width)}" b="0.0" c="0.0" d="0.0"/>'
        if r.n_left:
            out.append("        <left>")
            for k in range(r.n_left, 0, -1):
                out.append(f'          <lane id="{k}" type="driving">{width}</lane>')
            out.append("        </left>")
        out.append('        <center><lane id="0" type="none"/></center>')
        if r.n_right:
            out.append("        <right>")
            for k in range(1, r.n_right + 1):
                out.append(f'          <lane id="{-k}" type="driving">{width}</lane>')
            out.append("        </right>")
        out.append("      </laneSection>")
        out.append("    </lanes>")
        out.append("  </road>")
    for j in topo.junctions:
        out.append(f'  <junction id="{j.id}" name={quoteattr(j.name)}>')
        for c in j.connections:
            out.append(f'    <connection id="{c.id}" incomingRoad="{c.incoming}" connectingRoad="{c.connecting}"'
                       f' contactPoint="{c.contact_point}">')
            for a, b in c.lane_links:
                out.append(f'      <laneLink from="{a}" to="{b}"/>')
            out.append("    </connection>")
        out.append("  </junction>")
    out.append("</OpenDRIVE>")
    return ("\n".join(out) + "\n").encode("utf-8")
