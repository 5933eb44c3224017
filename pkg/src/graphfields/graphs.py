"""Graphs with Euclidean edges: representation, validation, discretization, edge splitting.

A graph here is a finite simple connected graph whose edges carry a positive
length and an arclength parameterization.  Points live either on a vertex or
in the open interior of an edge, addressed by the fraction ``t`` of arclength
from the edge's source vertex.  All metric structure comes from the declared
edge lengths; planar coordinates are display metadata only, which is what
makes bridges and tunnels representable.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Iterable, Union

from .errors import GraphFormatError, GraphValidationError, PointError

__all__ = [
    "Vertex",
    "Edge",
    "MetricGraph",
    "VertexPoint",
    "EdgePoint",
    "PointRef",
    "PointSet",
    "ValidationReport",
    "validate_graph",
    "canonical_point",
    "discretize",
    "split_edge",
    "EdgeSplit",
    "load_graph",
    "parse_graph_json",
    "parse_graph_csv",
    "write_graph_json",
    "write_graph_csv",
    "load_points",
    "parse_points_csv",
    "write_points_csv",
    "point_id",
]


@dataclass(frozen=True)
class Vertex:
    id: str
    x: float | None = None
    y: float | None = None


@dataclass(frozen=True)
class Edge:
    id: str
    source: str
    target: str
    length: float
    geometry: tuple[tuple[float, float], ...] | None = None


@dataclass(frozen=True)
class VertexPoint:
    vertex: str


@dataclass(frozen=True)
class EdgePoint:
    edge: str
    t: float


PointRef = Union[VertexPoint, EdgePoint]


def point_id(ref: PointRef) -> str:
    """Stable string id of a canonical point reference."""
    if isinstance(ref, VertexPoint):
        return f"v:{ref.vertex}"
    return f"e:{ref.edge}:{ref.t!r}"


class MetricGraph:
    """Immutable vertex/edge container with an adjacency index.

    Construction enforces referential integrity only (unique ids, known
    endpoints); the simple/connected/positive-length requirements are checked
    by :func:`validate_graph` so that violations can be reported as data.
    """

    __slots__ = ("_vertices", "_edges", "_adjacency", "vertex_ids", "edge_ids")

    def __init__(self, vertices: Iterable[Vertex], edges: Iterable[Edge]):
        vmap: dict[str, Vertex] = {}
        for v in vertices:
            if v.id in vmap:
                raise GraphFormatError(f"duplicate vertex id {v.id!r}")
            vmap[v.id] = v
        emap: dict[str, Edge] = {}
        adjacency: dict[str, list[str]] = {vid: [] for vid in vmap}
        for e in edges:
            if e.id in emap:
                raise GraphFormatError(f"duplicate edge id {e.id!r}")
            for endpoint in (e.source, e.target):
                if endpoint not in vmap:
                    raise GraphFormatError(f"edge {e.id!r} references unknown vertex {endpoint!r}")
            emap[e.id] = e
            adjacency[e.source].append(e.id)
            if e.target != e.source:
                adjacency[e.target].append(e.id)
        self._vertices = vmap
        self._edges = emap
        self._adjacency = {vid: tuple(sorted(eids)) for vid, eids in adjacency.items()}
        self.vertex_ids = tuple(sorted(vmap))
        self.edge_ids = tuple(sorted(emap))

    @property
    def n_vertices(self) -> int:
        return len(self._vertices)

    @property
    def n_edges(self) -> int:
        return len(self._edges)

    def vertex(self, vid: str) -> Vertex:
        try:
            return self._vertices[vid]
        except KeyError:
            raise PointError(f"unknown vertex {vid!r}") from None

    def edge(self, eid: str) -> Edge:
        try:
            return self._edges[eid]
        except KeyError:
            raise PointError(f"unknown edge {eid!r}") from None

    def has_vertex(self, vid: str) -> bool:
        return vid in self._vertices

    def has_edge(self, eid: str) -> bool:
        return eid in self._edges

    def incident_edges(self, vid: str) -> tuple[str, ...]:
        return self._adjacency[vid]

    def vertices(self) -> tuple[Vertex, ...]:
        return tuple(self._vertices[vid] for vid in self.vertex_ids)

    def edges(self) -> tuple[Edge, ...]:
        return tuple(self._edges[eid] for eid in self.edge_ids)

    def total_length(self) -> float:
        return math.fsum(e.length for e in self._edges.values())

    def __eq__(self, other) -> bool:
        if not isinstance(other, MetricGraph):
            return NotImplemented
        return self._vertices == other._vertices and self._edges == other._edges

    def __hash__(self):
        return hash((self.vertex_ids, self.edge_ids))

    def __repr__(self):
        return f"MetricGraph(n_vertices={self.n_vertices}, n_edges={self.n_edges})"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self):
        return "ok" if self.ok else "; ".join(self.violations)


def validate_graph(g: MetricGraph) -> ValidationReport:
    """Check the simple/connected/positive-length requirements.

    Violations are returned, not raised; an empty report means the graph is a
    valid simulation domain.
    """
    violations: list[str] = []
    if g.n_vertices == 0:
        return ValidationReport(("empty graph",))
    seen_pairs: dict[tuple[str, str], str] = {}
    for e in g.edges():
        if not (e.length > 0) or math.isnan(e.length) or math.isinf(e.length):
            violations.append(f"nonpositive edge length: edge {e.id!r} has length {e.length!r}")
        if e.source == e.target:
            violations.append(
                f"self-loop: edge {e.id!r} joins {e.source!r} to itself"
                " (split the edge to make the graph simple)"
            )
            continue
        pair = (min(e.source, e.target), max(e.source, e.target))
        if pair in seen_pairs:
            violations.append(
                f"duplicate edge: {e.id!r} repeats vertex pair {pair} of {seen_pairs[pair]!r}"
                " (split the edge to make the graph simple)"
            )
        else:
            seen_pairs[pair] = e.id
    # connectivity by breadth-first search over the undirected edge set
    start = g.vertex_ids[0]
    seen = {start}
    frontier = [start]
    while frontier:
        vid = frontier.pop()
        for eid in g.incident_edges(vid):
            e = g.edge(eid)
            other = e.target if e.source == vid else e.source
            if other not in seen:
                seen.add(other)
                frontier.append(other)
    if len(seen) != g.n_vertices:
        missing = sorted(set(g.vertex_ids) - seen)
        violations.append(f"disconnected: {len(missing)} vertices unreachable from {start!r} (e.g. {missing[0]!r})")
    return ValidationReport(tuple(violations))


def canonical_point(g: MetricGraph, ref: PointRef) -> PointRef:
    """Rewrite a point reference into canonical form.

    Edge positions with t=0 or t=1 become the corresponding vertex; interior
    positions keep 0 < t < 1.
    """
    if isinstance(ref, VertexPoint):
        g.vertex(ref.vertex)
        return ref
    if isinstance(ref, EdgePoint):
        e = g.edge(ref.edge)
        t = ref.t
        if not (0.0 <= t <= 1.0) or math.isnan(t):
            raise PointError(f"edge position t={t!r} outside [0, 1] on edge {ref.edge!r}")
        if t == 0.0:
            return VertexPoint(e.source)
        if t == 1.0:
            return VertexPoint(e.target)
        return ref
    raise PointError(f"not a point reference: {ref!r}")


class PointSet:
    """Canonically ordered simulation points.

    Vertex points come first (sorted by vertex id), followed by per-edge
    groups (edges sorted by id) with strictly increasing ``t`` inside each
    group.  The within-edge ordering is what the sequential bridge sampler
    relies on.  Instances are immutable and contain no duplicates.
    """

    __slots__ = ("points", "n_vertex_points")

    def __init__(self, points: tuple[PointRef, ...], n_vertex_points: int):
        self.points = points
        self.n_vertex_points = n_vertex_points

    @classmethod
    def from_refs(cls, g: MetricGraph, refs: Iterable[PointRef]) -> "PointSet":
        canon = [canonical_point(g, r) for r in refs]
        seen = set()
        for r in canon:
            if r in seen:
                raise PointError(f"duplicate point {point_id(r)}")
            seen.add(r)

        def key(r: PointRef):
            if isinstance(r, VertexPoint):
                return (0, r.vertex, 0.0)
            return (1, r.edge, r.t)

        canon.sort(key=key)
        nv = sum(1 for r in canon if isinstance(r, VertexPoint))
        return cls(tuple(canon), nv)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    def __eq__(self, other):
        if not isinstance(other, PointSet):
            return NotImplemented
        return self.points == other.points

    def __hash__(self):
        return hash(self.points)

    def ids(self) -> tuple[str, ...]:
        return tuple(point_id(r) for r in self.points)

    def __repr__(self):
        return f"PointSet(n={len(self.points)}, n_vertex_points={self.n_vertex_points})"


def discretize(g: MetricGraph, points_per_edge: int, include_vertices: bool = False) -> PointSet:
    """Equispaced interior points t = j/(k+1), j=1..k on every edge.

    With ``include_vertices`` all graph vertices are prepended, giving
    ``n_edges * k + n_vertices`` points in total.
    """
    if points_per_edge < 1:
        raise PointError(f"points_per_edge must be >= 1, got {points_per_edge}")
    k = int(points_per_edge)
    pts: list[PointRef] = []
    if include_vertices:
        pts.extend(VertexPoint(vid) for vid in g.vertex_ids)
    nv = len(pts)
    step = 1.0 / (k + 1)
    for eid in g.edge_ids:
        pts.extend(EdgePoint(eid, j * step) for j in range(1, k + 1))
    return PointSet(tuple(pts), nv)


class EdgeSplit:
    """Remapping of point references after :func:`split_edge`.

    Callable on a single reference; ``apply`` remaps a whole point set onto
    the new graph.  Arclength positions are preserved.
    """

    def __init__(self, graph: MetricGraph, old_edge: str, t_split: float,
                 new_vertex: str, first_edge: str, second_edge: str):
        self.graph = graph
        self.old_edge = old_edge
        self.t_split = t_split
        self.new_vertex = new_vertex
        self.first_edge = first_edge
        self.second_edge = second_edge

    def __call__(self, ref: PointRef) -> PointRef:
        if isinstance(ref, VertexPoint):
            return ref
        if ref.edge != self.old_edge:
            return ref
        t = ref.t
        if t == self.t_split:
            return VertexPoint(self.new_vertex)
        if t < self.t_split:
            return EdgePoint(self.first_edge, t / self.t_split)
        return EdgePoint(self.second_edge, (t - self.t_split) / (1.0 - self.t_split))

    def apply(self, ps: PointSet) -> PointSet:
        return PointSet.from_refs(self.graph, [self(r) for r in ps])


def _fresh_id(taken, base: str) -> str:
    if base not in taken:
        return base
    i = 2
    while f"{base}{i}" in taken:
        i += 1
    return f"{base}{i}"


def _split_geometry(geometry, t):
    # cut the polyline at fraction t of its own arclength (display only)
    pts = list(geometry)
    seglens = [math.hypot(x1 - x0, y1 - y0) for (x0, y0), (x1, y1) in zip(pts[:-1], pts[1:])]
    total = sum(seglens)
    if total <= 0:
        return None, None, None
    target = t * total
    acc = 0.0
    for i, sl in enumerate(seglens):
        if acc + sl >= target or i == len(seglens) - 1:
            frac = 0.0 if sl == 0 else (target - acc) / sl
            (x0, y0), (x1, y1) = pts[i], pts[i + 1]
            cut = (x0 + frac * (x1 - x0), y0 + frac * (y1 - y0))
            first = tuple(pts[: i + 1]) + (cut,)
            second = (cut,) + tuple(pts[i + 1:])
            return first, second, cut
        acc += sl
    return None, None, None


def split_edge(g: MetricGraph, eid: str, t: float) -> tuple[MetricGraph, EdgeSplit]:
    """Insert a vertex at fraction ``t`` of an edge, replacing it by two edges.

    Lengths are t*l and l - t*l, so total graph length is preserved and every
    remapped point keeps its arclength position.  Resistance distances are
    invariant under this operation.
    """
    e = g.edge(eid)
    if not (0.0 < t < 1.0):
        raise PointError(f"split position t={t!r} outside (0, 1)")
    taken_v = set(g.vertex_ids)
    taken_e = set(g.edge_ids) - {eid}
    wid = _fresh_id(taken_v, f"{eid}.w")
    ea = _fresh_id(taken_e, f"{eid}.a")
    taken_e.add(ea)
    eb = _fresh_id(taken_e, f"{eid}.b")

    geom_a = geom_b = None
    wx = wy = None
    if e.geometry is not None:
        geom_a, geom_b, cut = _split_geometry(e.geometry, t)
        if cut is not None:
            wx, wy = cut
    if wx is None:
        src, tgt = g.vertex(e.source), g.vertex(e.target)
        if src.x is not None and src.y is not None and tgt.x is not None and tgt.y is not None:
            wx = src.x + t * (tgt.x - src.x)
            wy = src.y + t * (tgt.y - src.y)

    la = t * e.length
    lb = e.length - la
    new_vertices = list(g.vertices()) + [Vertex(wid, wx, wy)]
    new_edges = [old for old in g.edges() if old.id != eid]
    new_edges.append(Edge(ea, e.source, wid, la, geom_a))
    new_edges.append(Edge(eb, wid, e.target, lb, geom_b))
    g2 = MetricGraph(new_vertices, new_edges)
    return g2, EdgeSplit(g2, eid, t, wid, ea, eb)


# ---------------------------------------------------------------------------
# file formats
#
# Format A: structured JSON with explicit ids, optional coordinates/geometry.
# Format B: CSV edge list `source,target,length`, vertex ids inferred, edge
# ids synthesized deterministically from row order.
# Points file: CSV `kind,ref,t`.
# ---------------------------------------------------------------------------


def _as_float(value, what):
    try:
        return float(value)
    except (TypeError, ValueError):
        raise GraphFormatError(f"{what}: expected a number, got {value!r}") from None


def _polyline_length(geometry) -> float:
    return math.fsum(
        math.hypot(x1 - x0, y1 - y0)
        for (x0, y0), (x1, y1) in zip(geometry[:-1], geometry[1:])
    )


def parse_graph_json(text: str) -> MetricGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or "vertices" not in doc or "edges" not in doc:
        raise GraphFormatError('graph document needs top-level "vertices" and "edges"')
    vertices = []
    for row in doc["vertices"]:
        if "id" not in row:
            raise GraphFormatError("vertex without id")
        x = _as_float(row["x"], "vertex x") if row.get("x") is not None else None
        y = _as_float(row["y"], "vertex y") if row.get("y") is not None else None
        vertices.append(Vertex(str(row["id"]), x, y))
    edges = []
    for row in doc["edges"]:
        for key in ("id", "source", "target"):
            if key not in row:
                raise GraphFormatError(f"edge without {key!r}")
        geometry = None
        if row.get("geometry") is not None:
            geometry = tuple(
                (_as_float(p[0], "geometry x"), _as_float(p[1], "geometry y"))
                for p in row["geometry"]
            )
        if row.get("length") is not None:
            length = _as_float(row["length"], f"edge {row['id']!r} length")
        elif geometry is not None and len(geometry) >= 2:
            length = _polyline_length(geometry)
        else:
            raise GraphFormatError(f"edge {row['id']!r} has neither length nor geometry")
        edges.append(Edge(str(row["id"]), str(row["source"]), str(row["target"]), length, geometry))
    return MetricGraph(vertices, edges)


def parse_graph_csv(text: str) -> MetricGraph:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise GraphFormatError("empty edge-list document") from None
    if [h.strip() for h in header] != ["source", "target", "length"]:
        raise GraphFormatError('edge-list CSV must start with header "source,target,length"')
    vertex_ids: list[str] = []
    seen = set()
    edges = []
    for i, row in enumerate(reader):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 3:
            raise GraphFormatError(f"edge-list row {i + 2}: expected 3 fields, got {len(row)}")
        src, tgt, length = row[0].strip(), row[1].strip(), _as_float(row[2], f"row {i + 2} length")
        for vid in (src, tgt):
            if vid not in seen:
                seen.add(vid)
                vertex_ids.append(vid)
        edges.append(Edge(f"e{i + 1}", src, tgt, length))
    return MetricGraph([Vertex(vid) for vid in vertex_ids], edges)


def load_graph(path: str) -> MetricGraph:
    """Load a graph document (JSON format A or CSV format B) and validate it."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if path.endswith(".csv"):
        g = parse_graph_csv(text)
    elif path.endswith(".json"):
        g = parse_graph_json(text)
    else:
        stripped = text.lstrip()
        g = parse_graph_json(text) if stripped.startswith("{") else parse_graph_csv(text)
    report = validate_graph(g)
    if not report.ok:
        raise GraphValidationError(report)
    return g


def graph_to_json(g: MetricGraph) -> str:
    doc = {
        "vertices": [
            {"id": v.id, **({"x": v.x} if v.x is not None else {}), **({"y": v.y} if v.y is not None else {})}
            for v in g.vertices()
        ],
        "edges": [
            {
                "id": e.id,
                "source": e.source,
                "target": e.target,
                "length": e.length,
                **({"geometry": [list(p) for p in e.geometry]} if e.geometry is not None else {}),
            }
            for e in g.edges()
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def write_graph_json(g: MetricGraph, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(graph_to_json(g))


def write_graph_csv(g: MetricGraph, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["source", "target", "length"])
        for e in g.edges():
            writer.writerow([e.source, e.target, repr(e.length)])


def parse_points_csv(g: MetricGraph, text: str) -> PointSet:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise GraphFormatError("empty points document") from None
    if [h.strip() for h in header] != ["kind", "ref", "t"]:
        raise GraphFormatError('points CSV must start with header "kind,ref,t"')
    refs: list[PointRef] = []
    for i, row in enumerate(reader):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 3:
            raise GraphFormatError(f"points row {i + 2}: expected 3 fields, got {len(row)}")
        kind, ref, t = row[0].strip(), row[1].strip(), row[2].strip()
        if kind == "vertex":
            refs.append(VertexPoint(ref))
        elif kind == "edge":
            refs.append(EdgePoint(ref, _as_float(t, f"points row {i + 2} t")))
        else:
            raise GraphFormatError(f"points row {i + 2}: kind must be vertex or edge, got {kind!r}")
    return PointSet.from_refs(g, refs)


def load_points(g: MetricGraph, path: str) -> PointSet:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_points_csv(g, fh.read())


def write_points_csv(ps: PointSet, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["kind", "ref", "t"])
        for ref in ps:
            if isinstance(ref, VertexPoint):
                writer.writerow(["vertex", ref.vertex, "0"])
            else:
                writer.writerow(["edge", ref.edge, repr(ref.t)])
