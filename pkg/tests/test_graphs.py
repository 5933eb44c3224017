import json
import math

import numpy as np
import pytest

from graphfields import (
    EdgePoint,
    GraphFormatError,
    GraphValidationError,
    MetricGraph,
    PointError,
    PointSet,
    Vertex,
    VertexPoint,
    canonical_point,
    discretize,
    load_graph,
    split_edge,
    validate_graph,
)
from graphfields.graphs import (
    Edge,
    graph_to_json,
    load_points,
    parse_graph_csv,
    parse_graph_json,
    parse_points_csv,
    write_graph_csv,
    write_graph_json,
    write_points_csv,
)
from graphfields.networks import grid_bridge, streets_503, triangle, unit_edge


def test_load_minimal_json(tmp_path):
    doc = {"vertices": [{"id": "v1"}, {"id": "v2"}],
           "edges": [{"id": "e1", "source": "v1", "target": "v2", "length": 1.0}]}
    path = tmp_path / "g.json"
    path.write_text(json.dumps(doc))
    g = load_graph(str(path))
    assert g.n_vertices == 2 and g.n_edges == 1
    assert g.edge("e1").length == 1.0


def test_load_triangle_json(tmp_path):
    doc = {"vertices": [{"id": v} for v in "abc"],
           "edges": [{"id": f"e{i}", "source": s, "target": t, "length": 1.0}
                     for i, (s, t) in enumerate([("a", "b"), ("b", "c"), ("a", "c")])]}
    path = tmp_path / "tri.json"
    path.write_text(json.dumps(doc))
    g = load_graph(str(path))
    assert g.n_vertices == 3 and g.n_edges == 3


def test_load_zero_length_edge_rejected(tmp_path):
    doc = {"vertices": [{"id": "v1"}, {"id": "v2"}],
           "edges": [{"id": "e1", "source": "v1", "target": "v2", "length": 0.0}]}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(GraphValidationError, match="nonpositive edge length"):
        load_graph(str(path))


def test_length_from_geometry_when_missing():
    doc = {"vertices": [{"id": "v1"}, {"id": "v2"}],
           "edges": [{"id": "e1", "source": "v1", "target": "v2",
                      "geometry": [[0, 0], [3, 4]]}]}
    g = parse_graph_json(json.dumps(doc))
    assert g.edge("e1").length == pytest.approx(5.0)


def test_declared_length_never_recomputed_from_geometry():
    doc = {"vertices": [{"id": "v1"}, {"id": "v2"}],
           "edges": [{"id": "e1", "source": "v1", "target": "v2", "length": 2.0,
                      "geometry": [[0, 0], [3, 4]]}]}
    g = parse_graph_json(json.dumps(doc))
    assert g.edge("e1").length == 2.0


def test_validate_examples():
    assert validate_graph(triangle()).ok

    disjoint = MetricGraph(
        [Vertex(v) for v in "abcd"],
        [Edge("e1", "a", "b", 1.0), Edge("e2", "c", "d", 1.0)],
    )
    assert any("disconnected" in v for v in validate_graph(disjoint).violations)

    loop = MetricGraph([Vertex("v1"), Vertex("v2")],
                       [Edge("e1", "v1", "v1", 1.0), Edge("e2", "v1", "v2", 1.0)])
    assert any("self-loop" in v for v in validate_graph(loop).violations)

    dup = MetricGraph([Vertex("v1"), Vertex("v2")],
                      [Edge("e1", "v1", "v2", 1.0), Edge("e2", "v2", "v1", 2.0)])
    assert any("duplicate edge" in v for v in validate_graph(dup).violations)


def test_canonical_point(g_unit):
    assert canonical_point(g_unit, EdgePoint("e1", 0.0)) == VertexPoint("v1")
    assert canonical_point(g_unit, EdgePoint("e1", 1.0)) == VertexPoint("v2")
    assert canonical_point(g_unit, EdgePoint("e1", 0.5)) == EdgePoint("e1", 0.5)
    with pytest.raises(PointError):
        canonical_point(g_unit, EdgePoint("e1", 1.2))
    with pytest.raises(PointError):
        canonical_point(g_unit, EdgePoint("nope", 0.5))
    with pytest.raises(PointError):
        canonical_point(g_unit, VertexPoint("nope"))


def test_discretize_triangle_single_midpoints(g_triangle):
    ps = discretize(g_triangle, 1)
    assert len(ps) == 3
    assert all(isinstance(r, EdgePoint) and r.t == 0.5 for r in ps)


def test_discretize_equispacing(g_triangle):
    ps = discretize(g_triangle, 2, include_vertices=True)
    assert len(ps) == 3 + 6
    ts = sorted({r.t for r in ps if isinstance(r, EdgePoint)})
    assert ts == pytest.approx([1 / 3, 2 / 3])


def test_discretize_street_scale_count():
    g = streets_503()
    ps = discretize(g, 200)
    assert len(ps) == 100_600


def test_pointset_canonical_order_and_duplicates(g_triangle):
    refs = [EdgePoint("e2", 0.7), VertexPoint("v3"), EdgePoint("e1", 0.2),
            EdgePoint("e2", 0.1), VertexPoint("v1"), EdgePoint("e1", 1.0)]
    ps = PointSet.from_refs(g_triangle, refs)
    assert list(ps)[:3] == [VertexPoint("v1"), VertexPoint("v2"), VertexPoint("v3")]
    edge_groups = [(r.edge, r.t) for r in list(ps)[3:]]
    assert edge_groups == [("e1", 0.2), ("e2", 0.1), ("e2", 0.7)]
    with pytest.raises(PointError, match="duplicate"):
        PointSet.from_refs(g_triangle, [EdgePoint("e1", 0.5), EdgePoint("e1", 0.5)])
    # t=1 canonicalizes onto the vertex: a second copy is a duplicate too
    with pytest.raises(PointError, match="duplicate"):
        PointSet.from_refs(g_triangle, [VertexPoint("v2"), EdgePoint("e1", 1.0)])


def test_split_edge_basic(g_unit):
    g2, remap = split_edge(g_unit, "e1", 0.5)
    assert g2.n_vertices == 3 and g2.n_edges == 2
    lengths = sorted(e.length for e in g2.edges())
    assert lengths == [0.5, 0.5]
    assert remap(EdgePoint("e1", 0.25)) == EdgePoint("e1.a", 0.5)
    assert remap(EdgePoint("e1", 0.5)) == VertexPoint("e1.w")
    assert remap(EdgePoint("e1", 0.75)) == EdgePoint("e1.b", 0.5)
    assert remap(VertexPoint("v1")) == VertexPoint("v1")
    with pytest.raises(PointError):
        split_edge(g_unit, "e1", 1.0)


def test_split_remap_applies_to_pointsets(g_triangle):
    ps = PointSet.from_refs(g_triangle, [VertexPoint("v1"), EdgePoint("e2", 0.2),
                                         EdgePoint("e2", 0.8), EdgePoint("e3", 0.5)])
    g2, remap = split_edge(g_triangle, "e2", 0.5)
    ps2 = remap.apply(ps)
    assert len(ps2) == len(ps)
    assert EdgePoint("e2.a", pytest.approx(0.4)) in list(ps2)
    assert EdgePoint("e3", 0.5) in list(ps2)


def test_split_preserves_total_length_and_positions():
    g = triangle()
    total = g.total_length()
    rng = np.random.default_rng(5)
    for t in (0.5, 0.25, 0.125, float(rng.uniform(0.01, 0.99))):
        g2, remap = split_edge(g, "e2", t)
        assert g2.total_length() == pytest.approx(total, abs=1e-15)
        for tt in rng.uniform(0.01, 0.99, 20):
            old_s = tt * g.edge("e2").length
            new = remap(EdgePoint("e2", float(tt)))
            if isinstance(new, EdgePoint):
                e = g2.edge(new.edge)
                new_s = new.t * e.length + (0.0 if new.edge.endswith(".a") else t * g.edge("e2").length)
                assert abs(new_s - old_s) <= 1e-12


def test_json_round_trip(tmp_path):
    g = grid_bridge(4, 5)
    path = tmp_path / "g.json"
    write_graph_json(g, str(path))
    g2 = load_graph(str(path))
    assert g2 == g
    assert graph_to_json(g2) == graph_to_json(g)


def test_csv_round_trip(tmp_path):
    g = parse_graph_csv("source,target,length\na,b,1.5\nb,c,2.0\n")
    path = tmp_path / "g.csv"
    write_graph_csv(g, str(path))
    g2 = load_graph(str(path))
    assert [(e.source, e.target, e.length) for e in g2.edges()] == \
           [(e.source, e.target, e.length) for e in g.edges()]
    write_graph_csv(g2, str(tmp_path / "g2.csv"))
    assert (tmp_path / "g.csv").read_bytes() == (tmp_path / "g2.csv").read_bytes()


def test_points_file_round_trip(tmp_path, g_triangle):
    ps = PointSet.from_refs(g_triangle, [VertexPoint("v1"), EdgePoint("e1", 0.25),
                                         EdgePoint("e3", 1 / 3)])
    path = tmp_path / "pts.csv"
    write_points_csv(ps, str(path))
    ps2 = load_points(g_triangle, str(path))
    assert ps2 == ps


def test_points_file_parse_errors(g_triangle):
    with pytest.raises(GraphFormatError):
        parse_points_csv(g_triangle, "wrong,header,here\n")
    with pytest.raises(GraphFormatError):
        parse_points_csv(g_triangle, "kind,ref,t\nwhat,e1,0.5\n")


def test_graph_csv_header_required():
    with pytest.raises(GraphFormatError):
        parse_graph_csv("from,to,len\na,b,1\n")


def test_structural_errors():
    with pytest.raises(GraphFormatError, match="unknown vertex"):
        MetricGraph([Vertex("v1")], [Edge("e1", "v1", "ghost", 1.0)])
    with pytest.raises(GraphFormatError, match="duplicate vertex"):
        MetricGraph([Vertex("v1"), Vertex("v1")], [])


def test_total_length_split_exact_dyadic():
    # dyadic fractions split unit lengths exactly in floating point
    g = unit_edge()
    g2, _ = split_edge(g, "e1", 0.5)
    assert g2.total_length() == 1.0
    g3, _ = split_edge(g2, "e1.a", 0.25)
    assert math.fsum(e.length for e in g3.edges()) == 1.0
