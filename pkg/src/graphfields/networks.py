"""Bundled synthetic networks: tiny reference graphs plus two street-scale ones.

``streets_503`` stands in for a real street network at the same scale (338
vertices, 503 edges); its edge lengths are rescaled so the largest vertex
resistance distance hits a fixed target, which keeps variogram lags
comparable between runs.  All builders are deterministic.
"""

from __future__ import annotations

import numpy as np

from .graphs import Edge, MetricGraph, Vertex

__all__ = [
    "unit_edge",
    "path3",
    "triangle",
    "parallel_route",
    "grid_bridge",
    "streets_503",
    "zone_graph",
    "random_connected",
    "BUNDLED",
]


def unit_edge() -> MetricGraph:
    return MetricGraph([Vertex("v1", 0.0, 0.0), Vertex("v2", 1.0, 0.0)],
                       [Edge("e1", "v1", "v2", 1.0)])


def path3() -> MetricGraph:
    return MetricGraph(
        [Vertex("v1", 0.0, 0.0), Vertex("v2", 1.0, 0.0), Vertex("v3", 2.0, 0.0)],
        [Edge("e1", "v1", "v2", 1.0), Edge("e2", "v2", "v3", 1.0)],
    )


def triangle() -> MetricGraph:
    return MetricGraph(
        [Vertex("v1", 0.0, 0.0), Vertex("v2", 1.0, 0.0), Vertex("v3", 0.5, 0.866)],
        [Edge("e1", "v1", "v2", 1.0), Edge("e2", "v2", "v3", 1.0), Edge("e3", "v1", "v3", 1.0)],
    )


def parallel_route() -> MetricGraph:
    """Unit edge in parallel with a two-hop route of total length one.

    Effective resistance between the endpoints is 0.5.
    """
    return MetricGraph(
        [Vertex("v1", 0.0, 0.0), Vertex("v2", 1.0, 0.0), Vertex("w", 0.5, 0.4)],
        [Edge("direct", "v1", "v2", 1.0),
         Edge("via1", "v1", "w", 0.5),
         Edge("via2", "w", "v2", 0.5)],
    )


def grid_bridge(rows: int = 10, cols: int = 10) -> MetricGraph:
    """Planar unit grid plus two short edges between geometrically distant corners.

    The extra edges have declared length 2 while their endpoints sit far apart
    in the plane: metric structure deliberately decoupled from the embedding.
    """
    vertices = [Vertex(f"g{r}_{c}", float(c), float(r)) for r in range(rows) for c in range(cols)]
    edges = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.append(Edge(f"h{r}_{c}", f"g{r}_{c}", f"g{r}_{c + 1}", 1.0))
            if r + 1 < rows:
                edges.append(Edge(f"v{r}_{c}", f"g{r}_{c}", f"g{r + 1}_{c}", 1.0))
    edges.append(Edge("bridge1", "g0_0", f"g{rows - 1}_{cols - 1}", 2.0))
    edges.append(Edge("bridge2", f"g0_{cols - 1}", f"g{rows - 1}_0", 2.0))
    return MetricGraph(vertices, edges)


def _delaunay_edges(points: np.ndarray) -> list[tuple[int, int]]:
    from scipy.spatial import Delaunay

    tri = Delaunay(points)
    pairs = set()
    for simplex in tri.simplices:
        for i, j in ((0, 1), (1, 2), (0, 2)):
            a, b = int(simplex[i]), int(simplex[j])
            pairs.add((min(a, b), max(a, b)))
    return sorted(pairs)


def streets_503(seed: int = 20240503, n_vertices: int = 338, n_edges: int = 503,
                target_max_resistance: float = 280.0) -> MetricGraph:
    """Synthetic connected street network: 338 vertices, exactly 503 edges.

    Delaunay triangulation of random sites, thinned to a spanning tree plus
    the shortest remaining edges.  Lengths are Euclidean, globally rescaled so
    the maximum vertex-to-vertex resistance distance equals the target
    (resistance scales linearly with edge lengths).
    """
    rng = np.random.default_rng(seed)
    pts = rng.random((n_vertices, 2))
    pairs = _delaunay_edges(pts)
    if len(pairs) < n_edges:
        raise ValueError(f"triangulation produced only {len(pairs)} candidate edges")
    lengths = {p: float(np.hypot(*(pts[p[0]] - pts[p[1]]))) for p in pairs}

    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import minimum_spanning_tree

    ii = np.array([p[0] for p in pairs])
    jj = np.array([p[1] for p in pairs])
    ww = np.array([lengths[p] for p in pairs])
    mst = minimum_spanning_tree(coo_matrix((ww, (ii, jj)), shape=(n_vertices, n_vertices)))
    mi, mj = mst.nonzero()
    chosen = {(min(int(a), int(b)), max(int(a), int(b))) for a, b in zip(mi, mj)}
    for pair in sorted(set(pairs) - chosen, key=lambda p: (lengths[p], p)):
        if len(chosen) >= n_edges:
            break
        chosen.add(pair)

    def build(scale: float) -> MetricGraph:
        vertices = [Vertex(f"n{i:03d}", float(pts[i, 0]), float(pts[i, 1])) for i in range(n_vertices)]
        edges = [
            Edge(f"s{k:03d}", f"n{i:03d}", f"n{j:03d}", scale * lengths[(i, j)])
            for k, (i, j) in enumerate(sorted(chosen))
        ]
        return MetricGraph(vertices, edges)

    g = build(1.0)
    from .resistance import build_laplacian

    sys = build_laplacian(g)
    sigma = sys.solve(np.eye(sys.n))
    diag = np.diag(sigma)
    dmax = float(np.max(diag[:, None] + diag[None, :] - 2.0 * sigma))
    return build(target_max_resistance / dmax)


def zone_graph() -> MetricGraph:
    """Small street block used for the normality experiments: 3x3 grid plus a diagonal."""
    vertices = [Vertex(f"z{r}_{c}", 4.0 * c, 4.0 * r) for r in range(3) for c in range(3)]
    edges = []
    for r in range(3):
        for c in range(3):
            if c + 1 < 3:
                edges.append(Edge(f"zh{r}_{c}", f"z{r}_{c}", f"z{r}_{c + 1}", 4.0))
            if r + 1 < 3:
                edges.append(Edge(f"zv{r}_{c}", f"z{r}_{c}", f"z{r + 1}_{c}", 4.0))
    edges.append(Edge("zd", "z0_0", "z1_1", 5.7))
    return MetricGraph(vertices, edges)


def random_connected(n_vertices: int, extra_edges: int, seed: int = 0) -> MetricGraph:
    """Random connected simple graph: uniform spanning-tree skeleton plus chords."""
    rng = np.random.default_rng(seed)
    vertices = [Vertex(f"r{i:02d}") for i in range(n_vertices)]
    pairs = set()
    edges = []
    for i in range(1, n_vertices):
        j = int(rng.integers(0, i))
        pairs.add((j, i))
        edges.append(Edge(f"t{i:03d}", f"r{j:02d}", f"r{i:02d}", float(rng.uniform(0.5, 2.0))))
    added = 0
    while added < extra_edges:
        i, j = sorted(int(x) for x in rng.integers(0, n_vertices, 2))
        if i == j or (i, j) in pairs:
            continue
        pairs.add((i, j))
        edges.append(Edge(f"x{added:03d}", f"r{i:02d}", f"r{j:02d}", float(rng.uniform(0.5, 2.0))))
        added += 1
    return MetricGraph(vertices, edges)


BUNDLED = {
    "unit-edge": unit_edge,
    "path-3": path3,
    "triangle": triangle,
    "parallel-route": parallel_route,
    "grid-bridge": grid_bridge,
    "streets-503": streets_503,
}
