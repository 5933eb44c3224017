"""Resistance metric machinery: modified Laplacian, analytic distances, auxiliary field.

The vertex field has covariance equal to the inverse of the modified
Laplacian (conductances 1/length, +1 regularization at an anchor vertex).
Extending it along edges by linear interpolation and adding independent
unit-diffusion Brownian bridges gives the auxiliary field whose increment
variance *defines* the resistance metric, so distances can be computed
analytically from the factorization plus closed-form bridge variances.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, cho_solve
from scipy.linalg.lapack import dtrtri

from .errors import FactorizationError, GraphFieldsError, GraphValidationError, PointError
from .graphs import EdgePoint, MetricGraph, PointRef, PointSet, VertexPoint, canonical_point, validate_graph

__all__ = [
    "LaplacianSystem",
    "build_laplacian",
    "vertex_covariance_form",
    "resistance_distance",
    "resistance_matrix",
    "ResistanceMatrix",
    "simulate_aux_field",
    "AuxFieldRealization",
    "SimGrid",
    "write_resistance_csv",
]

# conductances are 1/length, so wildly mixed edge lengths destroy the
# conditioning of the vertex precision matrix
MAX_LENGTH_RATIO = 1e12

DEFAULT_PAIR_CAP = 25_000_000


class LaplacianSystem:
    """Modified Laplacian with a factorization for quadratic forms and sampling.

    The lower Cholesky factor of the precision matrix is inverted once; the
    inverse factor serves both as the sampling operator (covariance equal to
    the precision inverse) and for quadratic forms without ever forming the
    dense covariance.
    """

    __slots__ = ("order", "index", "u0", "L", "_lower", "_lower_inv")

    def __init__(self, order, u0, L, lower, lower_inv):
        self.order = order
        self.index = {vid: i for i, vid in enumerate(order)}
        self.u0 = u0
        self.L = L
        self._lower = lower
        self._lower_inv = lower_inv

    @property
    def n(self) -> int:
        return len(self.order)

    def sample_vertex_values(self, z: np.ndarray) -> np.ndarray:
        """Map iid standard normals to a vertex vector with the target covariance."""
        return self._lower_inv.T @ z

    def solve(self, b: np.ndarray) -> np.ndarray:
        return cho_solve((self._lower, True), b)

    def quad_form(self, w: np.ndarray, wp: np.ndarray) -> float:
        if w.shape != (self.n,) or wp.shape != (self.n,):
            raise GraphFieldsError(f"vector length mismatch: expected {self.n}")
        y = self._lower_inv @ w
        yp = y if wp is w else self._lower_inv @ wp
        return float(y @ yp)


def build_laplacian(g: MetricGraph, u0: str | None = None) -> LaplacianSystem:
    """Assemble and factorize the modified Laplacian of a valid graph.

    The anchor defaults to the lexicographically smallest vertex id so runs
    are deterministic; resistance distances do not depend on the choice.
    """
    report = validate_graph(g)
    if not report.ok:
        raise GraphValidationError(report)
    if u0 is None:
        u0 = g.vertex_ids[0]
    elif not g.has_vertex(u0):
        raise PointError(f"anchor vertex {u0!r} not in graph")

    lengths = [e.length for e in g.edges()]
    if max(lengths) / min(lengths) > MAX_LENGTH_RATIO:
        raise GraphFieldsError(
            f"edge-length ratio {max(lengths) / min(lengths):.3g} exceeds {MAX_LENGTH_RATIO:.0e}; "
            "conductances 1/length would make the system numerically singular"
        )

    order = g.vertex_ids
    index = {vid: i for i, vid in enumerate(order)}
    n = len(order)
    L = np.zeros((n, n))
    for e in g.edges():
        c = 1.0 / e.length
        i, j = index[e.source], index[e.target]
        L[i, j] -= c
        L[j, i] -= c
        L[i, i] += c
        L[j, j] += c
    L[index[u0], index[u0]] += 1.0

    try:
        lower = cholesky(L, lower=True)
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(f"modified Laplacian is not positive definite: {exc}") from None
    lower_inv, info = dtrtri(lower, lower=1)
    if info != 0:
        raise FactorizationError(f"triangular inversion failed (info={info})")
    return LaplacianSystem(order, u0, L, lower, lower_inv)


def vertex_covariance_form(sys: LaplacianSystem, w: np.ndarray, wp: np.ndarray) -> float:
    """Quadratic form of two vertex-indexed vectors against the vertex covariance."""
    w = np.asarray(w, dtype=float)
    wp = np.asarray(wp, dtype=float)
    return sys.quad_form(w, wp)


def _point_location(g: MetricGraph, sys: LaplacianSystem, ref: PointRef):
    """(i_source, i_target, t, bridge_variance, edge_id, arclength, length) of a canonical point."""
    if isinstance(ref, VertexPoint):
        i = sys.index[ref.vertex]
        return i, i, 0.0, 0.0, None, 0.0, 0.0
    e = g.edge(ref.edge)
    s = ref.t * e.length
    bvar = s * (e.length - s) / e.length
    return sys.index[e.source], sys.index[e.target], ref.t, bvar, e.id, s, e.length


def resistance_distance(g: MetricGraph, sys: LaplacianSystem, p: PointRef, q: PointRef) -> float:
    """Analytic resistance distance between two points.

    Interpolation part: quadratic form of the weight-vector difference against
    the vertex covariance.  Bridge part: |s_p - s_q| - (s_p - s_q)^2 / l for a
    same-edge interior pair, otherwise each interior point contributes its own
    bridge variance s (l - s) / l.
    """
    p = canonical_point(g, p)
    q = canonical_point(g, q)
    if p == q:
        return 0.0
    ip0, ip1, tp, bvp, ep, sp, lp = _point_location(g, sys, p)
    iq0, iq1, tq, bvq, eq, sq, _ = _point_location(g, sys, q)
    dw = np.zeros(sys.n)
    dw[ip0] += 1.0 - tp
    dw[ip1] += tp
    dw[iq0] -= 1.0 - tq
    dw[iq1] -= tq
    interp = sys.quad_form(dw, dw)
    if ep is not None and ep == eq:
        ds = sp - sq
        bridge = abs(ds) - ds * ds / lp
    else:
        bridge = bvp + bvq
    return interp + bridge


@dataclass
class ResistanceMatrix:
    """All pairwise resistance distances over a point set."""

    pointset: PointSet
    values: np.ndarray

    def distance(self, i: int, j: int) -> float:
        return float(self.values[i, j])


def resistance_matrix(g: MetricGraph, sys: LaplacianSystem, ps: PointSet,
                      pair_cap: int = DEFAULT_PAIR_CAP) -> ResistanceMatrix:
    """Pairwise resistance distances, amortizing the solves over edge endpoints.

    One solve per distinct endpoint vertex (not per point pair); the bridge
    corrections are applied per edge group.  Refuses point sets whose squared
    size exceeds ``pair_cap``: estimate variograms through pair subsampling in
    the stats module instead.
    """
    P = len(ps)
    if P * P > pair_cap:
        raise GraphFieldsError(
            f"resistance matrix would hold {P * P:,} entries (cap {pair_cap:,}); "
            "use pair subsampling in the stats module or raise pair_cap"
        )
    locs = [_point_location(g, sys, ref) for ref in ps]
    used = sorted({i for loc in locs for i in (loc[0], loc[1])})
    used_pos = {vi: k for k, vi in enumerate(used)}
    E = np.zeros((sys.n, len(used)))
    E[used, np.arange(len(used))] = 1.0
    K = sys.solve(E)[used, :]  # covariance block of the endpoint vertices

    rows = np.repeat(np.arange(P), 2)
    cols = np.empty(2 * P, dtype=np.intp)
    data = np.empty(2 * P)
    for k, (i0, i1, t, _, _, _, _) in enumerate(locs):
        cols[2 * k] = used_pos[i0]
        cols[2 * k + 1] = used_pos[i1]
        data[2 * k] = 1.0 - t
        data[2 * k + 1] = t if i1 != i0 else 0.0
    from scipy.sparse import csr_matrix

    W = csr_matrix((data, (rows, cols)), shape=(P, len(used)))
    A = W @ K
    sigma = W @ A.T  # dense P x P interpolated-field covariance
    diag = np.diag(sigma).copy()
    D = diag[:, None] + diag[None, :] - (sigma + sigma.T)

    bvar = np.array([loc[3] for loc in locs])
    D += bvar[:, None] + bvar[None, :]
    # same-edge interior pairs share one bridge: subtract twice its covariance
    start = ps.n_vertex_points
    while start < P:
        eid = ps[start].edge
        stop = start
        while stop < P and isinstance(ps[stop], EdgePoint) and ps[stop].edge == eid:
            stop += 1
        s = np.array([loc[5] for loc in locs[start:stop]])
        ell = locs[start][6]
        D[start:stop, start:stop] -= 2.0 * (np.minimum.outer(s, s) - np.outer(s, s) / ell)
        start = stop

    np.fill_diagonal(D, 0.0)
    D = 0.5 * (D + D.T)
    np.clip(D, 0.0, None, out=D)
    return ResistanceMatrix(ps, D)


def write_resistance_csv(rm: ResistanceMatrix, path: str, header_lines=()) -> None:
    ids = rm.pointset.ids()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["point_id", *ids])
        for pid, row in zip(ids, rm.values):
            writer.writerow([pid, *(f"{x:.17g}" for x in row)])


class SimGrid:
    """Precomputed per-point arrays for auxiliary-field synthesis.

    Vertex points occupy the prefix; edge-interior points follow in canonical
    order, carrying the sequential bridge recurrence coefficients
    coef_k = (l - s_k)/(l - s_{k-1}) and
    sd_k = sqrt((s_k - s_{k-1})(l - s_k)/(l - s_{k-1})), plus the telescoped
    equivalents (alpha, beta, segment index) used by the vectorized backend.
    """

    __slots__ = (
        "n_points", "n_vertex_points", "n_interior",
        "src", "tgt", "tfrac", "arc_s",
        "coef", "sd", "seg_start", "alpha", "beta", "seg_id", "seg_first",
    )

    def __init__(self, g: MetricGraph, sys: LaplacianSystem, ps: PointSet):
        P = len(ps)
        nv = ps.n_vertex_points
        src = np.zeros(P, dtype=np.intc)
        tgt = np.zeros(P, dtype=np.intc)
        tfrac = np.zeros(P)
        arc_s = np.zeros(P)
        n_int = P - nv
        coef = np.zeros(n_int)
        sd = np.zeros(n_int)
        seg_start = np.zeros(n_int, dtype=np.uint8)
        alpha = np.zeros(n_int)
        seg_id = np.zeros(n_int, dtype=np.intc)
        seg_first = []

        for i in range(nv):
            vi = sys.index[ps[i].vertex]
            src[i] = vi
            tgt[i] = vi
        prev_edge = None
        prev_s = 0.0
        for j in range(n_int):
            ref = ps[nv + j]
            e = g.edge(ref.edge)
            src[nv + j] = sys.index[e.source]
            tgt[nv + j] = sys.index[e.target]
            tfrac[nv + j] = ref.t
            s = ref.t * e.length
            arc_s[nv + j] = s
            if ref.edge != prev_edge:
                seg_start[j] = 1
                seg_first.append(j)
                prev_edge = ref.edge
                prev_s = 0.0
            gap = e.length - prev_s
            coef[j] = (e.length - s) / gap
            sd[j] = np.sqrt((s - prev_s) * (e.length - s) / gap)
            alpha[j] = e.length - s
            seg_id[j] = len(seg_first) - 1
            prev_s = s

        self.n_points = P
        self.n_vertex_points = nv
        self.n_interior = n_int
        self.src = src
        self.tgt = tgt
        self.tfrac = tfrac
        self.arc_s = arc_s
        self.coef = coef
        self.sd = sd
        self.seg_start = seg_start
        self.alpha = alpha
        self.beta = sd / np.where(alpha > 0, alpha, 1.0)
        self.seg_id = seg_id
        self.seg_first = np.asarray(seg_first, dtype=np.intp)


@dataclass
class AuxFieldRealization:
    """One draw of the auxiliary field over a point set."""

    pointset: PointSet
    values: np.ndarray
    provenance: str = ""


def simulate_aux_field(g: MetricGraph, sys: LaplacianSystem, ps: PointSet,
                       rng: np.random.Generator, provenance: str = "",
                       grid: SimGrid | None = None, kernels=None) -> AuxFieldRealization:
    """Draw the auxiliary field once: vertex Gaussian + interpolation + bridges.

    The stream is consumed in a fixed order (vertex normals, then one normal
    per interior point in canonical order), and the bridge values are exact in
    distribution at the requested points.
    """
    if kernels is None:
        from ._backend import kernels
    if grid is None:
        grid = SimGrid(g, sys, ps)
    z0 = rng.standard_normal(sys.n)
    zmu = sys.sample_vertex_values(z0)
    xi = rng.standard_normal(grid.n_interior)
    out = np.zeros(grid.n_points)
    kernels.aux_field(grid, zmu, xi, out)
    return AuxFieldRealization(ps, out, provenance)
