"""The three simulation algorithms with deterministic substreams.

Every realization sums M independent copies.  A spectral copy contributes
sqrt(-2 ln V / M) cos(W Z + Lambda) with W drawn from the spectral measure and
Z a fresh auxiliary field; a Poisson-dilution copy contributes signed kernel
translates at the points of a unit-rate Poisson pattern on a bounded interval,
scaled by 1/sqrt(M); a germ-dilution copy places a single importance-sampled
germ with 1/sqrt(M pdf(x)) compensation.  Randomness is keyed by
(seed, replicate, copy, role), so results do not depend on execution order or
thread count.
"""

from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from ._backend import kernels as _default_kernels
from .covmodels import (
    CovarianceModel,
    SAMPLABLE_SPECTRAL_FAMILIES,
    dilution_kernel_spec,
    f_squared_tail,
    model_spec,
    parse_model,
    sample_spectral,
)
from .errors import ModelError, SimulationError
from .graphs import EdgePoint, MetricGraph, PointSet, VertexPoint, point_id
from .resistance import LaplacianSystem, SimGrid

__all__ = [
    "ROLES",
    "rng_substream",
    "CauchyGerm",
    "SimConfig",
    "RealizationSet",
    "simulate",
    "simulate_spectral",
    "simulate_poisson_dilution",
    "simulate_germ_dilution",
    "write_realizations",
    "read_realizations",
]

logger = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1
_REP_BITS, _COPY_BITS, _ROLE_BITS = 24, 24, 16

# named stream roles; arbitrary small integers are also accepted
ROLES = {"copy": 0, "aux": 1, "mix": 2, "batch": 3, "weights": 4}


def _role_code(role) -> int:
    if isinstance(role, str):
        try:
            return ROLES[role]
        except KeyError:
            raise SimulationError(f"unknown stream role {role!r}; use one of {sorted(ROLES)} or an int") from None
    return int(role)


def _stream_key(seed: int, rep: int, copy: int, role) -> tuple[int, int]:
    code = _role_code(role)
    if not (0 <= rep < 1 << _REP_BITS):
        raise SimulationError(f"replicate index {rep} outside [0, 2^{_REP_BITS})")
    if not (0 <= copy < 1 << _COPY_BITS):
        raise SimulationError(f"copy index {copy} outside [0, 2^{_COPY_BITS})")
    if not (0 <= code < 1 << _ROLE_BITS):
        raise SimulationError(f"role code {code} outside [0, 2^{_ROLE_BITS})")
    return int(seed) & _MASK64, (rep << (_COPY_BITS + _ROLE_BITS)) | (copy << _ROLE_BITS) | code


def rng_substream(seed: int, rep: int, copy: int, role) -> np.random.Generator:
    """Independent, order-invariant random stream for one (rep, copy, role) triple.

    Counter-based keying: distinct triples map to distinct Philox keys, so the
    streams are statistically independent and reproducible regardless of
    scheduling.
    """
    return np.random.Generator(np.random.Philox(key=_stream_key(seed, rep, copy, role)))


class _StreamPool:
    """Reuses one Philox generator by re-keying its state.

    Produces draws identical to a fresh ``rng_substream`` generator at a small
    fraction of the construction cost; each worker thread owns its own pool.
    """

    def __init__(self, seed: int):
        self._seed = int(seed) & _MASK64
        self._bitgen = np.random.Philox(key=0)
        self._rng = np.random.Generator(self._bitgen)
        self._template = self._bitgen.state
        self._template["state"]["counter"][:] = 0
        self._template["buffer_pos"] = 4
        self._template["has_uint32"] = 0
        self._template["uinteger"] = 0

    def stream(self, rep: int, copy: int, role) -> np.random.Generator:
        k0, k1 = _stream_key(self._seed, rep, copy, role)
        st = self._template
        st["state"]["key"][0] = k0
        st["state"]["key"][1] = k1
        st["state"]["counter"][:] = 0
        st["buffer_pos"] = 4
        st["has_uint32"] = 0
        st["uinteger"] = 0
        self._bitgen.state = st
        return self._rng


@dataclass(frozen=True)
class CauchyGerm:
    """Importance-sampling density for germ placement (heavy tails wanted)."""

    loc: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ModelError("germ density scale must be positive")

    def sample(self, rng: np.random.Generator) -> float:
        return self.loc + self.scale * math.tan(math.pi * (rng.random() - 0.5))

    def pdf(self, x: float) -> float:
        r = (x - self.loc) / self.scale
        return 1.0 / (math.pi * self.scale * (1.0 + r * r))

    def spec(self) -> str:
        return f"cauchy(loc={self.loc:g},scale={self.scale:g})"


ALGORITHMS = ("spectral", "poisson", "germ")


@dataclass(frozen=True)
class SimConfig:
    """Full description of a simulation run (also its provenance record)."""

    algorithm: str
    model: CovarianceModel
    copies: int = 1000
    reps: int = 1
    seed: int = 0
    interval: tuple[float, float] | None = (-50.0, 50.0)  # poisson only; None = adaptive
    germ: CauchyGerm = field(default_factory=CauchyGerm)
    threads: int = 1

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ModelError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        if self.copies < 1 or self.reps < 1 or self.threads < 1:
            raise ModelError("copies, reps, and threads must all be positive")
        if self.algorithm == "spectral":
            if self.model.family not in SAMPLABLE_SPECTRAL_FAMILIES:
                raise ModelError(
                    f"spectral simulation needs a samplable S-family model, got {self.model.family}"
                )
        else:
            if not self.model.is_dilution:
                raise ModelError(f"{self.algorithm} dilution needs a D-family model, got {self.model.family}")
        if self.algorithm == "poisson":
            if self.interval is None:
                if self.model.family != "D1":
                    raise ModelError("adaptive interval requires the compactly supported kernel (D1)")
            else:
                lo, hi = self.interval
                if not lo < hi:
                    raise ModelError(f"poisson interval must satisfy lo < hi, got ({lo}, {hi})")


@dataclass
class RealizationSet:
    """Simulated field values (points x replicates) with full provenance."""

    pointset: PointSet
    values: np.ndarray
    config: SimConfig
    backend: str = ""
    wall_seconds: float = 0.0
    aux_range: tuple[float, float] | None = None
    truncation_bound: float | None = None


def _rademacher(rng: np.random.Generator, size=None):
    return 2.0 * rng.integers(0, 2, size=size).astype(float) - 1.0


def _one_rep(rep: int, grid: SimGrid, sys: LaplacianSystem, cfg: SimConfig, kern):
    pool = _StreamPool(cfg.seed)
    P = grid.n_points
    y = np.zeros(P)
    M = cfg.copies
    alg = cfg.algorithm
    zmin, zmax = math.inf, -math.inf
    fspec = dilution_kernel_spec(cfg.model) if alg != "spectral" else None
    inv_sqrt_m = 1.0 / math.sqrt(M)

    for m in range(M):
        rng = pool.stream(rep, m, "copy")
        zmu = sys.sample_vertex_values(rng.standard_normal(sys.n))
        xi = rng.standard_normal(grid.n_interior)

        if alg == "spectral":
            w = sample_spectral(cfg.model, rng)
            v = 1.0 - rng.random()  # in (0, 1]: keeps the log amplitude finite
            lam = rng.uniform(0.0, 2.0 * math.pi)
            amp = math.sqrt(-2.0 * math.log(v)) * inv_sqrt_m
            kern.spectral_accum(y, grid, zmu, xi, w, amp, lam)
        elif alg == "germ":
            x = cfg.germ.sample(rng)
            eps = 1.0 if rng.integers(0, 2) else -1.0
            dens = cfg.germ.pdf(x)
            if not dens > 1e-300:
                raise SimulationError(
                    f"importance density underflow at germ {x!r}; the density is too light-tailed"
                )
            kern.germ_accum(y, grid, zmu, xi, x, eps / math.sqrt(M * dens), fspec)
        else:  # poisson
            z = np.zeros(P)
            kern.aux_field(grid, zmu, xi, z)
            czmin = float(z.min())
            czmax = float(z.max())
            zmin = min(zmin, czmin)
            zmax = max(zmax, czmax)
            if cfg.interval is None:
                half = cfg.model.a / 2.0  # D1 support half-width: covers every relevant germ
                lo, hi = czmin - half, czmax + half
            else:
                lo, hi = cfg.interval
            n_germs = int(rng.poisson(hi - lo))
            if n_germs > 0:
                xs = lo + (hi - lo) * rng.random(n_germs)
                signs = _rademacher(rng, n_germs)
                order = np.argsort(xs, kind="stable")
                kern.poisson_accum(y, z, xs[order], signs[order], inv_sqrt_m, fspec)
    return y, zmin, zmax


def simulate(g: MetricGraph, sys: LaplacianSystem, ps: PointSet, cfg: SimConfig,
             kernels=None, rep_offset: int = 0) -> RealizationSet:
    """Run the configured algorithm; replicates may execute on a thread pool.

    ``rep_offset`` shifts the replicate indices used for substream keying so a
    long experiment can be produced in chunks with unchanged output.
    """
    kern = kernels if kernels is not None else _default_kernels
    grid = SimGrid(g, sys, ps)
    out = np.zeros((grid.n_points, cfg.reps))
    reps = range(rep_offset, rep_offset + cfg.reps)
    t0 = time.perf_counter()
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(lambda r: _one_rep(r, grid, sys, cfg, kern), reps))
    else:
        results = [_one_rep(r, grid, sys, cfg, kern) for r in reps]
    wall = time.perf_counter() - t0

    zmin = min(r[1] for r in results)
    zmax = max(r[2] for r in results)
    for k, (col, _, _) in enumerate(results):
        out[:, k] = col

    rs = RealizationSet(ps, out, cfg, backend=kern.BACKEND_NAME, wall_seconds=wall)
    if cfg.algorithm == "poisson":
        rs.aux_range = (zmin, zmax)
        if cfg.interval is not None:
            lo, hi = cfg.interval
            bound = f_squared_tail(cfg.model, hi - zmax) + f_squared_tail(cfg.model, zmin - lo)
            rs.truncation_bound = bound
            if bound > 1e-12:
                logger.warning(
                    "poisson dilution on [%g, %g]: auxiliary field ranged [%.3g, %.3g]; "
                    "covariance truncation bias bounded by %.3g", lo, hi, zmin, zmax, bound,
                )
        else:
            rs.truncation_bound = 0.0
    return rs


def _checked(cfg: SimConfig, algorithm: str) -> SimConfig:
    if cfg.algorithm != algorithm:
        raise ModelError(f"config requests {cfg.algorithm!r}, not {algorithm!r}")
    return cfg


def simulate_spectral(g, sys, ps, cfg: SimConfig, **kw) -> RealizationSet:
    return simulate(g, sys, ps, _checked(cfg, "spectral"), **kw)


def simulate_poisson_dilution(g, sys, ps, cfg: SimConfig, **kw) -> RealizationSet:
    return simulate(g, sys, ps, _checked(cfg, "poisson"), **kw)


def simulate_germ_dilution(g, sys, ps, cfg: SimConfig, **kw) -> RealizationSet:
    return simulate(g, sys, ps, _checked(cfg, "germ"), **kw)


def _config_header(cfg: SimConfig, n_points: int) -> list[str]:
    lines = [
        f"graphfields: {__version__}",
        f"algorithm: {cfg.algorithm}",
        f"model: {model_spec(cfg.model)}",
        f"copies: {cfg.copies}",
        f"reps: {cfg.reps}",
        f"seed: {cfg.seed}",
        f"points: {n_points}",
    ]
    if cfg.algorithm == "poisson":
        lines.append("interval: adaptive" if cfg.interval is None
                     else f"interval: {cfg.interval[0]:g},{cfg.interval[1]:g}")
    if cfg.algorithm == "germ":
        lines.append(f"germ: {cfg.germ.spec()}")
    return lines


def write_realizations(rs: RealizationSet, path: str, g: MetricGraph | None = None,
                       extra_header: tuple[str, ...] = ()) -> None:
    """Write a realization set as CSV with a reproducibility header.

    The header carries the full configuration and seed (never wall time), so
    re-running the recorded configuration reproduces the file byte-for-byte.
    """
    ps = rs.pointset
    reps = rs.values.shape[1]
    width = max(4, len(str(reps)))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in (*extra_header, *_config_header(rs.config, len(ps))):
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["point_id", "kind", "ref", "t", "arc_s",
                         *(f"rep_{r + 1:0{width}d}" for r in range(reps))])
        for i, ref in enumerate(ps):
            if isinstance(ref, VertexPoint):
                kind, refid, t, arc = "vertex", ref.vertex, 0.0, 0.0
            else:
                kind, refid, t = "edge", ref.edge, ref.t
                arc = t * (g.edge(ref.edge).length if g is not None else 0.0)
            writer.writerow([point_id(ref), kind, refid, repr(t), repr(arc),
                             *(f"{v:.17g}" for v in rs.values[i])])


def read_realizations(path: str, g: MetricGraph) -> tuple[PointSet, np.ndarray, dict]:
    """Read a realization CSV back into (points, values, header metadata)."""
    meta: dict[str, str] = {}
    refs = []
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for row in reader:
            if row and row[0].startswith("#"):
                text = row[0].lstrip("# ")
                key, _, value = text.partition(":")
                meta[key.strip()] = ",".join([value.strip()] + row[1:]) if len(row) > 1 else value.strip()
                continue
            if row and row[0] == "point_id":
                continue
            if not row:
                continue
            kind, refid, t = row[1], row[2], float(row[3])
            refs.append(VertexPoint(refid) if kind == "vertex" else EdgePoint(refid, t))
            rows.append([float(v) for v in row[5:]])
    ps = PointSet.from_refs(g, refs)
    values = np.asarray(rows)
    if list(ps) != refs:
        # file order must already be canonical; re-map defensively if not
        index = {r: i for i, r in enumerate(refs)}
        values = values[[index[r] for r in ps]]
    return ps, values, meta


def config_from_header(meta: dict) -> SimConfig:
    """Rebuild a SimConfig from a realization-file header."""
    interval: tuple[float, float] | None = (-50.0, 50.0)
    if "interval" in meta:
        if meta["interval"] == "adaptive":
            interval = None
        else:
            lo, hi = meta["interval"].split(",")
            interval = (float(lo), float(hi))
    germ = CauchyGerm()
    if "germ" in meta:
        inner = meta["germ"][meta["germ"].index("(") + 1:meta["germ"].rindex(")")]
        parts = dict(item.split("=") for item in inner.split(","))
        germ = CauchyGerm(float(parts["loc"]), float(parts["scale"]))
    return SimConfig(
        algorithm=meta["algorithm"],
        model=parse_model(meta["model"]),
        copies=int(meta["copies"]),
        reps=int(meta["reps"]),
        seed=int(meta["seed"]),
        interval=interval,
        germ=germ,
        threads=int(meta.get("threads", 1)),
    )
