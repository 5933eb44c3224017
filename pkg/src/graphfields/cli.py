"""Command-line interface, benchmark, and bundled example networks.

Subcommands: ``graph validate``, ``simulate``, ``resistance``, ``variogram``,
``madogram``, ``test normality``, ``bench``, ``examples``.  Option precedence
is CLI flag > config file (flat ``key = value`` lines mirroring flag names)
> built-in default.  Every output file carries a provenance header (version,
seed, full configuration) and is byte-reproducible from it.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys as _sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from ._backend import available_backends, get_kernels
from .covmodels import model_spec, parse_model
from .errors import GraphFieldsError
from .graphs import (
    MetricGraph,
    PointSet,
    discretize,
    load_graph,
    load_points,
    validate_graph,
    write_graph_json,
)
from .networks import BUNDLED
from .resistance import build_laplacian, resistance_matrix, write_resistance_csv
from .simulate import (
    CauchyGerm,
    SimConfig,
    read_realizations,
    simulate,
    write_realizations,
)
from .stats import (
    empirical_semimadogram,
    empirical_semivariogram,
    make_bins,
    normality_experiment,
    normality_weights,
    scale_relative_lags,
    variogram_ttest,
    write_normality_csv,
    write_variogram_csv,
)

__all__ = ["main", "cli_dispatch", "benchmark", "BenchReport", "write_examples"]

logger = logging.getLogger(__name__)


def _env_threads() -> int:
    try:
        return max(1, int(os.environ.get("GRAPHFIELDS_THREADS", "1")))
    except ValueError:
        return 1


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, eq, value = line.partition("=")
            if not eq:
                raise GraphFieldsError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _resolve(args: argparse.Namespace, defaults: dict) -> argparse.Namespace:
    """CLI > config file > defaults (CLI options default to None until here)."""
    config = _read_config_file(args.config) if getattr(args, "config", None) else {}
    for key, fallback in defaults.items():
        if getattr(args, key, None) is None:
            if key in config:
                raw = config[key]
                caster = type(fallback) if fallback is not None else str
                if caster is bool:
                    setattr(args, key, raw.lower() in ("1", "true", "yes", "on"))
                elif fallback is None:
                    setattr(args, key, raw)
                else:
                    setattr(args, key, caster(raw))
            else:
                setattr(args, key, fallback)
    return args


def _parse_interval(text: str):
    if text == "adaptive":
        return None
    try:
        lo, hi = (float(part) for part in text.split(","))
    except ValueError:
        raise GraphFieldsError(f"interval must be 'lo,hi' or 'adaptive', got {text!r}") from None
    return lo, hi


def _sim_config(args) -> SimConfig:
    return SimConfig(
        algorithm=args.algorithm,
        model=parse_model(args.model),
        copies=args.copies,
        reps=args.reps,
        seed=args.seed,
        interval=_parse_interval(args.interval),
        germ=CauchyGerm(args.germ_loc, args.germ_scale),
        threads=args.threads,
    )


def _load_pointset(g: MetricGraph, args) -> PointSet:
    if getattr(args, "points", None):
        return load_points(g, args.points)
    if getattr(args, "points_per_edge", None):
        return discretize(g, args.points_per_edge, include_vertices=bool(args.include_vertices))
    raise GraphFieldsError("specify --points-per-edge or --points")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_graph(args) -> int:
    if args.action != "validate":
        raise GraphFieldsError(f"unknown graph action {args.action!r}")
    with open(args.path, "r", encoding="utf-8") as fh:
        text = fh.read()
    from .graphs import parse_graph_csv, parse_graph_json

    g = parse_graph_csv(text) if (args.path.endswith(".csv") or not text.lstrip().startswith("{")) \
        else parse_graph_json(text)
    report = validate_graph(g)
    if report.ok:
        print(f"ok: {g.n_vertices} vertices, {g.n_edges} edges, total length {g.total_length():.6g}")
        return 0
    print(f"error: validation: {report}", file=_sys.stderr)
    return 1


_SIM_DEFAULTS = dict(points_per_edge=None, points=None, include_vertices=False,
                     copies=1000, reps=1, seed=0, interval="-50,50",
                     germ_loc=0.0, germ_scale=1.0, threads=None, backend="auto")


def _cmd_simulate(args) -> int:
    defaults = dict(_SIM_DEFAULTS)
    defaults["threads"] = _env_threads()
    _resolve(args, defaults)
    g = load_graph(args.graph)
    ps = _load_pointset(g, args)
    cfg = _sim_config(args)
    sys_ = build_laplacian(g)
    rs = simulate(g, sys_, ps, cfg, kernels=get_kernels(args.backend))
    write_realizations(rs, args.out, g=g, extra_header=(f"graph: {args.graph}",))
    print(f"wrote {args.out}: {len(ps)} points x {cfg.reps} reps "
          f"({rs.backend} backend, {rs.wall_seconds:.3f} s)")
    if rs.truncation_bound is not None and rs.truncation_bound > 1e-12:
        print(f"note: poisson truncation bias bound {rs.truncation_bound:.3g} "
              f"(auxiliary field ranged {rs.aux_range[0]:.3g}..{rs.aux_range[1]:.3g})")
    return 0


def _cmd_resistance(args) -> int:
    _resolve(args, dict(points_per_edge=None, points=None, include_vertices=False,
                        pair_cap=25_000_000))
    g = load_graph(args.graph)
    ps = _load_pointset(g, args)
    sys_ = build_laplacian(g)
    rm = resistance_matrix(g, sys_, ps, pair_cap=args.pair_cap)
    write_resistance_csv(rm, args.out, header_lines=(
        f"graphfields: {__version__}", f"graph: {args.graph}", f"points: {len(ps)}"))
    print(f"wrote {args.out}: {len(ps)} x {len(ps)} resistance matrix")
    return 0


def _cmd_variogram(args, kind: str) -> int:
    _resolve(args, dict(bins=15, model=None, lags=None, level=0.05))
    g = load_graph(args.graph)
    ps, values, meta = read_realizations(args.realizations, g)
    sys_ = build_laplacian(g)
    dmat = resistance_matrix(g, sys_, ps)
    edges = make_bins(dmat, n_bins=args.bins)
    estimator = empirical_semivariogram if kind == "semivariogram" else empirical_semimadogram
    est = estimator(values, dmat, edges)
    report = None
    model_text = args.model or meta.get("model")
    if model_text and values.shape[1] >= 2:
        model = parse_model(model_text)
        lags = ([float(x) for x in args.lags.split(",")] if args.lags
                else scale_relative_lags(dmat))
        report = variogram_ttest(est, model, lags, level=args.level)
    write_variogram_csv(args.out, est, report, header_lines=(
        f"graphfields: {__version__}", f"estimator: {kind}",
        f"graph: {args.graph}", f"realizations: {args.realizations}",
        f"bins: {args.bins}", f"model: {model_text or ''}"))
    print(f"wrote {args.out}: {est.lag_centers.size} bins from {values.shape[1]} replicates")
    if report is not None:
        for row in report.rows:
            verdict = "accept" if row.accept else "REJECT"
            print(f"  lag {row.lag:10.4g} -> bin {row.bin_center:10.4g}: "
                  f"|T| = {abs(row.t_stat):6.3f} (critical {row.critical:.3f}) {verdict}")
    return 0


def _cmd_test(args) -> int:
    if args.what != "normality":
        raise GraphFieldsError(f"unknown test {args.what!r}")
    defaults = dict(copies=500, seed=0, batches=100, runs=100, weights_seed=0,
                    interval="-50,50", germ_loc=0.0, germ_scale=1.0,
                    threads=None, alphas=None, reps=None)
    defaults["threads"] = _env_threads()
    _resolve(args, defaults)
    g = load_graph(args.graph)
    locations = load_points(g, args.locations)
    args.reps = 1
    cfg = _sim_config(args)
    sys_ = build_laplacian(g)
    weights = normality_weights(len(locations), seed=args.weights_seed)
    alphas = [float(x) for x in args.alphas.split(",")] if args.alphas else None
    report = normality_experiment(g, sys_, cfg, locations, weights,
                                  runs_per_batch=args.runs, batches=args.batches,
                                  alphas=alphas)
    write_normality_csv(args.out, report, header_lines=(
        f"graphfields: {__version__}", f"graph: {args.graph}",
        f"locations: {args.locations}", f"algorithm: {cfg.algorithm}",
        f"model: {model_spec(cfg.model)}", f"copies: {cfg.copies}",
        f"seed: {cfg.seed}", f"weights_seed: {args.weights_seed}",
        f"batches: {args.batches}", f"runs: {args.runs}"))
    print(f"wrote {args.out}: {report.fraction_in_band:.0%} of levels inside the 90% band")
    return 0


@dataclass
class BenchReport:
    """Wall time per target point count, with the fitted log-log slope."""

    backend: str
    rows: list[tuple[int, float]]
    slope: float
    setup_seconds: float


def benchmark(g: MetricGraph, cfg: SimConfig, point_counts, kernels=None,
              repeats: int = 3) -> BenchReport:
    """Time one realization at each point count; counts must be multiples of the edge count.

    Graph load and factorization are excluded from the per-count times (and
    reported separately); a warmup run at the smallest size stabilizes the
    log-log slope fit.
    """
    counts = [int(c) for c in point_counts]
    if sorted(counts) != counts or len(set(counts)) != len(counts):
        raise GraphFieldsError("point counts must be strictly increasing")
    for c in counts:
        if c % g.n_edges:
            raise GraphFieldsError(
                f"count {c} is not reachable with equispaced points on {g.n_edges} edges")
    kern = kernels if kernels is not None else get_kernels("auto")
    t0 = time.perf_counter()
    sys_ = build_laplacian(g)
    pointsets = {c: discretize(g, c // g.n_edges) for c in counts}
    setup = time.perf_counter() - t0

    one = SimConfig(cfg.algorithm, cfg.model, cfg.copies, 1, cfg.seed, cfg.interval,
                    cfg.germ, 1)
    simulate(g, sys_, pointsets[counts[0]], one, kernels=kern)  # warmup
    rows = []
    for c in counts:
        best = math.inf
        runs = repeats if c <= 130_000 else 1
        for _ in range(runs):
            rs = simulate(g, sys_, pointsets[c], one, kernels=kern)
            best = min(best, rs.wall_seconds)
        rows.append((c, best))
    slope = float(np.polyfit(np.log([c for c, _ in rows]), np.log([t for _, t in rows]), 1)[0])
    return BenchReport(kern.BACKEND_NAME, rows, slope, setup)


def _cmd_bench(args) -> int:
    defaults = dict(copies=100, seed=0, counts=None, per_edge=None, backend="auto",
                    repeats=3, out=None, interval="-50,50", germ_loc=0.0,
                    germ_scale=1.0, reps=None, threads=None)
    _resolve(args, defaults)
    g = load_graph(args.graph)
    if args.counts:
        counts = [int(x) for x in args.counts.split(",")]
    else:
        per_edge = [int(x) for x in (args.per_edge or "32,64,128,256,512,1024").split(",")]
        counts = [k * g.n_edges for k in per_edge]
    args.reps = 1
    args.threads = 1
    cfg = _sim_config(args)
    backends = list(available_backends()) if args.backend == "both" else [args.backend]
    reports = [benchmark(g, cfg, counts, kernels=get_kernels(b), repeats=args.repeats)
               for b in backends]
    lines = []
    for rep in reports:
        print(f"backend {rep.backend}: setup {rep.setup_seconds:.3f} s, "
              f"log-log slope {rep.slope:.3f}")
        for c, t in rep.rows:
            print(f"  {c:>9,d} points  {t:9.3f} s")
            lines.append(f"{rep.backend},{c},{t:.6f}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(f"# graphfields: {__version__}\n# algorithm: {cfg.algorithm}\n"
                     f"# model: {model_spec(cfg.model)}\n# copies: {cfg.copies}\n")
            for rep in reports:
                fh.write(f"# slope[{rep.backend}]: {rep.slope:.6f}\n")
            fh.write("backend,points,seconds\n")
            fh.write("\n".join(lines) + "\n")
        print(f"wrote {args.out}")
    return 0


def write_examples(directory: str) -> list[str]:
    """Emit the bundled synthetic networks as JSON graph documents."""
    os.makedirs(directory, exist_ok=True)
    written = []
    for name, builder in BUNDLED.items():
        path = os.path.join(directory, f"{name}.json")
        write_graph_json(builder(), path)
        written.append(path)
    return written


def _cmd_examples(args) -> int:
    files = write_examples(args.out_dir)
    for path in files:
        print(path)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common_sim_options(p: argparse.ArgumentParser):
    p.add_argument("--model", required=True, help="model spec, e.g. S1:a=0.2 or D2:a=0.2")
    p.add_argument("--copies", "--M", dest="copies", type=int, help="independent copies per realization")
    p.add_argument("--seed", type=int)
    p.add_argument("--interval", help="poisson germ interval 'lo,hi' or 'adaptive' (D1 only)")
    p.add_argument("--germ-loc", type=float, help="germ importance density location")
    p.add_argument("--germ-scale", type=float, help="germ importance density scale")
    p.add_argument("--threads", type=int)
    p.add_argument("--config", help="flat key = value config file (CLI flags win)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphfields",
        description="Simulate Gaussian random fields on graphs with Euclidean edges.",
    )
    parser.add_argument("--version", action="version", version=f"graphfields {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress details")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("graph", help="graph file utilities")
    p.add_argument("action", choices=["validate"])
    p.add_argument("path")
    p.set_defaults(func=_cmd_graph)

    p = sub.add_parser("simulate", help="simulate a random field and write realizations CSV")
    p.add_argument("--graph", required=True)
    p.add_argument("--algorithm", required=True, choices=["spectral", "poisson", "germ"])
    _add_common_sim_options(p)
    p.add_argument("--reps", type=int, help="number of realizations")
    p.add_argument("--points-per-edge", type=int)
    p.add_argument("--include-vertices", action="store_const", const=True, default=None)
    p.add_argument("--points", help="points CSV (kind,ref,t) instead of --points-per-edge")
    p.add_argument("--backend", choices=["auto", "compiled", "python"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("resistance", help="write the pairwise resistance matrix CSV")
    p.add_argument("--graph", required=True)
    p.add_argument("--points-per-edge", type=int)
    p.add_argument("--include-vertices", action="store_const", const=True, default=None)
    p.add_argument("--points")
    p.add_argument("--pair-cap", type=int)
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_resistance)

    for kind, name in (("semivariogram", "variogram"), ("semimadogram", "madogram")):
        p = sub.add_parser(name, help=f"empirical {kind} of saved realizations")
        p.add_argument("--graph", required=True)
        p.add_argument("--realizations", required=True, help="realizations CSV from `simulate`")
        p.add_argument("--bins", type=int)
        p.add_argument("--model", help="model spec for theory/T columns (default: file header)")
        p.add_argument("--lags", help="comma-separated testing lags (default: scale-relative)")
        p.add_argument("--level", type=float)
        p.add_argument("--config")
        p.add_argument("--out", required=True)
        p.set_defaults(func=lambda a, _k=kind: _cmd_variogram(a, _k))

    p = sub.add_parser("test", help="statistical validation experiments")
    p.add_argument("what", choices=["normality"])
    p.add_argument("--graph", required=True)
    p.add_argument("--algorithm", required=True, choices=["spectral", "poisson", "germ"])
    _add_common_sim_options(p)
    p.add_argument("--locations", required=True, help="points CSV of the test locations")
    p.add_argument("--weights-seed", type=int)
    p.add_argument("--batches", type=int)
    p.add_argument("--runs", type=int, help="realizations per batch")
    p.add_argument("--alphas", help="comma-separated significance levels")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_test)

    p = sub.add_parser("bench", help="runtime scaling over target point counts")
    p.add_argument("--graph", required=True)
    p.add_argument("--algorithm", required=True, choices=["spectral", "poisson", "germ"])
    _add_common_sim_options(p)
    p.add_argument("--counts", help="comma-separated target point counts")
    p.add_argument("--per-edge", help="comma-separated points-per-edge values (default 32..1024)")
    p.add_argument("--repeats", type=int)
    p.add_argument("--backend", choices=["auto", "compiled", "python", "both"])
    p.add_argument("--out")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("examples", help="write the bundled synthetic networks")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_examples)

    return parser


def cli_dispatch(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except GraphFieldsError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc.filename}", file=_sys.stderr)
        return 1


def main() -> None:
    raise SystemExit(cli_dispatch())


if __name__ == "__main__":
    main()
