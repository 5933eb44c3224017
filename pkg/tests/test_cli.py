import json
import math
import os

import pytest

from graphfields import load_graph, validate_graph
from graphfields.cli import BenchReport, benchmark, build_parser, cli_dispatch, write_examples
from graphfields.errors import GraphFieldsError
from graphfields.networks import triangle
from graphfields.simulate import SimConfig
from graphfields.covmodels import parse_model


@pytest.fixture(scope="module")
def nets_dir(tmp_path_factory):
    directory = tmp_path_factory.mktemp("nets")
    write_examples(str(directory))
    return directory


def test_examples_emit_expected_networks(nets_dir):
    names = sorted(p for p in os.listdir(nets_dir))
    assert names == ["grid-bridge.json", "parallel-route.json", "path-3.json",
                     "streets-503.json", "triangle.json", "unit-edge.json"]
    for name in names:
        g = load_graph(str(nets_dir / name))
        assert validate_graph(g).ok


def test_streets503_matches_target_scale(nets_dir):
    g = load_graph(str(nets_dir / "streets-503.json"))
    assert g.n_vertices == 338
    assert g.n_edges == 503


def test_grid_bridge_has_distant_bridge_endpoints(nets_dir):
    g = load_graph(str(nets_dir / "grid-bridge.json"))
    bridge = g.edge("bridge1")
    u, v = g.vertex(bridge.source), g.vertex(bridge.target)
    euclid = math.hypot(u.x - v.x, u.y - v.y)
    assert euclid > 5 * bridge.length  # declared length far below embedding distance


def test_examples_reload_losslessly(nets_dir, tmp_path):
    from graphfields.graphs import graph_to_json

    for name in os.listdir(nets_dir):
        g = load_graph(str(nets_dir / name))
        assert graph_to_json(g) == (nets_dir / name).read_text()


def test_graph_validate_ok(nets_dir, capsys):
    assert cli_dispatch(["graph", "validate", str(nets_dir / "triangle.json")]) == 0
    assert "ok" in capsys.readouterr().out


def test_graph_validate_disconnected(tmp_path, capsys):
    doc = {"vertices": [{"id": v} for v in "abcd"],
           "edges": [{"id": "e1", "source": "a", "target": "b", "length": 1.0},
                     {"id": "e2", "source": "c", "target": "d", "length": 1.0}]}
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert cli_dispatch(["graph", "validate", str(bad)]) == 1
    assert "disconnected" in capsys.readouterr().err


def test_unknown_subcommand_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        cli_dispatch(["frobnicate"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        cli_dispatch(["simulate", "--bogus-flag"])
    assert exc.value.code == 2


def test_missing_file_reports_error(capsys):
    assert cli_dispatch(["graph", "validate", "/nonexistent/g.json"]) == 1


def test_simulate_deterministic_and_reproducible(nets_dir, tmp_path, capsys):
    args = ["simulate", "--graph", str(nets_dir / "triangle.json"),
            "--algorithm", "spectral", "--model", "S1:a=0.2", "--M", "40",
            "--reps", "3", "--points-per-edge", "2", "--seed", "42"]
    out1, out2 = tmp_path / "y1.csv", tmp_path / "y2.csv"
    assert cli_dispatch(args + ["--out", str(out1)]) == 0
    assert cli_dispatch(args + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    # threads must not change the bytes either
    out4 = tmp_path / "y4.csv"
    assert cli_dispatch(args + ["--threads", "4", "--out", str(out4)]) == 0
    assert out1.read_bytes() == out4.read_bytes()
    header = out1.read_text().splitlines()
    assert any(line.startswith("# seed: 42") for line in header)


def test_simulate_rejects_model_mismatch(nets_dir, tmp_path, capsys):
    code = cli_dispatch(["simulate", "--graph", str(nets_dir / "triangle.json"),
                         "--algorithm", "spectral", "--model", "D2:a=0.2",
                         "--points-per-edge", "1", "--out", str(tmp_path / "x.csv")])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_resistance_export(nets_dir, tmp_path, capsys):
    out = tmp_path / "d.csv"
    assert cli_dispatch(["resistance", "--graph", str(nets_dir / "unit-edge.json"),
                         "--points-per-edge", "1", "--include-vertices",
                         "--out", str(out)]) == 0
    rows = [line for line in out.read_text().splitlines() if not line.startswith("#")]
    assert rows[0].split(",")[0] == "point_id"
    assert len(rows) == 4  # header + 3 points


def test_variogram_and_madogram_flow(nets_dir, tmp_path, capsys):
    reals = tmp_path / "y.csv"
    assert cli_dispatch(["simulate", "--graph", str(nets_dir / "triangle.json"),
                         "--algorithm", "germ", "--model", "D2:a=0.6", "--M", "30",
                         "--reps", "50", "--points-per-edge", "4", "--seed", "1",
                         "--out", str(reals)]) == 0
    for cmd in ("variogram", "madogram"):
        out = tmp_path / f"{cmd}.csv"
        assert cli_dispatch([cmd, "--graph", str(nets_dir / "triangle.json"),
                             "--realizations", str(reals), "--bins", "6",
                             "--lags", "0.2,0.45,0.6", "--out", str(out)]) == 0
        lines = [line for line in out.read_text().splitlines() if not line.startswith("#")]
        assert lines[0] == "lag_center,count,mean,theory,t_stat"
        assert len(lines) > 3
        # model comes from the realization header, so theory column is filled
        assert lines[1].split(",")[3] != ""


def test_normality_flow(nets_dir, tmp_path, capsys):
    locs = tmp_path / "locs.csv"
    locs.write_text("kind,ref,t\nedge,e1,0.5\nedge,e2,0.5\n")
    out = tmp_path / "norm.csv"
    assert cli_dispatch(["test", "normality", "--graph", str(nets_dir / "triangle.json"),
                         "--algorithm", "spectral", "--model", "S1:a=0.5",
                         "--M", "20", "--locations", str(locs), "--batches", "5",
                         "--runs", "30", "--seed", "3", "--out", str(out)]) == 0
    lines = [line for line in out.read_text().splitlines() if not line.startswith("#")]
    assert lines[0] == "alpha,proportion,band_lo,band_hi"
    assert len(lines) == 21


def test_config_file_precedence(nets_dir, tmp_path):
    cfg = tmp_path / "run.conf"
    cfg.write_text("seed = 9\ncopies = 25\n")
    args = ["simulate", "--graph", str(nets_dir / "triangle.json"),
            "--algorithm", "spectral", "--model", "S1:a=0.2",
            "--points-per-edge", "1", "--config", str(cfg)]
    out1 = tmp_path / "a.csv"
    assert cli_dispatch(args + ["--out", str(out1)]) == 0
    text = out1.read_text()
    assert "# seed: 9" in text and "# copies: 25" in text
    # explicit flag beats the config file
    out2 = tmp_path / "b.csv"
    assert cli_dispatch(args + ["--seed", "3", "--out", str(out2)]) == 0
    assert "# seed: 3" in out2.read_text()


def test_benchmark_counts_and_slope():
    g = triangle()
    cfg = SimConfig("spectral", parse_model("S1:a=0.5"), copies=10, reps=1, seed=0)
    report = benchmark(g, cfg, [3 * 8, 3 * 16, 3 * 32], repeats=1)
    assert isinstance(report, BenchReport)
    assert [c for c, _ in report.rows] == [24, 48, 96]
    assert all(t > 0 for _, t in report.rows)
    with pytest.raises(GraphFieldsError):
        benchmark(g, cfg, [7])  # not a multiple of the edge count
    with pytest.raises(GraphFieldsError):
        benchmark(g, cfg, [48, 24])  # not increasing


def test_bench_cli_flow(nets_dir, tmp_path, capsys):
    out = tmp_path / "bench.csv"
    assert cli_dispatch(["bench", "--graph", str(nets_dir / "triangle.json"),
                         "--algorithm", "germ", "--model", "D2:a=0.5",
                         "--copies", "10", "--per-edge", "4,8,16",
                         "--repeats", "1", "--backend", "both", "--out", str(out)]) == 0
    text = out.read_text()
    assert "backend,points,seconds" in text
    assert "compiled," in text or "python," in text


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(["--version"])
    assert exc.value.code == 0
