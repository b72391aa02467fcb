import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hmera import __version__
from hmera import cli
from hmera import superop as so
from hmera.tiling import TilingGraph, build_tiling


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


def read_csv(text):
    lines = text.splitlines()
    assert lines[0].startswith("# ")
    meta = json.loads(lines[0][2:])
    header = lines[1].split(",")
    rows = [line.split(",") for line in lines[2:]]
    return meta, header, rows


def test_tile_output_round_trips_and_embeds_config(capsys):
    data = run_json(capsys, "tile", "--layers", "3")
    assert data["version"] == __version__ and data["command"] == "tile"
    assert data["config"]["layers"] == 3
    g = TilingGraph.from_dict(data["result"])
    ref = build_tiling(5, 4, 3)
    assert g.roles == ref.roles and g.boundary == ref.boundary
    assert data["result"]["layer_counts"][1:] == [[5, 0], [10, 5], [25, 15]]


def test_tile_writes_file(tmp_path, capsys):
    path = tmp_path / "g.json"
    assert cli.main(["tile", "--layers", "2", "--out", str(path)]) == 0
    assert json.loads(path.read_text())["config"]["layers"] == 2


def test_build_from_graph_file(tmp_path, capsys):
    path = tmp_path / "g.json"
    path.write_text(build_tiling(5, 4, 2).to_json())
    data = run_json(capsys, "build", "--graph", str(path), "--regular")
    assert data["result"]["regular"] is True


@pytest.mark.parametrize("argv", [["frobnicate"], ["tile", "--layers", "x"], ["verify", "--suite", "nope"],
                                  ["tile", "--p", "4", "--q", "4"], ["probs", "--jobs", "0"],
                                  ["rdm", "--region", "1,a"], ["probs", "--layers", "8"], ["push", "--bulk", "L9T9"]])
def test_usage_errors_exit_one_with_json(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 1
    assert json.loads(err.strip().splitlines()[-1])["error"] == "usage"


def test_unknown_config_key_is_usage_error(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"layers": 2, "gamma": 1}))
    code, _, err = run(capsys, "tile", "--config", str(path))
    assert code == 1 and "gamma" in err


def test_config_file_then_flags(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"layers": 2, "theta": 0.1, "seed": 5}))
    data = run_json(capsys, "tile", "--config", str(path), "--theta", "0.2")
    assert data["config"]["layers"] == 2
    assert data["config"]["theta"] == 0.2
    assert data["config"]["seed"] == 5


def test_seed_environment_variable_overrides(capsys, monkeypatch):
    monkeypatch.setenv("HMERA_SEED", "77")
    data = run_json(capsys, "tile", "--layers", "1", "--seed", "3")
    assert data["config"]["seed"] == 77
    monkeypatch.setenv("HMERA_SEED", "abc")
    assert run(capsys, "tile", "--layers", "1")[0] == 1


def test_verify_passes_and_fails_on_tolerance(capsys):
    data = run_json(capsys, "verify", "--suite", "kl")
    assert data["result"]["ok"] is True
    data = run_json(capsys, "verify", "--suite", "isometry")
    assert data["result"]["ok"] is True
    code, out, _ = run(capsys, "verify", "--suite", "superop", "--tol", "-1")
    assert code == 2
    assert json.loads(out)["result"]["ok"] is False


def test_probs_is_deterministic_for_a_seed(capsys):
    argv = ["probs", "--layers", "10", "--samples", "2000", "--seed", "4"]
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv, "--jobs", "2")
    assert first == second
    data = json.loads(first)["result"]
    assert data["monte_carlo"]["samples"] == 2000
    assert set(data["z_scores"]) == {"1->1", "1->2", "2->1", "2->2", "2->3", "3->2", "3->3"}


def test_superop_perfect_csv(capsys):
    code, out, _ = run(capsys, "superop", "--kind", "perfect", "--beta-sweep", "8")
    assert code == 0
    meta, header, rows = read_csv(out)
    assert header == ["beta", "re", "im"]
    assert len(rows) == 8 * 16
    assert meta["config"]["alpha"] == pytest.approx(math.pi / 3)
    betas = sorted({float(r[0]) for r in rows})
    assert all(0 < b < 2 * math.pi for b in betas)
    first = [complex(float(r[1]), float(r[2])) for r in rows if float(r[0]) == betas[0]]
    ref = so.perfect_superop(math.pi / 3, betas[0]).eigenvalues()
    assert np.allclose(first, ref, atol=0)


def test_superop_imperfect_and_panels(capsys):
    code, out, _ = run(capsys, "superop", "--kind", "imperfect", "--theta", "0.4", "--legs", "3,4")
    _, header, rows = read_csv(out)
    assert header == ["input", "image_norm"] and len(rows) == 256
    norms = dict((r[0], float(r[1])) for r in rows)
    assert norms["II.II"] == pytest.approx(1.0)
    data = run_json(capsys, "superop", "--kind", "panels")
    assert 0 < data["result"]["lambda_bar"] < 1
    assert set(data["result"]["panels"]) == {str(k) for k in range(1, 9)}


def test_rdm_command(capsys):
    data = run_json(capsys, "rdm", "--layers", "2", "--region", "3")
    assert data["result"]["rank"] == 4
    assert data["result"]["purity"] == pytest.approx(0.25)


def test_correlate_csv_columns(capsys):
    code, out, _ = run(capsys, "correlate", "--layers", "2", "--sites", "0,30")
    assert code == 0
    _, header, rows = read_csv(out)
    assert header == list(cli.an.CSV_COLUMNS)
    assert len(rows) == 225


def test_push_command(capsys):
    data = run_json(capsys, "push", "--layers", "2", "--theta", "0", "--bulk", "L2T3", "--op", "Xbar")
    res = data["result"]
    assert res["source_id"] == "L2T3"
    assert res["residual_error"] < 1e-10
    assert len(res["boundary_ops"]) >= 1


def test_repro_fig3_matches_superop(capsys):
    _, a, _ = run(capsys, "repro", "fig3", "--beta-sweep", "4")
    _, b, _ = run(capsys, "superop", "--beta-sweep", "4")
    assert a.splitlines()[1:] == b.splitlines()[1:]


def test_repro_tiling(capsys):
    _, out, _ = run(capsys, "repro", "tiling", "--layers", "5")
    _, header, rows = read_csv(out)
    assert header[:3] == ["layer", "ep", "vp"]
    assert [int(r[1]) for r in rows] == [5, 10, 25, 65, 170]


def test_version_flag(capsys):
    with pytest.raises(SystemExit):
        cli.main(["--version"])
    assert __version__ in capsys.readouterr().out


@settings(max_examples=40, deadline=None)
@given(layers=st.integers(0, 20), theta=st.floats(0, 1.5), seed=st.integers(0, 2 ** 64 - 1),
       phi=st.lists(st.floats(-0.5, 0.5), min_size=5, max_size=5))
def test_run_config_round_trip(layers, theta, seed, phi):
    cfg = cli.RunConfig(layers=layers, theta=theta, seed=seed, phi=tuple(phi), options={"k": [1, 2]})
    text = json.dumps(cfg.to_dict())
    assert cli.RunConfig.from_dict(json.loads(text)) == cfg


def test_run_config_validation():
    with pytest.raises(cli.UsageError):
        cli.RunConfig(phi=(0.0,))
    with pytest.raises(cli.UsageError):
        cli.RunConfig(seed=-1)
    with pytest.raises(cli.UsageError):
        cli.RunConfig(layers=-2)
