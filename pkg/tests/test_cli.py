import json
import subprocess
import sys

import pytest

from netspread.cli import main


def test_ingest_summary(small_files, capsys):
    rc = main(["ingest", "--nodes", str(small_files["nodes"]),
               "--edges", str(small_files["edges"]),
               "--variables", str(small_files["variables"])])
    assert rc == 0
    out = json.loads(capsys.readouterr().out)
    assert out["n"] == 5 and out["m"] == 4
    assert out["variable_columns"] == ["DFW", "GDP", "CST"]


def test_ingest_bad_file_exit_code(small_files, tmp_path):
    bad = tmp_path / "bad_edges.csv"
    bad.write_text("origin,dest,weight\nCHN,CHN,5\n")
    rc = main(["ingest", "--nodes", str(small_files["nodes"]),
               "--edges", str(bad)])
    assert rc == 2


def test_metrics_command(small_files, tmp_path, capsys):
    out = tmp_path / "metrics.csv"
    rc = main(["metrics", "--nodes", str(small_files["nodes"]),
               "--edges", str(small_files["edges"]),
               "--variables", str(small_files["variables"]),
               "--out", str(out), "--reference", "CHN"])
    assert rc == 0
    lines = out.read_text().splitlines()
    header = lines[0].split(",")
    assert header[:4] == ["code", "DFW", "GDP", "CST"]
    assert "ECCFC" in header
    assert len(lines) == 6
    # path ends are degree-1 on the undirected view: clustering note emitted
    assert "clustering set to 0" in capsys.readouterr().err


def test_fit_command(small_files, tmp_path, capsys):
    data = tmp_path / "xy.csv"
    rows = ["code,t,k"] + [f"N{i:02d},{i},{2 * i + 1}" for i in range(10)]
    data.write_text("\n".join(rows) + "\n")
    out = tmp_path / "fit.json"
    rc = main(["fit", "--data", str(data), "--x", "t", "--y", "k",
               "--families", "poly1,exp1,log1", "--out", str(out)])
    assert rc == 0
    payload = json.loads(out.read_text())
    assert payload["ranked"][0]["family"] == "Poly1"
    assert payload["ranked"][0]["coefficients"]["b1"] == pytest.approx(2.0)
    assert any(s["family"] == "Log1" for s in payload["skipped"])  # x=0 row
    assert "best: Poly1" in capsys.readouterr().out


def test_kde_command_with_cut(tmp_path, capsys):
    import numpy as np
    rng = np.random.default_rng(1)
    values = np.concatenate([rng.normal(30, 5, 38), rng.normal(60, 5, 37)])
    data = tmp_path / "v.csv"
    data.write_text("code,DFW\n" + "".join(
        f"N{i:02d},{int(abs(v))}\n" for i, v in enumerate(values)))
    out = tmp_path / "density.csv"
    rc = main(["kde", "--data", str(data), "--column", "DFW",
               "--out", str(out), "--cut"])
    assert rc == 0
    assert out.read_text().splitlines()[0] == "grid_x,density"
    sidecar = json.loads((tmp_path / "density.csv.cut.json").read_text())
    assert 40 < sidecar["cut"] < 55
    assert "cut at" in capsys.readouterr().out


def test_kde_unimodal_cut_exit_code(tmp_path):
    import numpy as np
    rng = np.random.default_rng(2)
    data = tmp_path / "v.csv"
    data.write_text("code,DFW\n" + "".join(
        f"N{i:02d},{int(abs(v))}\n"
        for i, v in enumerate(rng.normal(45, 8, 75))))
    rc = main(["kde", "--data", str(data), "--out", str(tmp_path / "d.csv"),
               "--cut"])
    assert rc == 3


def test_stages_command(small_files, tmp_path, capsys):
    out = tmp_path / "stages.csv"
    rc = main(["stages", "--data", str(small_files["variables"]),
               "--cut", "44", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[1] == "CHN,First"
    assert lines[-1] == "DDD,Second"
    assert "First: 4" in capsys.readouterr().out


def test_ttest_command(tmp_path, capsys):
    rows = ["code,DFW,GDP,APRT"]
    for i in range(8):
        dfw = 10 + i * 10
        gdp = 100 - i * 10
        rows.append(f"N{i:02d},{dfw},{gdp},{5 + i % 2}")
    data = tmp_path / "v.csv"
    data.write_text("\n".join(rows) + "\n")
    out = tmp_path / "battery.csv"
    rc = main(["ttest", "--data", str(data), "--cut", "44",
               "--out", str(out)])
    assert rc == 0
    header = out.read_text().splitlines()[0]
    assert header == "variable,group,n_a,n_b,diff,ci_lo,ci_hi,significant"
    assert "tested 2 columns" in capsys.readouterr().out


def test_run_and_report_commands(fixture_paths, tmp_path, capsys):
    out_dir = tmp_path / "out"
    rc = main(["run", "--nodes", str(fixture_paths["nodes"]),
               "--edges", str(fixture_paths["edges"]),
               "--variables", str(fixture_paths["variables"]),
               "--out-dir", str(out_dir)])
    assert rc == 0
    assert "n=75 m=179" in capsys.readouterr().out
    rc = main(["report", "--out-dir", str(out_dir)])
    assert rc == 0
    rebuilt = json.loads(capsys.readouterr().out)
    assert {a["name"] for a in rebuilt["artifacts"]} >= {"metrics.csv",
                                                         "battery.csv"}


def test_run_skip_stages(fixture_paths, tmp_path):
    out_dir = tmp_path / "out"
    rc = main(["run", "--nodes", str(fixture_paths["nodes"]),
               "--edges", str(fixture_paths["edges"]),
               "--variables", str(fixture_paths["variables"]),
               "--out-dir", str(out_dir),
               "--skip", "charts,map,fits,battery"])
    assert rc == 0
    names = {p.name for p in out_dir.iterdir()}
    assert names == {"metrics.csv", "density.csv", "stage_cut.json",
                     "stages.csv", "report.json"}


def test_run_missing_file_exit_code(fixture_paths, tmp_path):
    rc = main(["run", "--nodes", str(fixture_paths["nodes"]),
               "--edges", str(tmp_path / "nope.csv"),
               "--variables", str(fixture_paths["variables"]),
               "--out-dir", str(tmp_path / "out")])
    assert rc == 2


def test_config_file_supplies_defaults_flags_override(fixture_paths, tmp_path,
                                                      capsys):
    out_dir = tmp_path / "from_config"
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        f"nodes = {fixture_paths['nodes']}\n"
        f"edges = {fixture_paths['edges']}\n"
        f"variables = {fixture_paths['variables']}\n"
        f"out-dir = {out_dir}\n"
        "t-cut = 40\n"
        "# comment lines are fine\n"
        "pooled = true\n")
    rc = main(["run", "--config", str(cfg), "--t-cut", "47"])
    assert rc == 0
    report = json.loads((out_dir / "report.json").read_text())
    assert report["config"]["t_cut"] == 47.0  # flag beats config
    assert report["config"]["pooled"] is True
    assert report["battery"]["variance"] == "pooled"


def test_netspread_out_env_default(fixture_paths, tmp_path, monkeypatch,
                                   capsys):
    env_dir = tmp_path / "env_out"
    monkeypatch.setenv("NETSPREAD_OUT", str(env_dir))
    rc = main(["run", "--nodes", str(fixture_paths["nodes"]),
               "--edges", str(fixture_paths["edges"]),
               "--variables", str(fixture_paths["variables"])])
    assert rc == 0
    assert (env_dir / "report.json").is_file()


def test_console_entry_point_wiring(fixture_paths, tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "netspread", "ingest",
         "--nodes", str(fixture_paths["nodes"]),
         "--edges", str(fixture_paths["edges"])],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["n"] == 75
