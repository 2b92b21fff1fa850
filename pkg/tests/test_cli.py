import math

import pytest
import yaml

from popsync import cli
from popsync.analyzer import AnalyzerError
from popsync.reports import read_critical_csv, read_sweep_csv, read_table

from conftest import TABLE_K, THREE_K

IDENT = [{"n": 100, "delta": 1.0, "omega0": 2.0}] * 2
HETERO = [{"n": 100, "delta": 1.0, "omega0": 2.0}, {"n": 100, "delta": 0.5, "omega0": 4.0}]
QUICK = {"dt": 0.05, "t_transient": 10, "t_average": 10, "seed": 3}


def write_cfg(tmp_path, pops, k, name="run.yaml", **extra):
    doc = {"populations": pops, "coupling": {"k": k}, "output_dir": str(tmp_path / "out")}
    doc.update(extra)
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc))
    return path


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_analyze_case_a_identical(tmp_path, capsys):
    cfg = write_cfg(tmp_path, IDENT, TABLE_K["A"])
    assert run("analyze", "--config", cfg) == 0
    rows = read_critical_csv(tmp_path / "out" / "critical.csv")
    assert len(rows) == 1
    assert rows[0]["eta_star"] == 4.0 and rows[0]["is_relevant"]
    assert "positive 4" in capsys.readouterr().out


def test_analyze_case_h_identical_is_empty(tmp_path, capsys):
    cfg = write_cfg(tmp_path, IDENT, TABLE_K["H"])
    assert run("analyze", "--config", cfg) == 0
    assert read_critical_csv(tmp_path / "out" / "critical.csv") == []
    assert "no synchronization for any coupling strength" in capsys.readouterr().out


def test_analyze_three_populations(tmp_path):
    pops = HETERO + [{"n": 100, "delta": 1 / 3, "omega0": 1.0}]
    cfg = write_cfg(tmp_path, pops, THREE_K)
    assert run("analyze", "--config", cfg) == 0
    rows = read_critical_csv(tmp_path / "out" / "critical.csv")
    assert len(rows) == 3
    relevant = sorted(r["eta_star"] for r in rows if r["is_relevant"])
    assert relevant == pytest.approx([-0.564, 2.303], abs=5e-3)
    assert all(r["residual"] < 1e-6 for r in rows)


def test_analyze_is_idempotent(tmp_path):
    cfg = write_cfg(tmp_path, HETERO, TABLE_K["E"])
    run("analyze", "--config", cfg)
    first = (tmp_path / "out" / "critical.csv").read_bytes()
    run("analyze", "--config", cfg)
    assert (tmp_path / "out" / "critical.csv").read_bytes() == first


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.update(colour="red"),
        lambda d: d["populations"][0].update(delta=-1.0),
        lambda d: d["coupling"].update(k=[[1, 2, 3], [4, 5, 6]]),
        lambda d: d.update(sim={"dt": 0}),
        lambda d: d.update(sim={"eta_grid": {"min": 1, "max": 0, "step": 0.1}}),
    ],
)
def test_config_errors_exit_2(tmp_path, capsys, mutate):
    doc = {"populations": [dict(p) for p in IDENT], "coupling": {"k": TABLE_K["A"]}}
    mutate(doc)
    path = tmp_path / "bad.yaml"
    path.write_text(yaml.safe_dump(doc))
    assert run("analyze", "--config", path) == cli.EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_missing_config_file_exit_2(tmp_path):
    assert run("analyze", "--config", tmp_path / "nope.yaml") == cli.EXIT_CONFIG


def test_analyzer_failure_exit_3(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise AnalyzerError("root count changed")

    monkeypatch.setattr(cli, "analyze", boom)
    cfg = write_cfg(tmp_path, HETERO, TABLE_K["E"])
    assert run("analyze", "--config", cfg) == cli.EXIT_ANALYZER


def test_sweep_requires_grid(tmp_path):
    cfg = write_cfg(tmp_path, IDENT, TABLE_K["A"], sim=QUICK)
    assert run("sweep", "--config", cfg) == cli.EXIT_CONFIG


def test_sweep_single_point(tmp_path):
    cfg = write_cfg(tmp_path, HETERO, TABLE_K["E"], sim={**QUICK, "eta_grid": [1.0]})
    assert run("sweep", "--config", cfg) == 0
    meta, rows = read_table(tmp_path / "out" / "sweep.csv")
    assert len(rows) == 1
    assert list(rows[0]) == ["eta", "r_mean_1", "r_mean_2", "r_std_1", "r_std_2"]
    for key in ("seed", "dt", "n", "sampling_mode", "version"):
        assert key in meta
    assert meta["seed"] == "3" and meta["n"] == "100;100"


def test_sweep_bytes_deterministic_across_threads(tmp_path):
    cfg = write_cfg(tmp_path, HETERO, TABLE_K["E"],
                    sim={**QUICK, "eta_grid": {"min": -1, "max": 1, "step": 0.5}})
    run("sweep", "--config", cfg, "--out", tmp_path / "a", "--threads", 1)
    run("sweep", "--config", cfg, "--out", tmp_path / "b", "--threads", 4)
    a = (tmp_path / "a" / "sweep.csv").read_text().splitlines()
    b = (tmp_path / "b" / "sweep.csv").read_text().splitlines()
    assert [x for x in a if not x.startswith("# version")] == [x for x in b if not x.startswith("# version")]


def test_seed_flag_overrides_config(tmp_path):
    cfg = write_cfg(tmp_path, HETERO, TABLE_K["E"],
                    sim={**QUICK, "sampling_mode": "random", "eta_grid": [0.0]})
    run("sweep", "--config", cfg, "--out", tmp_path / "a", "--seed", 11)
    run("sweep", "--config", cfg, "--out", tmp_path / "b", "--seed", 12)
    ra, _, _ = read_sweep_csv(tmp_path / "a" / "sweep.csv")
    rb, _, _ = read_sweep_csv(tmp_path / "b" / "sweep.csv")
    assert ra.metadata["seed"] == "11"
    assert (ra.r_mean != rb.r_mean).any()


def test_simulate_writes_table(tmp_path, capsys):
    cfg = write_cfg(tmp_path, IDENT, TABLE_K["A"], sim=QUICK)
    assert run("simulate", "--config", cfg) == 0
    _, rows = read_table(tmp_path / "out" / "simulate.csv")
    assert [r["population"] for r in rows] == ["1", "2"]
    assert all(0 <= float(r["r_mean"]) <= 1 for r in rows)


def test_verify_null_case_is_vacuous(tmp_path, capsys):
    pops = [{"n": 400, "delta": 1.0, "omega0": 2.0}] * 2
    cfg = write_cfg(tmp_path, pops, TABLE_K["H"],
                    sim={"dt": 0.05, "t_transient": 40, "t_average": 40, "seed": 1,
                         "eta_grid": {"min": -10, "max": 10, "step": 5}})
    assert run("verify", "--config", cfg) == 0
    meta, rows = read_table(tmp_path / "out" / "verify.csv")
    assert meta["vacuous"] == "true"
    assert rows[0]["status"] == "vacuous"
    assert "vacuous" in capsys.readouterr().out


def test_verify_prediction_outside_grid_fails(tmp_path):
    cfg = write_cfg(tmp_path, IDENT, TABLE_K["A"],
                    sim={**QUICK, "eta_grid": {"min": 0, "max": 2, "step": 1}})
    assert run("verify", "--config", cfg) == cli.EXIT_MISMATCH
    _, rows = read_table(tmp_path / "out" / "verify.csv")
    assert rows[0]["status"] == "outside_grid"
    assert float(rows[0]["eta_predicted"]) == 4.0


def test_verify_depends_only_on_artifacts(tmp_path):
    cfg_path = write_cfg(tmp_path, IDENT, TABLE_K["A"],
                         sim={**QUICK, "eta_grid": {"min": 0, "max": 2, "step": 1}})
    run("verify", "--config", cfg_path)
    cfg = cli.load_run_config(cfg_path)
    first = (tmp_path / "out" / "verify.csv").read_bytes()
    report = cli.verify_from_artifacts(cfg)
    assert (tmp_path / "out" / "verify.csv").read_bytes() == first
    assert not report.passed

    # rewrite the sweep so population 1 locks at eta >= 1: the verdict follows the file
    sweep = tmp_path / "out" / "sweep.csv"
    lines = sweep.read_text().splitlines()
    header = [i for i, x in enumerate(lines) if x.startswith("eta,")][0]
    for i in range(header + 2, len(lines)):
        cells = lines[i].split(",")
        cells[1] = "0.9"
        lines[i] = ",".join(cells)
    sweep.write_text("\n".join(lines) + "\n")
    report = cli.verify_from_artifacts(cfg)
    r0 = float(lines[header + 1].split(",")[1])
    r_c = 2 / math.sqrt(100) + 0.05
    assert report.rows[0][2] == pytest.approx((r_c - r0) / (0.9 - r0), rel=1e-12)
    assert report.rows[0][-1] == "fail"
