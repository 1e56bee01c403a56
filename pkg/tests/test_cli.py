from __future__ import annotations

import json
import subprocess
import sys

import pytest

from deloc.cli import main
from deloc.experiments import ExperimentConfig, build_graph, hard_failures, run
from deloc.graph_core import GraphError, complete_graph, write_edge_list


def report_of(tmp_path, *argv):
    out = tmp_path / "rep.json"
    code = main([*argv, "--out", str(out)])
    return code, json.loads(out.read_text())


def test_transitive_command(tmp_path):
    code, rep = report_of(tmp_path, "transitive", "--graph", "cycle:30", "--trials", "20")
    assert code == 0
    assert rep["command"] == "transitive"
    names = {c["name"] for c in rep["claims"]}
    assert {"projector_constancy", "deterministic_sup_bound"} <= names
    assert (tmp_path / "rep.trials.csv").read_text().startswith("trial,")


def test_non_transitive_graph_warns(tmp_path):
    code, rep = report_of(tmp_path, "transitive", "--graph", "star:4", "--trials", "5")
    assert code == 0
    assert rep["warnings"] and "not vertex-transitive" in rep["warnings"][0]


def test_product_command(tmp_path):
    code, rep = report_of(tmp_path, "product", "--graph", "cycle:12", "--graph2", "star:2", "--rule", "strong", "--trials", "10")
    assert code == 0
    assert rep["claims"][0]["name"] == "fibre_constancy" and rep["claims"][0]["pass"]


def test_gaussian_command(tmp_path):
    code, rep = report_of(tmp_path, "gaussian", "--m", "9,49", "--trials", "5", "--grid", "21")
    assert code == 0
    assert len(rep["summary"]["mean_w1"]) == 2


def test_qe_and_deloc_commands(tmp_path):
    code, rep = report_of(tmp_path, "qe", "--graph", "complete:30", "--trials", "50", "--t", "2", "--parts", "3")
    assert code == 0 and rep["summary"]["multiplicity"] == 29
    code, rep = report_of(tmp_path, "deloc", "--size", "60", "--counts", "5,20", "--trials", "200", "--window", "idx:0-9")
    assert code == 0
    assert not hard_failures(rep)


def test_lift_rejects_cycle_base(capsys):
    assert main(["lift", "--base", "cycle:5", "--n", "10"]) == 2
    assert "cycle" in capsys.readouterr().err


def test_bad_graph_spec_exit_code(capsys):
    assert main(["transitive", "--graph", "nonsense:3"]) == 2


def test_config_replay_is_byte_identical(tmp_path, monkeypatch):
    cfg_path = tmp_path / "cfg.json"
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    assert main(["deloc", "--size", "40", "--counts", "8", "--trials", "300", "--seed", "5", "--out", str(a), "--save-config", str(cfg_path)]) == 0
    cfg = json.loads(cfg_path.read_text())
    cfg["out"] = str(b)
    cfg_path.write_text(json.dumps(cfg))
    monkeypatch.setenv("DELOC_WORKERS", "3")
    assert main(["--config", str(cfg_path)]) == 0
    ra, rb = json.loads(a.read_text()), json.loads(b.read_text())
    ra["config"].pop("out"), rb["config"].pop("out")
    assert ra == rb


def test_config_json_round_trip():
    cfg = ExperimentConfig(command="lift", base="complete:4", n=[10], extra={"window_const": 2.0})
    assert ExperimentConfig.from_json(cfg.to_json()) == cfg


def test_build_graph_specs(tmp_path):
    assert build_graph("hypercube:3").n == 8
    assert build_graph("cyclic:7:1,6").n == 7
    path = tmp_path / "k4.txt"
    write_edge_list(complete_graph(4), path)
    assert build_graph(f"edges:{path}").edge_count == 6
    with pytest.raises(GraphError):
        build_graph("torus:3")


def test_small_lift_runs():
    rep = run(ExperimentConfig(command="lift", base="complete:4", n=[20], trials=20))
    assert rep["tables"]["lifts"][0]["vertices"] == 80
    assert not hard_failures(rep)


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "deloc.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "transitive" in out.stdout
