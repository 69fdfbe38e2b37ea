import json
from pathlib import Path

import numpy as np
import pytest

from kitvqe.cli import (COMMANDS, DESK_SCALE_BUDGETS, OUTPUT_ROOT_ENV,
                        Checkpoint, ConfigError, RunConfig, config_dict,
                        load_config_file, main, make_config,
                        resolve_output_dir, write_csv)
from kitvqe.optim.base import OptResult


# --- configuration merging ----------------------------------------------

def test_defaults():
    cfg = make_config("ed", {}, {})
    assert cfg.lattice == "open8"
    assert cfg.model == "GL+h"
    assert cfg.seed == 0
    assert cfg.k == 1


def test_flags_override_file_values():
    cfg = make_config("ed", {"lattice": "open4", "k": 2}, {"k": 3})
    assert cfg.lattice == "open4"
    assert cfg.k == 3


def test_unknown_and_inapplicable_keys():
    with pytest.raises(ConfigError):
        make_config("ed", {"latice": "open4"}, {})
    with pytest.raises(ConfigError):
        make_config("ed", {"layers": 4}, {})  # a sweep key, not an ed key
    with pytest.raises(ConfigError):
        make_config("probe", {}, {})


def test_experiment_mismatch_in_file():
    with pytest.raises(ConfigError):
        make_config("ed", {"experiment": "sweep"}, {})
    cfg = make_config("ed", {"experiment": "ed", "k": 2}, {})
    assert cfg.k == 2


def test_desk_scale_fills_only_unprovided_keys():
    cfg = make_config("benchmark-optimizers",
                      {"lattice": "open16", "desk_scale": True},
                      {"restarts": 5})
    assert cfg.restarts == 5          # explicitly provided, kept
    assert cfg.cma_restarts == 8      # filled from the open16 budget row
    assert cfg.per_restart_evals == 1500
    assert cfg.cma_evals == 2500
    other = make_config("benchmark-optimizers",
                        {"lattice": "open8", "desk_scale": True}, {})
    assert other.restarts == 100
    assert other.cma_restarts == 16
    assert other.per_restart_evals is None
    assert set(DESK_SCALE_BUDGETS) == set(COMMANDS)


def test_validation_failures():
    bad = [
        ("ed", {"lattice": "open32"}),
        ("ed", {"model": "FM"}),
        ("ed", {"params": (1.0, 1.0)}),
        ("ed", {"k": 0}),
        ("ed", {"workers": 0}),
        ("benchmark-optimizers", {"optimizer": "adam"}),
        ("benchmark-optimizers", {"optimizers": ("trust", "adam")}),
        ("benchmark-optimizers", {"ansatz_kind": "QAOA"}),
        ("benchmark-optimizers", {"restarts": 0}),
        ("benchmark-optimizers", {"shots": 0}),
        ("benchmark-optimizers", {"trust_mode": "fuzzy"}),
        ("benchmark-ansatz", {"ansatz_kinds": ("HVA", "QAOA")}),
        ("sweep", {"axis": "jz"}),
        ("zne", {"p2": 1.5}),
        ("zne", {"eps0": 0.02}),  # eps1 missing
    ]
    for experiment, values in bad:
        with pytest.raises(ConfigError):
            make_config(experiment, values, {})


def test_config_dict_round_trip():
    cfg = make_config("zne", {"case": "open8-hva1", "p2": 0.01,
                              "exclude_lambdas": (5.0,), "twirl": True,
                              "seed": 7}, {})
    payload = config_dict(cfg)
    assert payload["experiment"] == "zne"
    assert "k" not in payload  # an ed-only key
    again = make_config("zne", payload, {})
    assert again == cfg


def test_config_dict_keeps_tuple_fields_as_lists():
    cfg = make_config("sweep", {"values": (0.5, 1.0)}, {})
    payload = config_dict(cfg)
    assert payload["values"] == [0.5, 1.0]
    assert json.loads(json.dumps(payload)) == payload


# --- config files ---------------------------------------------------------

def test_load_config_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text('{"lattice": "open4"}')
    assert load_config_file(str(path)) == {"lattice": "open4"}


def test_load_config_file_unwraps_manifests(tmp_path):
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps({"kind": "run-manifest",
                                "config": {"experiment": "ed", "k": 2},
                                "outputs": {}}))
    assert load_config_file(str(path)) == {"experiment": "ed", "k": 2}


def test_load_config_file_failures(tmp_path):
    with pytest.raises(ConfigError):
        load_config_file(str(tmp_path / "absent.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config_file(str(bad))
    arr = tmp_path / "arr.json"
    arr.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config_file(str(arr))


def test_resolve_output_dir_uses_env_root(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ROOT_ENV, str(tmp_path))
    cfg = RunConfig(experiment="ed", output_dir="runs/a")
    out = resolve_output_dir(cfg)
    assert out == tmp_path / "runs" / "a"
    assert out.is_dir()
    absolute = RunConfig(experiment="ed", output_dir=str(tmp_path / "b"))
    assert resolve_output_dir(absolute) == tmp_path / "b"


# --- checkpoints and CSV ----------------------------------------------------

def test_checkpoint_round_trip(tmp_path):
    ckpt = Checkpoint(tmp_path, "unit-a")
    assert ckpt.load() == {}
    res = OptResult((0.1, -0.2), -1.5, 40, ((1, -0.5), (7, -1.5)),
                    "eval-cutoff")
    ckpt.record("trust", 0, res)
    ckpt.record("cma", 2, res)
    loaded = Checkpoint(tmp_path, "unit-a").load()
    assert loaded == {"trust": {0: res}, "cma": {2: res}}
    # a different unit key does not see these records
    assert Checkpoint(tmp_path, "unit-b").load() == {}


def test_write_csv_uses_repr_for_floats(tmp_path):
    path = tmp_path / "t.csv"
    write_csv(path, ["a", "b", "c"], [(0.1, None, "x")])
    assert path.read_text() == "a,b,c\n0.1,,x\n"


# --- end-to-end subprocess-free runs ---------------------------------------

def test_ed_end_to_end(tmp_path, capsys):
    code = main(["ed", "--lattice", "open8", "--model", "GL+h",
                 "-o", str(tmp_path), "--k", "2"])
    assert code == 0
    payload = json.loads((tmp_path / "spectrum.json").read_text())
    assert payload["energies"][0] == pytest.approx(-4.7011, abs=5e-5)
    assert len(payload["energies"]) == 2
    assert payload["method"] == "dense"
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["kind"] == "run-manifest"
    assert manifest["config"]["lattice"] == "open8"
    assert set(manifest["outputs"]) == {"spectrum.json"}
    assert "ground energy" in capsys.readouterr().out


def test_rerun_from_manifest_reproduces_outputs(tmp_path):
    first = tmp_path / "a"
    second = tmp_path / "b"
    assert main(["ed", "--lattice", "open4", "-o", str(first)]) == 0
    assert main(["ed", "--config", str(first / "manifest.json"),
                 "-o", str(second)]) == 0
    assert (first / "spectrum.json").read_bytes() == \
        (second / "spectrum.json").read_bytes()


def test_config_error_exit_code(tmp_path, capsys):
    code = main(["ed", "--lattice", "open32", "-o", str(tmp_path)])
    assert code == 2
    assert "config error" in capsys.readouterr().err
    assert not (tmp_path / "manifest.json").exists()


def test_numerical_error_exit_code(tmp_path, capsys):
    code = main(["zne", "--case", "open4-hva1", "--theta", "1", "2", "3",
                 "--shots", "50", "--circuits-per-scheme", "1",
                 "-o", str(tmp_path)])
    assert code == 1
    assert "run failed" in capsys.readouterr().err


def test_benchmark_optimizers_end_to_end(tmp_path):
    code = main(["benchmark-optimizers", "--lattice", "open4",
                 "--ansatz-kind", "HVA", "--layers", "1",
                 "--optimizers", "trust", "spsa",
                 "--restarts", "2", "--per-restart-evals", "80",
                 "--repetitions", "2", "-o", str(tmp_path)])
    assert code == 0
    lines = (tmp_path / "optimizers.csv").read_text().splitlines()
    assert lines[0] == ("optimizer,repetition,restarts,error,energy,e0,"
                        "mean_evals,max_evals,total_evals")
    assert len(lines) == 1 + 4  # two optimizers x two repetitions
    traj = (tmp_path / "trajectories.csv").read_text().splitlines()
    assert traj[0] == ("optimizer,repetition,branch,restart,eval_index,"
                       "incumbent_value")
    assert len(traj) > 5
    best = json.loads((tmp_path / "best_theta.json").read_text())
    assert len(best["theta"]) == 6


def test_worker_count_does_not_change_results(tmp_path):
    args = ["benchmark-optimizers", "--lattice", "open4",
            "--ansatz-kind", "HVA", "--layers", "1",
            "--optimizers", "trust", "--restarts", "2",
            "--per-restart-evals", "60", "--repetitions", "2"]
    a, b = tmp_path / "w1", tmp_path / "w2"
    assert main(args + ["--workers", "1", "-o", str(a)]) == 0
    assert main(args + ["--workers", "2", "-o", str(b)]) == 0
    assert (a / "optimizers.csv").read_bytes() == \
        (b / "optimizers.csv").read_bytes()


def test_benchmark_resumes_from_checkpoints(tmp_path, capsys):
    args = ["benchmark-optimizers", "--lattice", "open4",
            "--ansatz-kind", "HVA", "--layers", "1",
            "--optimizers", "trust", "--restarts", "3",
            "--per-restart-evals", "60", "-o", str(tmp_path)]
    assert main(args) == 0
    first = (tmp_path / "optimizers.csv").read_bytes()
    ckpts = list((tmp_path / "checkpoints").glob("*.jsonl"))
    assert len(ckpts) == 1
    n_lines = len(ckpts[0].read_text().splitlines())
    assert n_lines == 3
    # second run replays entirely from the checkpoint file
    assert main(args) == 0
    assert (tmp_path / "optimizers.csv").read_bytes() == first
    assert len(ckpts[0].read_text().splitlines()) == n_lines


def test_benchmark_ansatz_end_to_end(tmp_path):
    code = main(["benchmark-ansatz", "--lattice", "open4",
                 "--ansatz-kinds", "HVA", "HEA-CZ",
                 "--layers-grid", "1", "2", "--restarts", "2",
                 "--per-restart-evals", "80", "-o", str(tmp_path)])
    assert code == 0
    lines = (tmp_path / "ansatz.csv").read_text().splitlines()
    assert lines[0] == "ansatz,layers,param_count,error,energy,e0,total_evals"
    assert len(lines) == 1 + 4
    counts = {tuple(line.split(",")[:3]) for line in lines[1:]}
    assert ("HVA", "1", "6") in counts
    assert ("HEA-CZ", "2", "32") in counts


def test_sweep_end_to_end(tmp_path):
    code = main(["sweep", "--lattice", "open4", "--model", "GL+h",
                 "--ansatz-kind", "HVA", "--layers", "1",
                 "--axis", "j_perp", "--values", "0.5", "1.0",
                 "--restarts", "2", "--per-restart-evals", "100",
                 "--cma-restarts", "1", "--cma-evals", "200",
                 "-o", str(tmp_path)])
    assert code == 0
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0].startswith("axis,value,energy,e0,error,x,y,z,"
                               "cxx,cyy,czz")
    assert len(lines) == 3


def test_zne_end_to_end_with_readout(tmp_path):
    code = main(["zne", "--case", "open4-hva1", "--theta",
                 "0.1", "0.2", "0.3", "0.1", "0.2", "0.3",
                 "--p2", "0.01", "--eps0", "0.02", "--eps1", "0.05",
                 "--shots", "100", "--circuits-per-scheme", "1",
                 "--calibration-shots", "500", "-o", str(tmp_path)])
    assert code == 0
    reg = json.loads((tmp_path / "regression.json").read_text())
    assert reg["case"] == "open4-hva1"
    assert reg["intercept_ci"][0] <= reg["intercept"] <= reg["intercept_ci"][1]
    rows = (tmp_path / "zne_rows.csv").read_text().splitlines()
    assert rows[0] == "lambda,scheme_id,instance,raw_energy,mitigated_energy"
    assert len(rows) == 1 + 12
    confusion = (tmp_path / "confusion.csv").read_text().splitlines()
    assert len(confusion) == 1 + 16
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert set(manifest["outputs"]) == {"zne_rows.csv", "regression.json",
                                        "confusion.csv"}
