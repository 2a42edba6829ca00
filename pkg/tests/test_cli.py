import json
import os

import numpy as np
import pytest

from bequp.cli import main
from bequp.harness import CSV_HEADER
from bequp.network import Instance, build_segmented_topology


def test_run_writes_csv_and_summary(tmp_path, capsys):
    out = tmp_path / "results.csv"
    rc = main(["run", "--algo", "uniform-link", "--noise", "depolarizing",
               "--n", "2", "--trials", "2", "--seed", "4", "--out", str(out)])
    assert rc == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 3
    assert "uniform-link" in capsys.readouterr().out


def test_run_trace_export(tmp_path):
    out = tmp_path / "results.csv"
    trace_dir = tmp_path / "traces"
    rc = main(["run", "--algo", "bequp-link", "--noise", "bit_flip",
               "--n", "2", "--trials", "1", "--seed", "4",
               "--out", str(out), "--trace", str(trace_dir)])
    assert rc == 0
    files = sorted(os.listdir(trace_dir))
    assert files == ["bequp-link_fidelity_bit_flip_n2_t0.jsonl"]
    with open(trace_dir / files[0], encoding="utf-8") as fh:
        rounds = [json.loads(line) for line in fh]
    assert {"t", "k_hat", "k_tilde", "chosen_link", "feedback",
            "N_after"} <= set(rounds[-1])


def test_config_file_with_flag_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"algos": ["uniform-link"], "trials": 3,
                               "noise": "dephasing", "n": "2"}))
    out = tmp_path / "results.csv"
    rc = main(["run", "--config", str(cfg), "--trials", "1", "--out", str(out)])
    assert rc == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 2  # the explicit flag overrode the file's trials
    assert "dephasing" in lines[1]


def test_metric_flag_selects_skf_algorithms(tmp_path):
    out = tmp_path / "results.csv"
    rc = main(["run", "--metric", "skf", "--noise", "depolarizing", "--n", "2",
               "--trials", "1", "--seed", "6", "--algo",
               "uniform-link,bequp-link", "--out", str(out)])
    assert rc == 0
    body = out.read_text(encoding="utf-8")
    assert ",skf," in body


def test_bench_subcommand_emits_samples(capsys):
    rc = main(["bench", "--p", "0.95", "--samples", "4", "--seed", "1"])
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "sample_idx,p_hat,a_hat,cost_units"
    assert len(lines) == 5
    assert all(line.endswith(",1") for line in lines[1:])


def test_bench_subcommand_requires_target(capsys):
    assert main(["bench", "--samples", "2"]) == 2


def test_bench_ptm_mode_with_noise(capsys):
    rc = main(["bench", "--noise", "amplitude_damping", "--fidelity", "0.99",
               "--samples", "2", "--mode", "ptm", "--t0", "50", "--seed", "2"])
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 3


def test_gaps_subcommand(tmp_path, capsys):
    inst = Instance(build_segmented_topology([2]), np.array([0.9, 0.8]))
    path = tmp_path / "inst.json"
    path.write_text(inst.to_json())
    rc = main(["gaps", str(path)])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["best_path"] == 0
    assert doc["path_gaps"][1] == pytest.approx(0.117783036, abs=1e-8)
